#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <unordered_map>
#include <vector>

#include "tsvad/hash_encoder.hpp"

namespace tsvad {

// One hash-table bucket: how many codes hashed to this key and their running
// mean. The mean is accumulated in 64-bit floats and only rounded to 32-bit
// at serialization time.
struct Bucket {
    std::uint64_t cnt = 0;
    std::vector<double> val;
};

// Per-table retrieval detail: the queried key and, on a hit, the L2 distance
// between the query code and the stored knowledge representation.
struct RetrievalEntry {
    BinaryKey key;
    bool hit = false;
    double distance = 0.0;
};

struct RetrievalResult {
    double score = 0.0;  // min over hit distances, or the miss penalty sqrt(R)
    std::vector<RetrievalEntry> per_table;
};

// B hash tables mapping binary keys to buckets, plus the fingerprint of the
// encoder that produced every stored code. Construction is exclusive; after
// build the structure is immutable and reads may run concurrently.
class KnowledgeBase {
public:
    using Table = std::unordered_map<BinaryKey, Bucket, BinaryKeyHash>;

    KnowledgeBase(std::uint32_t num_tables, std::uint32_t code_len,
                  std::array<std::uint8_t, 32> fingerprint);

    std::uint32_t num_tables() const { return static_cast<std::uint32_t>(tables_.size()); }
    std::uint32_t code_len() const { return code_len_; }
    const std::array<std::uint8_t, 32>& fingerprint() const { return fingerprint_; }
    const Table& table(std::uint32_t b) const { return tables_[b]; }

    // Miss penalty: the maximal L2 distance between two codes in [0,1]^R.
    double max_score() const;

    // Bucket update per table b: new key starts at (1, h_b); an existing key
    // folds h_b into the running mean and increments the count.
    void insert(const HashCodeSet& set);

    RetrievalResult retrieve(const HashCodeSet& set) const;

    std::uint64_t bucket_count(std::uint32_t b) const { return tables_[b].size(); }
    std::uint64_t total_count(std::uint32_t b) const;

    // Used by deserialization; fails on duplicate keys.
    bool restore_bucket(std::uint32_t b, BinaryKey key, Bucket bucket);

private:
    std::uint32_t code_len_;
    std::array<std::uint8_t, 32> fingerprint_;
    std::vector<Table> tables_;
};

// Encodes every training feature in a fixed order (sorted by video_id, then
// frame_index) and inserts the codes.
KnowledgeBase build_kb(const HashEncoder& encoder, const std::vector<FeatureVector>& features);

// Checks the encoder fingerprint before scoring; a mismatch raises
// InvalidStateError because scores from a different encoder are meaningless.
RetrievalResult retrieve_score(const KnowledgeBase& kb, const HashEncoder& encoder,
                               const FeatureVector& feature);

// KB file: magic "ILSH-KB\0", version, B, R, fingerprint, then per table the
// bucket count followed by (packed key, cnt, val as 32-bit floats). Buckets are
// written sorted by key bytes so rebuilds serialize byte-identically.
std::vector<std::uint8_t> kb_to_bytes(const KnowledgeBase& kb);
KnowledgeBase kb_from_bytes(const std::vector<std::uint8_t>& bytes, const std::string& source);
void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path);
KnowledgeBase load_kb(const std::filesystem::path& path);

}  // namespace tsvad
