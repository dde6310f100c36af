#include "tsvad/knowledge_base.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "tsvad/byte_io.hpp"

namespace tsvad {

namespace {

constexpr char kKbMagic[] = "ILSH-KB";  // written with trailing NUL, 8 bytes
constexpr std::uint16_t kKbVersion = 1;

}  // namespace

KnowledgeBase::KnowledgeBase(std::uint32_t num_tables, std::uint32_t code_len,
                             std::array<std::uint8_t, 32> fingerprint)
    : code_len_(code_len), fingerprint_(fingerprint), tables_(num_tables) {
    if (num_tables == 0 || code_len == 0) {
        throw InvalidArgumentError("KnowledgeBase: table count and code length must be positive");
    }
}

double KnowledgeBase::max_score() const { return std::sqrt(static_cast<double>(code_len_)); }

void KnowledgeBase::insert(const HashCodeSet& set) {
    if (set.num_codes() != num_tables() || set.code_len != code_len_) {
        throw InvalidArgumentError("insert: code set shape does not match knowledge base");
    }
    for (std::uint32_t b = 0; b < num_tables(); ++b) {
        const auto& code = set.codes[b];
        const BinaryKey key = binarize(code);
        auto [it, inserted] = tables_[b].try_emplace(key);
        Bucket& bucket = it->second;
        if (inserted) {
            bucket.cnt = 1;
            bucket.val = code;
        } else {
            const double n = static_cast<double>(bucket.cnt);
            for (std::uint32_t j = 0; j < code_len_; ++j) {
                bucket.val[j] = (bucket.val[j] * n + code[j]) / (n + 1.0);
            }
            bucket.cnt += 1;
        }
    }
}

RetrievalResult KnowledgeBase::retrieve(const HashCodeSet& set) const {
    if (set.num_codes() != num_tables() || set.code_len != code_len_) {
        throw InvalidArgumentError("retrieve: code set shape does not match knowledge base");
    }
    RetrievalResult result;
    result.score = max_score();
    result.per_table.resize(num_tables());
    for (std::uint32_t b = 0; b < num_tables(); ++b) {
        auto& entry = result.per_table[b];
        entry.key = binarize(set.codes[b]);
        const auto it = tables_[b].find(entry.key);
        if (it == tables_[b].end()) continue;
        double sq = 0.0;
        for (std::uint32_t j = 0; j < code_len_; ++j) {
            const double d = it->second.val[j] - set.codes[b][j];
            sq += d * d;
        }
        entry.hit = true;
        entry.distance = std::sqrt(sq);
        if (entry.distance < result.score) result.score = entry.distance;
    }
    return result;
}

std::uint64_t KnowledgeBase::total_count(std::uint32_t b) const {
    std::uint64_t sum = 0;
    for (const auto& [key, bucket] : tables_[b]) sum += bucket.cnt;
    return sum;
}

bool KnowledgeBase::restore_bucket(std::uint32_t b, BinaryKey key, Bucket bucket) {
    auto [it, inserted] = tables_[b].emplace(std::move(key), std::move(bucket));
    return inserted;
}

KnowledgeBase build_kb(const HashEncoder& encoder, const std::vector<FeatureVector>& features) {
    if (features.empty()) throw InvalidArgumentError("build_kb: no training features");
    std::vector<const FeatureVector*> order;
    order.reserve(features.size());
    for (const auto& f : features) order.push_back(&f);
    std::sort(order.begin(), order.end(), [](const FeatureVector* a, const FeatureVector* b) {
        if (a->video_id != b->video_id) return a->video_id < b->video_id;
        return a->frame_index < b->frame_index;
    });

    KnowledgeBase kb(encoder.num_layers(), encoder.code_len, encoder_fingerprint(encoder));
    for (const auto* f : order) kb.insert(encode(encoder, *f));
    return kb;
}

RetrievalResult retrieve_score(const KnowledgeBase& kb, const HashEncoder& encoder,
                               const FeatureVector& feature) {
    if (encoder_fingerprint(encoder) != kb.fingerprint()) {
        throw InvalidStateError(
            "retrieve_score: encoder fingerprint does not match the knowledge base");
    }
    return kb.retrieve(encode(encoder, feature));
}

std::vector<std::uint8_t> kb_to_bytes(const KnowledgeBase& kb) {
    ByteWriter w;
    w.bytes(kKbMagic, 8);
    w.u16(kKbVersion);
    w.u32(kb.num_tables());
    w.u32(kb.code_len());
    w.bytes(kb.fingerprint().data(), 32);
    for (std::uint32_t b = 0; b < kb.num_tables(); ++b) {
        const auto& table = kb.table(b);
        std::vector<const BinaryKey*> keys;
        keys.reserve(table.size());
        for (const auto& [key, bucket] : table) keys.push_back(&key);
        std::sort(keys.begin(), keys.end(),
                  [](const BinaryKey* a, const BinaryKey* b) { return a->bytes < b->bytes; });
        w.u64(table.size());
        for (const auto* key : keys) {
            const Bucket& bucket = table.at(*key);
            w.bytes(key->bytes.data(), key->bytes.size());
            w.u64(bucket.cnt);
            for (double v : bucket.val) w.f32(static_cast<float>(v));
        }
    }
    return w.data();
}

KnowledgeBase kb_from_bytes(const std::vector<std::uint8_t>& bytes, const std::string& source) {
    ByteReader r(bytes.data(), bytes.size(), source);
    char magic[8];
    r.bytes(magic, 8, "magic");
    if (std::memcmp(magic, kKbMagic, 8) != 0) r.fail("bad magic, not a knowledge base file");
    const std::uint16_t version = r.u16("version");
    if (version != kKbVersion) r.fail("unsupported kb version " + std::to_string(version));

    const std::uint32_t num_tables = r.u32("table count");
    const std::uint32_t code_len = r.u32("code length");
    if (num_tables == 0 || code_len == 0) r.fail("nonpositive dimension in header");
    std::array<std::uint8_t, 32> fingerprint;
    r.bytes(fingerprint.data(), 32, "encoder fingerprint");

    KnowledgeBase kb(num_tables, code_len, fingerprint);
    const std::size_t key_bytes = (code_len + 7) / 8;
    for (std::uint32_t b = 0; b < num_tables; ++b) {
        const std::uint64_t bucket_count = r.u64("bucket count");
        for (std::uint64_t i = 0; i < bucket_count; ++i) {
            BinaryKey key;
            key.nbits = code_len;
            key.bytes.resize(key_bytes);
            r.bytes(key.bytes.data(), key_bytes, "bucket key");
            Bucket bucket;
            bucket.cnt = r.u64("bucket count field");
            if (bucket.cnt == 0) r.fail("bucket with zero count");
            bucket.val.resize(code_len);
            for (auto& v : bucket.val) v = r.f32("bucket value");
            if (!kb.restore_bucket(b, std::move(key), std::move(bucket))) {
                r.fail("duplicate bucket key in table " + std::to_string(b));
            }
        }
    }
    if (!r.exhausted()) r.fail("trailing bytes after last table");
    return kb;
}

void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path) {
    write_file_bytes(path, kb_to_bytes(kb));
}

KnowledgeBase load_kb(const std::filesystem::path& path) {
    return kb_from_bytes(read_file_bytes(path), path.string());
}

}  // namespace tsvad
