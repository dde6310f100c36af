#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "tsvad/byte_io.hpp"
#include "tsvad/knowledge_base.hpp"

using namespace tsvad;

namespace {

HashCodeSet code_set(std::vector<std::vector<double>> codes) {
    HashCodeSet set;
    set.code_len = static_cast<std::uint32_t>(codes.front().size());
    set.codes = std::move(codes);
    return set;
}

std::array<std::uint8_t, 32> zero_fingerprint() { return {}; }

std::filesystem::path temp_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "tsvad_test_kb";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("insert folds codes with one key into a running mean") {
    KnowledgeBase kb(1, 2, zero_fingerprint());
    kb.insert(code_set({{0.6, 0.8}}));
    kb.insert(code_set({{0.8, 0.6}}));  // same key "11"
    REQUIRE(kb.bucket_count(0) == 1u);
    const auto& [key, bucket] = *kb.table(0).begin();
    CHECK(unpack_bits(key) == std::vector<bool>{true, true});
    CHECK(bucket.cnt == 2u);
    CHECK(bucket.val[0] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(bucket.val[1] == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("the first insert under a key stores the code unchanged") {
    KnowledgeBase kb(1, 2, zero_fingerprint());
    kb.insert(code_set({{0.2, 0.7}}));
    REQUIRE(kb.bucket_count(0) == 1u);
    const auto& [key, bucket] = *kb.table(0).begin();
    CHECK(unpack_bits(key) == std::vector<bool>{false, true});
    CHECK(bucket.cnt == 1u);
    CHECK(bucket.val == std::vector<double>{0.2, 0.7});
}

TEST_CASE("insert rejects mismatched code shapes") {
    KnowledgeBase kb(2, 4, zero_fingerprint());
    CHECK_THROWS_AS(kb.insert(code_set({{0.5, 0.5, 0.5, 0.5}})), InvalidArgumentError);
    CHECK_THROWS_AS(kb.insert(code_set({{0.5, 0.5}, {0.5, 0.5}})), InvalidArgumentError);
}

TEST_CASE("bucket means match exact summation for any insertion order") {
    Rng rng(17);
    // a fixed multiset of codes, inserted in several permutations
    std::vector<std::vector<double>> multiset;
    for (int i = 0; i < 200; ++i) {
        std::vector<double> code(4);
        // few distinct keys so buckets accumulate long runs
        for (auto& v : code) v = rng.uniform01() < 0.7 ? rng.uniform(0.5, 0.9)
                                                       : rng.uniform(0.1, 0.5);
        multiset.push_back(std::move(code));
    }

    oracle::BucketReplay replay;
    for (const auto& code : multiset) replay.add(code_set({code}));

    std::vector<std::size_t> order(multiset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int permutation = 0; permutation < 5; ++permutation) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.uniform_int(i)]);
        }
        KnowledgeBase kb(1, 4, zero_fingerprint());
        for (const std::size_t i : order) kb.insert(code_set({multiset[i]}));

        std::uint64_t total = 0;
        for (const auto& [key, bucket] : kb.table(0)) {
            const auto expected = replay.mean(0, key.bytes);
            for (std::size_t j = 0; j < expected.size(); ++j) {
                CHECK(bucket.val[j] == doctest::Approx(expected[j]).epsilon(1e-6));
            }
            CHECK(bucket.cnt == replay.count(0, key.bytes));
            total += bucket.cnt;
        }
        CHECK(total == multiset.size());
    }
}

TEST_CASE("build collapses identical features into single buckets") {
    const HashEncoder enc = init_encoder(4, 3, 4, 5);
    std::vector<FeatureVector> features;
    for (int i = 0; i < 10; ++i) {
        FeatureVector f;
        f.values = {0.5, -0.25, 1.0, 2.0};
        f.video_id = "v";
        f.frame_index = static_cast<std::uint32_t>(i + 1);
        features.push_back(std::move(f));
    }
    const KnowledgeBase kb = build_kb(enc, features);
    for (std::uint32_t b = 0; b < kb.num_tables(); ++b) {
        CHECK(kb.bucket_count(b) == 1u);
        CHECK(kb.table(b).begin()->second.cnt == 10u);
    }
}

TEST_CASE("build with a single feature stores its code in every table") {
    const HashEncoder enc = init_encoder(4, 2, 3, 6);
    FeatureVector f;
    f.values = {1.0, 2.0, 3.0, 4.0};
    f.video_id = "v";
    f.frame_index = 1;
    const KnowledgeBase kb = build_kb(enc, {f});
    const HashCodeSet codes = encode(enc, f);
    for (std::uint32_t b = 0; b < kb.num_tables(); ++b) {
        REQUIRE(kb.bucket_count(b) == 1u);
        CHECK(kb.table(b).begin()->second.val == codes.codes[b]);
    }
    CHECK_THROWS_AS(build_kb(enc, {}), InvalidArgumentError);
}

TEST_CASE("bucket census matches a brute-force key count") {
    const auto data = synth::make_cluster_dataset(16, 3, 6, 30, 0, 0, 0.4, 2025);
    const HashEncoder enc = init_encoder(16, 3, 6, 12);
    const KnowledgeBase kb = build_kb(enc, data.train);

    for (std::uint32_t b = 0; b < kb.num_tables(); ++b) {
        std::set<std::vector<std::uint8_t>> distinct;
        for (const auto& f : data.train) {
            distinct.insert(binarize(encode(enc, f).codes[b]).bytes);
        }
        CHECK(kb.bucket_count(b) == distinct.size());
        CHECK(kb.bucket_count(b) <= data.train.size());
        CHECK(kb.total_count(b) == data.train.size());
    }
}

TEST_CASE("a query equal to a stored representation scores zero") {
    KnowledgeBase kb(1, 2, zero_fingerprint());
    kb.insert(code_set({{0.6, 0.8}}));
    const RetrievalResult rr = kb.retrieve(code_set({{0.6, 0.8}}));
    CHECK(rr.score == 0.0);
    REQUIRE(rr.per_table.size() == 1u);
    CHECK(rr.per_table[0].hit);
}

TEST_CASE("an all-miss retrieval returns the miss penalty sqrt(R)") {
    KnowledgeBase kb(2, 2, zero_fingerprint());
    kb.insert(code_set({{0.6, 0.8}, {0.7, 0.7}}));  // keys 11, 11
    const RetrievalResult rr = kb.retrieve(code_set({{0.2, 0.3}, {0.1, 0.2}}));  // keys 00, 00
    CHECK(rr.score == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
    CHECK(rr.score == doctest::Approx(1.414214).epsilon(1e-6));
    CHECK_FALSE(rr.per_table[0].hit);
    CHECK_FALSE(rr.per_table[1].hit);
}

TEST_CASE("the score is the minimum over hits and misses") {
    // table 0 misses, table 1 hits at a known distance
    KnowledgeBase kb(2, 2, zero_fingerprint());
    kb.insert(code_set({{0.9, 0.9}, {0.6, 0.8}}));
    const RetrievalResult rr = kb.retrieve(code_set({{0.1, 0.1}, {0.6, 0.5}}));
    CHECK_FALSE(rr.per_table[0].hit);
    REQUIRE(rr.per_table[1].hit);
    CHECK(rr.per_table[1].distance == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(rr.score == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("retrieval scores are bounded and match a brute-force min-fold") {
    const auto data = synth::make_cluster_dataset(12, 3, 5, 20, 40, 0, 0.5, 77);
    const HashEncoder enc = init_encoder(12, 4, 5, 9);
    const KnowledgeBase kb = build_kb(enc, data.train);
    const double p_max = std::sqrt(5.0);

    for (const auto& f : data.test) {
        const RetrievalResult rr = kb.retrieve(encode(enc, f));
        CHECK(rr.score >= 0.0);
        CHECK(rr.score <= p_max);
        double brute = p_max;
        for (const auto& entry : rr.per_table) {
            if (entry.hit) brute = std::min(brute, entry.distance);
        }
        CHECK(rr.score == brute);
    }
}

TEST_CASE("every training feature retrieves below the miss penalty") {
    const auto data = synth::make_cluster_dataset(12, 3, 5, 20, 0, 0, 0.5, 78);
    const HashEncoder enc = init_encoder(12, 3, 6, 10);
    const KnowledgeBase kb = build_kb(enc, data.train);
    for (const auto& f : data.train) {
        CHECK(kb.retrieve(encode(enc, f)).score < kb.max_score());
    }
}

TEST_CASE("unrelated random features mostly miss every table") {
    // 16-bit keys leave the tables sparse, so far-away features rarely land
    // on an occupied bucket
    const auto data = synth::make_cluster_dataset(12, 3, 5, 20, 0, 0, 0.5, 79);
    const HashEncoder enc = init_encoder(12, 3, 16, 10);
    const KnowledgeBase kb = build_kb(enc, data.train);

    Rng rng(4444);
    std::size_t full_misses = 0;
    const int trials = 100;
    for (int i = 0; i < trials; ++i) {
        FeatureVector f;
        f.values.resize(12);
        for (auto& v : f.values) v = rng.normal(0.0, 5.0);  // far from the clusters
        if (kb.retrieve(encode(enc, f)).score == kb.max_score()) ++full_misses;
    }
    CHECK(full_misses > trials / 2);
}

TEST_CASE("retrieve_score enforces the encoder fingerprint") {
    const auto data = synth::make_cluster_dataset(8, 2, 4, 10, 0, 0, 0.3, 5);
    const HashEncoder enc = init_encoder(8, 2, 4, 1);
    const KnowledgeBase kb = build_kb(enc, data.train);
    CHECK_NOTHROW(retrieve_score(kb, enc, data.train[0]));
    const HashEncoder other = init_encoder(8, 2, 4, 2);
    CHECK_THROWS_AS(retrieve_score(kb, other, data.train[0]), InvalidStateError);
}

TEST_CASE("knowledge base files round-trip byte-identically") {
    const auto data = synth::make_cluster_dataset(10, 3, 4, 15, 0, 0, 0.4, 55);
    const HashEncoder enc = init_encoder(10, 3, 5, 3);
    const KnowledgeBase kb = build_kb(enc, data.train);

    const auto path = temp_file("kb_roundtrip.bin");
    save_kb(kb, path);
    const KnowledgeBase loaded = load_kb(path);
    CHECK(loaded.num_tables() == kb.num_tables());
    CHECK(loaded.code_len() == kb.code_len());
    CHECK(loaded.fingerprint() == kb.fingerprint());
    CHECK(kb_to_bytes(loaded) == read_file_bytes(path));

    // rebuilding from the same inputs serializes identically
    const KnowledgeBase again = build_kb(enc, data.train);
    CHECK(kb_to_bytes(again) == kb_to_bytes(kb));
}

TEST_CASE("an empty knowledge base round-trips") {
    const KnowledgeBase kb(3, 7, zero_fingerprint());
    const auto bytes = kb_to_bytes(kb);
    const KnowledgeBase loaded = kb_from_bytes(bytes, "empty");
    CHECK(loaded.num_tables() == 3u);
    CHECK(loaded.code_len() == 7u);
    for (std::uint32_t b = 0; b < 3; ++b) CHECK(loaded.bucket_count(b) == 0u);
    CHECK(kb_to_bytes(loaded) == bytes);
}

TEST_CASE("truncated knowledge base files name the missing section") {
    KnowledgeBase kb(1, 2, zero_fingerprint());
    kb.insert(code_set({{0.6, 0.8}}));
    auto bytes = kb_to_bytes(kb);

    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    CHECK_THROWS_WITH_AS(kb_from_bytes(truncated, "t"), doctest::Contains("bucket value"),
                         FormatError);

    auto header_only = bytes;
    header_only.resize(20);
    CHECK_THROWS_WITH_AS(kb_from_bytes(header_only, "t"), doctest::Contains("offset"),
                         FormatError);

    std::vector<std::uint8_t> garbage{'b', 'a', 'd', '!', 0, 0, 0, 0, 0, 0};
    CHECK_THROWS_AS(kb_from_bytes(garbage, "t"), FormatError);
}
