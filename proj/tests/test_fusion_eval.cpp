#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "tsvad/byte_io.hpp"
#include "tsvad/scores.hpp"

using namespace tsvad;

namespace {

ScoreSeries series(std::vector<double> scores, std::vector<std::uint8_t> labels = {},
                   std::string id = "v") {
    ScoreSeries s;
    s.video_id = std::move(id);
    s.scores = std::move(scores);
    s.labels = std::move(labels);
    return s;
}

std::filesystem::path temp_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "tsvad_test_scores";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("align holds each anchor score until the next anchor") {
    const std::vector<AnchoredScore> anchors{{4, 0.2}, {8, 0.6}};
    const ScoreSeries s = align_to_frames(anchors, 10, "v");
    // frames 1..3 take the first score, 4..7 hold anchor 4, 8..10 hold anchor 8
    const std::vector<double> expected{0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.6, 0.6, 0.6};
    CHECK(s.scores == expected);
}

TEST_CASE("align with a single anchor is constant") {
    const ScoreSeries s = align_to_frames({{5, 0.8}}, 8, "v");
    CHECK(s.scores == std::vector<double>(8, 0.8));
}

TEST_CASE("align with an anchor at every frame is the identity") {
    std::vector<AnchoredScore> anchors;
    std::vector<double> expected;
    for (std::uint32_t f = 1; f <= 6; ++f) {
        anchors.push_back({f, 0.1 * f});
        expected.push_back(0.1 * f);
    }
    CHECK(align_to_frames(anchors, 6, "v").scores == expected);
}

TEST_CASE("align rejects bad anchors") {
    CHECK_THROWS_AS(align_to_frames({}, 5, "v"), InvalidArgumentError);
    CHECK_THROWS_AS(align_to_frames({{3, 0.1}, {3, 0.2}}, 5, "v"), InvalidArgumentError);
    CHECK_THROWS_AS(align_to_frames({{9, 0.1}}, 5, "v"), InvalidArgumentError);
    CHECK_THROWS_AS(align_to_frames({{0, 0.1}}, 5, "v"), InvalidArgumentError);
}

TEST_CASE("minmax normalization maps the range onto [0,1]") {
    CHECK(minmax_normalize(series({2, 4, 6})).scores == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(minmax_normalize(series({3, 3, 3})).scores == std::vector<double>{0.0, 0.0, 0.0});
    CHECK(minmax_normalize(series({0.0, 0.25, 1.0})).scores ==
          std::vector<double>{0.0, 0.25, 1.0});
}

TEST_CASE("normalization preserves score orderings and AUC") {
    Rng rng(31);
    std::vector<double> scores(60);
    std::vector<std::uint8_t> labels(60);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = rng.normal();
        labels[i] = rng.uniform01() < 0.3 ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;
    const auto normalized = minmax_normalize(series(scores));
    CHECK(roc_auc(scores, labels) ==
          doctest::Approx(roc_auc(normalized.scores, labels)).epsilon(1e-12));
    const auto argmax_before =
        std::max_element(scores.begin(), scores.end()) - scores.begin();
    const auto argmax_after =
        std::max_element(normalized.scores.begin(), normalized.scores.end()) -
        normalized.scores.begin();
    CHECK(argmax_before == argmax_after);
}

TEST_CASE("gaussian smoothing preserves constants") {
    const auto smoothed = gaussian_smooth(series(std::vector<double>(20, 0.37)), 2.5);
    for (double v : smoothed.scores) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("unit impulse response matches the normalized kernel center") {
    std::vector<double> impulse(21, 0.0);
    impulse[10] = 1.0;
    const double sigma = 1.0;
    const auto smoothed = gaussian_smooth(series(impulse), sigma);

    // kernel oracle: radius ceil(3 sigma), weights exp(-j^2 / 2 sigma^2) / Z
    const int radius = 3;
    double z = 0.0;
    for (int j = -radius; j <= radius; ++j) z += std::exp(-0.5 * j * j / (sigma * sigma));
    CHECK(smoothed.scores[10] == doctest::Approx(1.0 / z).epsilon(1e-12));
    CHECK(1.0 / z == doctest::Approx(0.39894 / (0.39894 * z)).epsilon(1e-4));

    double sum = 0.0;
    for (double v : smoothed.scores) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));  // away from borders mass is conserved
}

TEST_CASE("smoothing never increases total variation") {
    Rng rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> scores(40);
        for (auto& v : scores) v = rng.uniform01();
        const auto smoothed = gaussian_smooth(series(scores), rng.uniform(0.5, 4.0));
        CHECK(oracle::total_variation(smoothed.scores) <=
              oracle::total_variation(scores) + 1e-12);
    }
}

TEST_CASE("fusion is the weighted elementwise sum") {
    CHECK(fuse(series({0.2}), series({0.3}), {1.0, 1.0}).scores[0] ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fuse(series({0.1}), series({0.4}), {2.0, 1.0}).scores[0] ==
          doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("fusion rejects nonpositive weights and mismatched series") {
    CHECK_THROWS_AS(fuse(series({0.1}), series({0.2}), {1.0, 0.0}), InvalidArgumentError);
    CHECK_THROWS_AS(fuse(series({0.1}), series({0.2}), {-1.0, 1.0}), InvalidArgumentError);
    CHECK_THROWS_AS(fuse(series({0.1, 0.2}), series({0.2}), {1.0, 1.0}), InvalidArgumentError);
    ScoreSeries other = series({0.5});
    other.video_id = "w";
    CHECK_THROWS_AS(fuse(series({0.1}), other, {1.0, 1.0}), InvalidArgumentError);
}

TEST_CASE("roc_auc reproduces the worked example") {
    const std::vector<double> scores{0.1, 0.4, 0.35, 0.8};
    const std::vector<std::uint8_t> labels{0, 0, 1, 1};
    CHECK(roc_auc(scores, labels) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(oracle::pair_count_auc(scores, labels) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("roc_auc hits the boundary values") {
    CHECK(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9},
                  std::vector<std::uint8_t>{0, 0, 1, 1}) == doctest::Approx(1.0));
    CHECK(roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5},
                  std::vector<std::uint8_t>{0, 1, 0, 1}) == doctest::Approx(0.5));
}

TEST_CASE("roc_auc needs both classes") {
    CHECK_THROWS_AS(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{1, 1}),
                    UndefinedMetricError);
    CHECK_THROWS_AS(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{0, 0}),
                    UndefinedMetricError);
}

TEST_CASE("roc_auc equals the quadratic pair-counting oracle exactly") {
    Rng rng(2718);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + rng.uniform_int(200);
        std::vector<double> scores(n);
        std::vector<std::uint8_t> labels(n);
        const bool coarse = trial % 2 == 0;  // force many ties on half the trials
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = coarse ? std::floor(rng.uniform01() * 4.0) : rng.normal();
            labels[i] = rng.uniform01() < 0.4 ? 1 : 0;
        }
        labels[0] = 1;
        if (n > 1) labels[1] = 0;
        CHECK(roc_auc(scores, labels) == oracle::pair_count_auc(scores, labels));
    }
}

TEST_CASE("roc_auc is invariant under strictly increasing transforms") {
    Rng rng(55);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 30;
        std::vector<double> scores(n), affine(n), cubic(n);
        std::vector<std::uint8_t> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = rng.normal();
            affine[i] = 2.0 * scores[i] + 1.0;
            cubic[i] = scores[i] * scores[i] * scores[i];
            labels[i] = i % 3 == 0 ? 1 : 0;
        }
        const double base = roc_auc(scores, labels);
        CHECK(std::fabs(roc_auc(affine, labels) - base) <= 1e-12);
        CHECK(std::fabs(roc_auc(cubic, labels) - base) <= 1e-12);
    }
}

TEST_CASE("score negation complements the AUC when there are no ties") {
    Rng rng(77);
    std::vector<double> scores(50);
    std::vector<std::uint8_t> labels(50);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = rng.normal();  // continuous draws, ties have measure zero
        labels[i] = i % 2 == 0 ? 1 : 0;
    }
    std::vector<double> negated(scores);
    for (auto& v : negated) v = -v;
    CHECK(roc_auc(scores, labels) + roc_auc(negated, labels) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("micro concatenates, macro averages per video") {
    const ScoreSeries v1 = series({0.1, 0.9}, {0, 1}, "v1");
    const ScoreSeries v2 = series({0.8, 0.7}, {0, 1}, "v2");
    CHECK(micro_auc({v1, v2}) == doctest::Approx(0.75).epsilon(1e-12));
    // oracle on the concatenation
    CHECK(oracle::pair_count_auc({0.1, 0.9, 0.8, 0.7}, {0, 1, 0, 1}) ==
          doctest::Approx(0.75).epsilon(1e-12));

    const MacroAucResult macro = macro_auc({v1, v2});
    CHECK(macro.value == doctest::Approx(0.5).epsilon(1e-12));  // (1.0 + 0.0) / 2
    REQUIRE(macro.per_video.size() == 2u);
    CHECK(macro.per_video[0].second == doctest::Approx(1.0));
    CHECK(macro.per_video[1].second == doctest::Approx(0.0));
}

TEST_CASE("micro of a single video equals its AUC") {
    const ScoreSeries v = series({0.3, 0.6, 0.2, 0.9}, {0, 1, 0, 1}, "v");
    CHECK(micro_auc({v}) == doctest::Approx(roc_auc(v.scores, v.labels)).epsilon(1e-15));
    const MacroAucResult macro = macro_auc({v});
    CHECK(macro.value == doctest::Approx(roc_auc(v.scores, v.labels)).epsilon(1e-15));
}

TEST_CASE("micro-AUC is invariant to dataset duplication") {
    const ScoreSeries v1 = series({0.2, 0.7, 0.4}, {0, 1, 0}, "v1");
    const ScoreSeries v2 = series({0.2, 0.7, 0.4}, {0, 1, 0}, "v2");
    const double once = micro_auc({v1});
    const double twice = micro_auc({v1, v2});
    CHECK(once == doctest::Approx(twice).epsilon(1e-12));
    // cross-check with the oracle on the duplicated concatenation
    CHECK(oracle::pair_count_auc({0.2, 0.7, 0.4, 0.2, 0.7, 0.4}, {0, 1, 0, 0, 1, 0}) ==
          doctest::Approx(once).epsilon(1e-12));
}

TEST_CASE("identical videos make macro equal micro") {
    const ScoreSeries v1 = series({0.2, 0.9, 0.1}, {0, 1, 0}, "a");
    const ScoreSeries v2 = series({0.2, 0.9, 0.1}, {0, 1, 0}, "b");
    CHECK(macro_auc({v1, v2}).value == doctest::Approx(micro_auc({v1, v2})).epsilon(1e-12));
}

TEST_CASE("macro excludes single-class videos and reports them") {
    const ScoreSeries good = series({0.1, 0.9}, {0, 1}, "good");
    const ScoreSeries all_normal = series({0.1, 0.2}, {0, 0}, "flat");
    const MacroAucResult macro = macro_auc({good, all_normal});
    CHECK(macro.value == doctest::Approx(1.0));
    REQUIRE(macro.excluded.size() == 1u);
    CHECK(macro.excluded[0] == "flat");
    CHECK_THROWS_AS(macro_auc({all_normal}), UndefinedMetricError);
}

TEST_CASE("score gap subtracts the class means") {
    CHECK(score_gap(std::vector<double>{0.2, 0.4, 0.8}, std::vector<std::uint8_t>{0, 0, 1}) ==
          doctest::Approx(0.5).epsilon(1e-12));
    // identical distributions cancel
    CHECK(score_gap(std::vector<double>{0.3, 0.3}, std::vector<std::uint8_t>{0, 1}) ==
          doctest::Approx(0.0));
    // shift invariance
    CHECK(score_gap(std::vector<double>{1.2, 1.4, 1.8}, std::vector<std::uint8_t>{0, 0, 1}) ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(score_gap(std::vector<double>{0.1}, std::vector<std::uint8_t>{1}),
                    UndefinedMetricError);
}

TEST_CASE("fusing a stream with itself leaves the AUC unchanged") {
    Rng rng(91);
    ScoreSeries s = series({}, {}, "v");
    for (int i = 0; i < 80; ++i) {
        s.scores.push_back(rng.uniform01());
        s.labels.push_back(rng.uniform01() < 0.3 ? 1 : 0);
    }
    s.labels[0] = 1;
    s.labels[1] = 0;
    const ScoreSeries doubled = fuse(s, s, {1.0, 1.0});  // a monotone transform
    CHECK(roc_auc(doubled.scores, s.labels) ==
          doctest::Approx(roc_auc(s.scores, s.labels)).epsilon(1e-12));
}

TEST_CASE("normalize-smooth-fuse keeps fused scores inside the weight budget") {
    Rng rng(14);
    std::vector<double> cr(50), kr(50);
    for (std::size_t i = 0; i < 50; ++i) {
        cr[i] = rng.normal(0, 5);
        kr[i] = rng.uniform(-2, 9);
    }
    const FusionWeights weights{1.5, 0.5};
    const ScoreSeries fused = fuse(gaussian_smooth(minmax_normalize(series(cr)), 3.0),
                                   gaussian_smooth(minmax_normalize(series(kr)), 3.0), weights);
    for (double v : fused.scores) {
        CHECK(v >= 0.0);
        CHECK(v <= weights.lambda_cr + weights.lambda_kr);
    }
}

TEST_CASE("score CSVs round-trip through write and read") {
    const std::vector<ScoreSeries> all{series({0.125, 0.5, 0.75}, {0, 1, 1}, "v1"),
                                       series({1.0 / 3.0, 0.2}, {0, 0}, "v2")};
    const auto path = temp_file("scores.csv");
    write_score_csv(path, all);
    const auto loaded = read_score_csv(path);
    REQUIRE(loaded.size() == 2u);
    CHECK(loaded[0].video_id == "v1");
    CHECK(loaded[0].labels == all[0].labels);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(loaded[0].scores[i] == doctest::Approx(all[0].scores[i]).epsilon(1e-9));
    }
    // a rewrite of the parsed data is byte-identical (stable formatting)
    const auto path2 = temp_file("scores2.csv");
    write_score_csv(path2, loaded);
    CHECK(read_file_bytes(path) == read_file_bytes(path2));
}

TEST_CASE("score CSV reader validates structure") {
    const auto path = temp_file("bad.csv");
    {
        std::ofstream out(path);
        out << "video_id,frame_index,score\nv,2,0.5\n";  // starts at frame 2
    }
    CHECK_THROWS_AS(read_score_csv(path), FormatError);
    {
        std::ofstream out(path);
        out << "nope\n";
    }
    CHECK_THROWS_AS(read_score_csv(path), FormatError);
}
