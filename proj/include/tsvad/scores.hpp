#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tsvad/common.hpp"

namespace tsvad {

// Per-frame anomaly scores for one video, optionally labeled. An empty labels
// vector means no labels; otherwise it matches scores in length.
struct ScoreSeries {
    std::string video_id;
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;

    bool has_labels() const { return !labels.empty(); }
};

struct FusionWeights {
    double lambda_cr = 1.0;
    double lambda_kr = 1.0;
};

// Snippet score anchored at its last frame (1-based).
struct AnchoredScore {
    std::uint32_t frame_index = 0;
    double score = 0.0;
};

// Expands snippet scores to a per-frame series: each frame holds the score of
// the latest anchor at or before it; frames before the first anchor take the
// first score.
ScoreSeries align_to_frames(const std::vector<AnchoredScore>& anchored,
                            std::uint32_t video_length, std::string video_id);

// Per-video (x - min) / (max - min); a constant series maps to all zeros.
ScoreSeries minmax_normalize(const ScoreSeries& series);

// 1-D convolution with a normalized Gaussian kernel, radius ceil(3 sigma),
// reflect-padded boundaries.
ScoreSeries gaussian_smooth(const ScoreSeries& series, double sigma);

// Late fusion: lambda_cr * cr + lambda_kr * kr, elementwise. Weights must be
// positive.
ScoreSeries fuse(const ScoreSeries& cr, const ScoreSeries& kr, const FusionWeights& weights);

// Mann-Whitney rank statistic: P(score_pos > score_neg) + 0.5 P(tie).
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// AUC of all series concatenated into one.
double micro_auc(const std::vector<ScoreSeries>& series);

struct MacroAucResult {
    double value = 0.0;
    std::vector<std::pair<std::string, double>> per_video;
    std::vector<std::string> excluded;  // videos lacking one of the classes
};

// Unweighted mean of per-video AUCs. Single-class videos are excluded and
// reported; with no eligible video the metric is undefined.
MacroAucResult macro_auc(const std::vector<ScoreSeries>& series);

// mean(scores | label = 1) - mean(scores | label = 0).
double score_gap(std::span<const double> scores, std::span<const std::uint8_t> labels);
double score_gap(const std::vector<ScoreSeries>& series);

// Score CSV: header video_id,frame_index,score[,label]; frame_index 1-based
// and contiguous per video.
void write_score_csv(const std::filesystem::path& path, const std::vector<ScoreSeries>& series);
std::vector<ScoreSeries> read_score_csv(const std::filesystem::path& path);

std::string format_double(double v);

}  // namespace tsvad
