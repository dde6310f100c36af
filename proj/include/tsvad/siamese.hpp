#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tsvad/hash_encoder.hpp"

namespace tsvad {

// Anchor snippet plus a temporally close partner from the same video.
struct PositivePair {
    FeatureVector anchor;
    FeatureVector partner;
    std::uint32_t delta_t = 0;  // snippet-index offset, in [1, delta_max]
};

struct TrainConfig {
    double lambda_m = 0.64;
    double learning_rate = 1e-3;
    std::uint32_t epochs = 10;
    std::uint32_t batch_size = 64;
    std::uint32_t delta_max = 16;
    std::uint64_t seed = 0;
    bool use_negative_pairs = false;
    double lambda_neg = 0.5;
};

// Gradients mirroring HashLayer shapes, one entry per layer.
struct LayerGradient {
    std::vector<double> weight;
    std::vector<double> bias;
    std::vector<double> ln_gain;
    std::vector<double> ln_bias;
};

struct GradientSet {
    std::vector<LayerGradient> layers;

    void add_scaled(const GradientSet& other, double scale);
    double max_abs() const;
};

struct EpochStats {
    double mean_cosine = 0.0;
    double mean_mutual = 0.0;
    double mean_total = 0.0;
};

struct TrainResult {
    HashEncoder encoder;
    std::vector<EpochStats> trace;
};

// 1 - cos(a, b). Zero-norm input raises NumericError.
double cosine_loss(std::span<const double> a, std::span<const double> b);

// Mean pairwise cosine of distinct codes, scaled by 2 / (R * B * (B-1)).
double mutual_difference_loss(const std::vector<std::vector<double>>& codes);
double mutual_difference_loss(const HashCodeSet& set);

// Cosine loss of the concatenated codes plus lambda_m / 2 times the mutual
// difference losses of both branches.
double total_loss(const HashCodeSet& branch1, const HashCodeSet& branch2, double lambda_m);

// Negated cosine loss; pushes negative pairs apart when enabled.
double negative_pair_loss(std::span<const double> a, std::span<const double> b);

// For each anchor snippet with at least one later snippet in the same video,
// draws delta_t uniformly from {1 .. min(delta_max, remaining)}. Videos with a
// single snippet are skipped with a warning on stderr. Deterministic per seed.
std::vector<PositivePair> sample_positive_pairs(const std::vector<FeatureVector>& features,
                                                std::uint32_t delta_max, std::uint64_t seed);

// Exact analytic gradient of total_loss for one positive pair. The branches
// share parameters, so contributions from both branches are summed.
GradientSet loss_gradient(const HashEncoder& encoder, const FeatureVector& anchor,
                          const FeatureVector& partner, double lambda_m);
GradientSet loss_gradient(const HashEncoder& encoder, const PositivePair& pair, double lambda_m);

// Adam on the mean batch total_loss. Deterministic given config.seed: pair
// sampling, shuffling and gradient reduction all follow a fixed order.
TrainResult train(HashEncoder encoder, const std::vector<FeatureVector>& features,
                  const TrainConfig& config);

}  // namespace tsvad
