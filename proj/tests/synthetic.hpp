// Deterministic synthetic datasets shared by the unit and acceptance suites.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsvad/common.hpp"
#include "tsvad/frames.hpp"
#include "tsvad/hash_encoder.hpp"

namespace tsvad::synth {

// Clustered event features with temporal coherence: each "video" stays inside
// one cluster, so temporally close snippets are genuinely similar. Normal data
// comes from the first `normal_clusters` clusters, anomalies from one extra
// cluster. Within-cluster noise is deliberately large so an untrained encoder
// scatters a cluster across many buckets.
struct ClusterDataset {
    std::vector<FeatureVector> train;
    std::vector<FeatureVector> test;          // normals then anomalies
    std::vector<std::uint8_t> test_labels;
};

inline ClusterDataset make_cluster_dataset(std::uint32_t dim, std::uint32_t normal_clusters,
                                           std::uint32_t train_videos,
                                           std::uint32_t snippets_per_video,
                                           std::uint32_t test_normals,
                                           std::uint32_t test_anomalies, double noise,
                                           std::uint64_t seed) {
    Rng rng(seed);
    const std::uint32_t total_clusters = normal_clusters + 1;
    std::vector<std::vector<double>> centers(total_clusters, std::vector<double>(dim));
    for (auto& center : centers) {
        for (auto& v : center) v = rng.normal(0.0, 1.0);
    }

    auto sample = [&](std::uint32_t cluster) {
        std::vector<double> values(dim);
        for (std::uint32_t d = 0; d < dim; ++d) {
            values[d] = centers[cluster][d] + rng.normal(0.0, noise);
        }
        return values;
    };

    ClusterDataset data;
    for (std::uint32_t v = 0; v < train_videos; ++v) {
        const std::uint32_t cluster = v % normal_clusters;
        char id[16];
        std::snprintf(id, sizeof(id), "train%03u", v);
        for (std::uint32_t s = 0; s < snippets_per_video; ++s) {
            FeatureVector f;
            f.values = sample(cluster);
            f.video_id = id;
            f.frame_index = 8 * (s + 1);
            data.train.push_back(std::move(f));
        }
    }
    for (std::uint32_t i = 0; i < test_normals; ++i) {
        FeatureVector f;
        f.values = sample(i % normal_clusters);
        f.video_id = "test_normal";
        f.frame_index = 8 * (i + 1);
        data.test.push_back(std::move(f));
        data.test_labels.push_back(0);
    }
    for (std::uint32_t i = 0; i < test_anomalies; ++i) {
        FeatureVector f;
        f.values = sample(normal_clusters);  // the anomalous cluster
        f.video_id = "test_anomaly";
        f.frame_index = 8 * (i + 1);
        data.test.push_back(std::move(f));
        data.test_labels.push_back(1);
    }
    return data;
}

// Grayscale surveillance-style videos: a fixed background pattern, additive
// per-frame sensor noise and a soft square "walker" drifting at normal speed.
// Anomalous frames add a second, brighter blob moving fast.
struct BlobVideoConfig {
    std::uint32_t size = 256;
    std::uint32_t frames = 24;
    std::uint32_t blob = 16;          // anomalous blob side
    std::uint32_t walker = 24;        // normal object side
    double walker_speed = 1.0;        // px per frame
    double blob_speed = 4.0;
    double noise = 0.015;
    double walker_amp = 0.35;
    double blob_amp = 0.8;
    double flicker = 0.0;             // per-frame global illumination jitter
};

inline void add_soft_square(Frame& frame, double cy, double cx, std::uint32_t side,
                            double amplitude) {
    const double half = side / 2.0;
    const std::int64_t y0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(cy - half) - 1);
    const std::int64_t y1 =
        std::min<std::int64_t>(frame.height - 1, static_cast<std::int64_t>(cy + half) + 1);
    const std::int64_t x0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(cx - half) - 1);
    const std::int64_t x1 =
        std::min<std::int64_t>(frame.width - 1, static_cast<std::int64_t>(cx + half) + 1);
    for (std::int64_t y = y0; y <= y1; ++y) {
        for (std::int64_t x = x0; x <= x1; ++x) {
            const double dy = std::fabs(y - cy) / half;
            const double dx = std::fabs(x - cx) / half;
            if (dy <= 1.0 && dx <= 1.0) {
                const double weight = (1.0 - dy * dy) * (1.0 - dx * dx);
                auto& px = frame.at(static_cast<std::uint32_t>(y), static_cast<std::uint32_t>(x));
                px = static_cast<float>(std::min(1.0, px + amplitude * weight));
            }
        }
    }
}

// One video; anomalous == true adds the fast blob over the second half and
// fills `labels` accordingly.
inline std::vector<Frame> make_blob_video(const BlobVideoConfig& cfg, bool anomalous,
                                          std::uint64_t seed,
                                          std::vector<std::uint8_t>* labels = nullptr) {
    Rng rng(seed);
    const std::uint32_t n = cfg.size;

    // smooth static background
    Frame background = make_frame(n, n, 1);
    const double fy = rng.uniform(1.0, 3.0);
    const double fx = rng.uniform(1.0, 3.0);
    for (std::uint32_t y = 0; y < n; ++y) {
        for (std::uint32_t x = 0; x < n; ++x) {
            background.at(y, x) = static_cast<float>(
                0.45 + 0.1 * std::sin(fy * 6.2831853 * y / n) * std::cos(fx * 6.2831853 * x / n));
        }
    }

    const double walker_y = rng.uniform(0.3, 0.7) * n;
    double walker_x = rng.uniform(0.2, 0.4) * n;
    double blob_y = rng.uniform(0.25, 0.75) * n;
    double blob_x = rng.uniform(0.15, 0.3) * n;
    const std::uint32_t anomaly_start = cfg.frames / 2;

    std::vector<Frame> video;
    video.reserve(cfg.frames);
    if (labels != nullptr) labels->assign(cfg.frames, 0);
    for (std::uint32_t t = 0; t < cfg.frames; ++t) {
        Frame frame = background;
        const double gain = 1.0 + (cfg.flicker > 0.0 ? rng.normal(0.0, cfg.flicker) : 0.0);
        for (auto& px : frame.pixels) {
            px = static_cast<float>(
                std::clamp(px * gain + rng.normal(0.0, cfg.noise), 0.0, 1.0));
        }
        add_soft_square(frame, walker_y, walker_x, cfg.walker, cfg.walker_amp);
        walker_x += cfg.walker_speed;
        if (anomalous && t >= anomaly_start) {
            add_soft_square(frame, blob_y, blob_x, cfg.blob, cfg.blob_amp);
            blob_y += cfg.blob_speed * 0.5;
            blob_x += cfg.blob_speed;
            if (labels != nullptr) (*labels)[t] = 1;
        }
        video.push_back(std::move(frame));
    }
    return video;
}

}  // namespace tsvad::synth
