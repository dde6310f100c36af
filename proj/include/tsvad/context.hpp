#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tsvad/frames.hpp"

namespace tsvad {

// Per-pixel recovery error of one frame, channels summed.
struct ErrorMap {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    double lambda_l1 = 1.0;
    std::vector<double> values;

    double at(std::uint32_t y, std::uint32_t x) const {
        return values[static_cast<std::size_t>(y) * width + x];
    }
};

// Local error of a window: mean of its entries (default) or its max. The max
// reading makes the window size irrelevant, so mean is the default; both are
// kept behind this switch.
enum class LocalErrorMode { kWindowMean, kWindowMax };

struct SimulationConfig {
    std::uint32_t nseg = 1;
    double ratio = 0.5;
    std::uint32_t offset = 2;
    double angle_min_deg = 2.0;
    double angle_max_deg = 5.0;
    std::uint64_t seed = 0;
};

struct SimulatedVideo {
    std::vector<Frame> frames;
    std::vector<std::uint8_t> labels;
    double angle_deg = 0.0;
};

// e(p) = sum over channels of (gt - pred)^2 + lambda_l1 * |gt - pred|.
ErrorMap error_map(const Frame& gt, const Frame& pred, double lambda_l1);

// Frame-level error: sum of all error map entries.
double fle(const Frame& gt, const Frame& pred, double lambda_l1);

// Mean error per pixel, the frame-level baseline the local maximum is
// compared against.
double mean_error(const ErrorMap& map);

// Maximum local error: k x k windows sliding with the given stride; the last
// window clamps to the border so edges stay covered.
double mle(const ErrorMap& map, std::uint32_t k, std::uint32_t stride,
           LocalErrorMode mode = LocalErrorMode::kWindowMean);

Frame flip_horizontal(const Frame& frame);

// Rotation about the frame center, bilinear sampling, out-of-bounds reads
// clamp to the nearest edge pixel.
Frame rotate_bilinear(const Frame& frame, double angle_deg);

// Pseudo-anomaly generator: every frame is flipped and rotated by one
// per-video random angle; frames inside the middle `ratio` fraction of each
// segment are blended with the frame `offset` steps ahead and labeled 1.
// Frames whose blend partner would fall past the end stay unblended, label 0.
SimulatedVideo simulate_anomalous_video(const std::vector<Frame>& frames,
                                        const SimulationConfig& cfg);

// Stand-in predictor: repeats the most recent frame.
Frame persistence_predict(std::span<const Frame> history);

using FramePredictor = std::function<Frame(std::span<const Frame> history)>;

// Per-frame context scores for one video. With no external predictions the
// predictor sees the frames up to t - rate and the first `rate` frames take
// the first computed score; with external predictions every frame is scored.
std::vector<double> context_scores(const std::vector<Frame>& frames,
                                   const std::optional<std::vector<Frame>>& predictions,
                                   std::uint32_t rate, std::uint32_t k, std::uint32_t stride,
                                   double lambda_l1,
                                   LocalErrorMode mode = LocalErrorMode::kWindowMean,
                                   const FramePredictor& predictor = nullptr);

struct WindowCandidateScore {
    std::uint32_t k = 0;
    double auc = 0.0;
};

struct WindowSelection {
    std::uint32_t chosen_k = 0;
    std::vector<WindowCandidateScore> by_k;
};

// AUC argmax over candidates; ties resolve to the smallest window.
std::uint32_t argmax_window(const std::vector<WindowCandidateScore>& by_k);

// Simulates anomalies on each training video, scores them with every candidate
// window size (stride = ceil(k/2)) and picks the micro-AUC argmax; ties go to
// the smallest k. A null predictor means persistence.
WindowSelection select_window(const std::vector<std::vector<Frame>>& train_videos,
                              const std::vector<std::uint32_t>& candidates,
                              const SimulationConfig& cfg, double lambda_l1, std::uint32_t rate,
                              LocalErrorMode mode = LocalErrorMode::kWindowMean,
                              const FramePredictor& predictor = nullptr);

}  // namespace tsvad
