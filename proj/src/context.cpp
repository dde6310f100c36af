#include "tsvad/context.hpp"

#include <algorithm>
#include <cmath>

#include "tsvad/scores.hpp"

namespace tsvad {

namespace {

// Window start positions along one axis: the stride grid plus a final
// border-clamped window when the grid does not land on it.
std::vector<std::uint32_t> window_positions(std::uint32_t extent, std::uint32_t k,
                                            std::uint32_t stride) {
    std::vector<std::uint32_t> positions;
    for (std::uint32_t p = 0; p + k <= extent; p += stride) positions.push_back(p);
    const std::uint32_t last = extent - k;
    if (positions.empty() || positions.back() != last) positions.push_back(last);
    return positions;
}

double bilinear_clamped(const Frame& frame, double y, double x, std::uint32_t c) {
    const double yc = std::clamp(y, 0.0, static_cast<double>(frame.height - 1));
    const double xc = std::clamp(x, 0.0, static_cast<double>(frame.width - 1));
    const auto y0 = static_cast<std::uint32_t>(yc);
    const auto x0 = static_cast<std::uint32_t>(xc);
    const std::uint32_t y1 = std::min(y0 + 1, frame.height - 1);
    const std::uint32_t x1 = std::min(x0 + 1, frame.width - 1);
    const double fy = yc - y0;
    const double fx = xc - x0;
    const double top = (1.0 - fx) * frame.at(y0, x0, c) + fx * frame.at(y0, x1, c);
    const double bottom = (1.0 - fx) * frame.at(y1, x0, c) + fx * frame.at(y1, x1, c);
    return (1.0 - fy) * top + fy * bottom;
}

}  // namespace

ErrorMap error_map(const Frame& gt, const Frame& pred, double lambda_l1) {
    if (!gt.same_shape(pred)) throw InvalidArgumentError("error_map: frame shapes differ");
    ErrorMap map;
    map.height = gt.height;
    map.width = gt.width;
    map.lambda_l1 = lambda_l1;
    map.values.assign(static_cast<std::size_t>(gt.height) * gt.width, 0.0);
    std::size_t px = 0;
    for (std::size_t p = 0; p < map.values.size(); ++p) {
        double e = 0.0;
        for (std::uint32_t c = 0; c < gt.channels; ++c, ++px) {
            const double d = static_cast<double>(gt.pixels[px]) - pred.pixels[px];
            e += d * d + lambda_l1 * std::fabs(d);
        }
        map.values[p] = e;
    }
    return map;
}

double fle(const Frame& gt, const Frame& pred, double lambda_l1) {
    const ErrorMap map = error_map(gt, pred, lambda_l1);
    double sum = 0.0;
    for (double v : map.values) sum += v;
    return sum;
}

double mean_error(const ErrorMap& map) {
    double sum = 0.0;
    for (double v : map.values) sum += v;
    return sum / static_cast<double>(map.values.size());
}

double mle(const ErrorMap& map, std::uint32_t k, std::uint32_t stride, LocalErrorMode mode) {
    if (k == 0 || stride == 0) throw InvalidArgumentError("mle: k and stride must be positive");
    if (k > map.height || k > map.width) {
        throw InvalidArgumentError("mle: window size " + std::to_string(k) +
                                   " exceeds map extent " + std::to_string(map.height) + "x" +
                                   std::to_string(map.width));
    }
    const auto ys = window_positions(map.height, k, stride);
    const auto xs = window_positions(map.width, k, stride);
    const double inv_area = 1.0 / (static_cast<double>(k) * k);

    double best = -1.0;
    for (const std::uint32_t y0 : ys) {
        for (const std::uint32_t x0 : xs) {
            double local;
            if (mode == LocalErrorMode::kWindowMean) {
                double sum = 0.0;
                for (std::uint32_t y = y0; y < y0 + k; ++y) {
                    const double* row = map.values.data() + static_cast<std::size_t>(y) * map.width;
                    for (std::uint32_t x = x0; x < x0 + k; ++x) sum += row[x];
                }
                local = sum * inv_area;
            } else {
                double mx = 0.0;
                for (std::uint32_t y = y0; y < y0 + k; ++y) {
                    const double* row = map.values.data() + static_cast<std::size_t>(y) * map.width;
                    for (std::uint32_t x = x0; x < x0 + k; ++x) mx = std::max(mx, row[x]);
                }
                local = mx;
            }
            best = std::max(best, local);
        }
    }
    return best;
}

Frame flip_horizontal(const Frame& frame) {
    Frame out = frame;
    for (std::uint32_t y = 0; y < frame.height; ++y) {
        for (std::uint32_t x = 0; x < frame.width; ++x) {
            for (std::uint32_t c = 0; c < frame.channels; ++c) {
                out.at(y, x, c) = frame.at(y, frame.width - 1 - x, c);
            }
        }
    }
    return out;
}

Frame rotate_bilinear(const Frame& frame, double angle_deg) {
    const double theta = angle_deg * 3.14159265358979323846 / 180.0;
    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);
    const double cy = (frame.height - 1) * 0.5;
    const double cx = (frame.width - 1) * 0.5;

    Frame out = make_frame(frame.height, frame.width, frame.channels);
    for (std::uint32_t y = 0; y < frame.height; ++y) {
        for (std::uint32_t x = 0; x < frame.width; ++x) {
            // inverse map: rotate the output pixel back into the source image
            const double dx = x - cx;
            const double dy = y - cy;
            const double sx = cx + cos_t * dx + sin_t * dy;
            const double sy = cy - sin_t * dx + cos_t * dy;
            for (std::uint32_t c = 0; c < frame.channels; ++c) {
                out.at(y, x, c) = static_cast<float>(bilinear_clamped(frame, sy, sx, c));
            }
        }
    }
    return out;
}

SimulatedVideo simulate_anomalous_video(const std::vector<Frame>& frames,
                                        const SimulationConfig& cfg) {
    const std::uint32_t n = static_cast<std::uint32_t>(frames.size());
    if (cfg.nseg == 0 || cfg.offset == 0) {
        throw InvalidArgumentError("simulate: nseg and offset must be positive");
    }
    if (cfg.ratio <= 0.0 || cfg.ratio >= 1.0) {
        throw InvalidArgumentError("simulate: ratio must lie in (0,1)");
    }
    if (n < 2 * cfg.nseg) {
        throw InvalidArgumentError("simulate: video too short for " + std::to_string(cfg.nseg) +
                                   " segments");
    }
    const std::uint32_t segment_len = n / cfg.nseg;
    if (cfg.offset >= segment_len) {
        throw InvalidArgumentError("simulate: offset must be smaller than the segment length");
    }

    Rng rng(cfg.seed);
    const double angle = rng.uniform(cfg.angle_min_deg, cfg.angle_max_deg);

    // one augmentation per source frame; blends reuse them
    std::vector<Frame> augmented;
    augmented.reserve(n);
    for (const auto& f : frames) augmented.push_back(rotate_bilinear(flip_horizontal(f), angle));

    SimulatedVideo out;
    out.angle_deg = angle;
    out.frames.resize(n);
    out.labels.assign(n, 0);

    const double m = static_cast<double>(segment_len);
    for (std::uint32_t i = 1; i <= n; ++i) {
        const std::uint32_t j =
            std::min((i - 1) / segment_len, cfg.nseg - 1);  // segment index of frame i
        const std::uint32_t start =
            static_cast<std::uint32_t>(std::floor(m * (j + 0.5 - 0.5 * cfg.ratio))) + 1;
        const std::uint32_t end = start + static_cast<std::uint32_t>(std::floor(m * cfg.ratio));

        Frame& dst = out.frames[i - 1];
        if (i >= start && i < end && i + cfg.offset <= n) {
            const Frame& a = augmented[i - 1];
            const Frame& b = augmented[i - 1 + cfg.offset];
            dst = make_frame(a.height, a.width, a.channels);
            for (std::size_t p = 0; p < dst.pixels.size(); ++p) {
                dst.pixels[p] = 0.5f * (a.pixels[p] + b.pixels[p]);
            }
            out.labels[i - 1] = 1;
        } else {
            dst = augmented[i - 1];
        }
    }
    return out;
}

Frame persistence_predict(std::span<const Frame> history) {
    if (history.empty()) throw InvalidArgumentError("persistence_predict: empty history");
    return history.back();
}

std::vector<double> context_scores(const std::vector<Frame>& frames,
                                   const std::optional<std::vector<Frame>>& predictions,
                                   std::uint32_t rate, std::uint32_t k, std::uint32_t stride,
                                   double lambda_l1, LocalErrorMode mode,
                                   const FramePredictor& predictor) {
    if (frames.empty()) throw InvalidArgumentError("context_scores: empty video");
    if (rate == 0) throw InvalidArgumentError("context_scores: rate must be positive");
    const std::size_t n = frames.size();

    std::size_t first_scored = 0;
    if (!predictions.has_value()) {
        if (n <= rate) {
            throw InvalidArgumentError("context_scores: video shorter than the sampling rate");
        }
        first_scored = rate;
    } else if (predictions->size() != n) {
        throw InvalidArgumentError("context_scores: prediction count does not match video length");
    }

    const FramePredictor& predict =
        predictor ? predictor : FramePredictor([](std::span<const Frame> h) {
            return persistence_predict(h);
        });

    std::vector<double> scores(n, 0.0);
    for (std::size_t t = first_scored; t < n; ++t) {
        Frame pred;
        if (predictions.has_value()) {
            pred = (*predictions)[t];
        } else {
            pred = predict(std::span<const Frame>(frames.data(), t - rate + 1));
        }
        scores[t] = mle(error_map(frames[t], pred, lambda_l1), k, stride, mode);
    }
    for (std::size_t t = 0; t < first_scored; ++t) scores[t] = scores[first_scored];
    return scores;
}

std::uint32_t argmax_window(const std::vector<WindowCandidateScore>& by_k) {
    if (by_k.empty()) throw InvalidArgumentError("argmax_window: no candidates");
    auto sorted = by_k;
    std::sort(sorted.begin(), sorted.end(),
              [](const WindowCandidateScore& a, const WindowCandidateScore& b) {
                  return a.k < b.k;
              });
    std::uint32_t best_k = sorted.front().k;
    double best_auc = sorted.front().auc;
    for (const auto& row : sorted) {
        if (row.auc > best_auc) {  // strict: ties keep the smallest k
            best_auc = row.auc;
            best_k = row.k;
        }
    }
    return best_k;
}

WindowSelection select_window(const std::vector<std::vector<Frame>>& train_videos,
                              const std::vector<std::uint32_t>& candidates,
                              const SimulationConfig& cfg, double lambda_l1, std::uint32_t rate,
                              LocalErrorMode mode, const FramePredictor& predictor) {
    if (candidates.empty()) throw InvalidArgumentError("select_window: no window candidates");
    if (train_videos.empty()) throw InvalidArgumentError("select_window: no training videos");

    // simulate once per video with a per-video seed, then score per candidate
    Rng master(cfg.seed);
    std::vector<SimulatedVideo> simulated;
    simulated.reserve(train_videos.size());
    for (const auto& video : train_videos) {
        SimulationConfig per_video = cfg;
        per_video.seed = master.next_u64();
        simulated.push_back(simulate_anomalous_video(video, per_video));
    }

    std::vector<std::uint32_t> sorted_k = candidates;
    std::sort(sorted_k.begin(), sorted_k.end());

    WindowSelection selection;
    for (const std::uint32_t k : sorted_k) {
        const std::uint32_t stride = (k + 1) / 2;
        std::vector<double> all_scores;
        std::vector<std::uint8_t> all_labels;
        for (const auto& sim : simulated) {
            const auto scores = context_scores(sim.frames, std::nullopt, rate, k, stride,
                                               lambda_l1, mode, predictor);
            all_scores.insert(all_scores.end(), scores.begin(), scores.end());
            all_labels.insert(all_labels.end(), sim.labels.begin(), sim.labels.end());
        }
        selection.by_k.push_back({k, roc_auc(all_scores, all_labels)});
    }
    selection.chosen_k = argmax_window(selection.by_k);
    return selection;
}

}  // namespace tsvad
