#include "tsvad/siamese.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>

namespace tsvad {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct LayerCache {
    std::vector<double> u;  // normalized pre-activation
    std::vector<double> h;  // sigmoid output
    double inv_sigma = 0.0;
};

struct BranchCache {
    std::vector<LayerCache> layers;
    std::vector<double> concat;
};

BranchCache forward_branch(const HashEncoder& enc, std::span<const double> x) {
    const std::uint32_t r = enc.code_len;
    BranchCache cache;
    cache.layers.resize(enc.layers.size());
    cache.concat.reserve(static_cast<std::size_t>(enc.layers.size()) * r);

    std::vector<double> z(r);
    for (std::size_t b = 0; b < enc.layers.size(); ++b) {
        const auto& layer = enc.layers[b];
        for (std::uint32_t j = 0; j < r; ++j) z[j] = layer.bias[j];
        for (std::uint32_t d = 0; d < enc.input_dim; ++d) {
            const double xd = x[d];
            const double* row = layer.weight.data() + static_cast<std::size_t>(d) * r;
            for (std::uint32_t j = 0; j < r; ++j) z[j] += row[j] * xd;
        }
        double mean = 0.0;
        for (std::uint32_t j = 0; j < r; ++j) mean += z[j];
        mean /= r;
        double var = 0.0;
        for (std::uint32_t j = 0; j < r; ++j) {
            const double c = z[j] - mean;
            var += c * c;
        }
        var /= r;

        auto& lc = cache.layers[b];
        lc.inv_sigma = 1.0 / std::sqrt(var + enc.ln_epsilon);
        lc.u.resize(r);
        lc.h.resize(r);
        for (std::uint32_t j = 0; j < r; ++j) {
            lc.u[j] = (z[j] - mean) * lc.inv_sigma;
            const double y = layer.ln_gain[j] * lc.u[j] + layer.ln_bias[j];
            lc.h[j] = 1.0 / (1.0 + std::exp(-y));
            if (!std::isfinite(lc.h[j])) throw NumericError("forward: non-finite hash code entry");
            cache.concat.push_back(lc.h[j]);
        }
    }
    return cache;
}

// Backpropagates dL/dh (one R-vector per layer) through sigmoid, layer norm and
// the linear map, accumulating into `out`.
void backward_branch(const HashEncoder& enc, std::span<const double> x, const BranchCache& cache,
                     const std::vector<std::vector<double>>& grad_h, GradientSet& out) {
    const std::uint32_t r = enc.code_len;
    std::vector<double> gy(r), gu(r), gz(r);
    for (std::size_t b = 0; b < enc.layers.size(); ++b) {
        const auto& layer = enc.layers[b];
        const auto& lc = cache.layers[b];
        auto& g = out.layers[b];

        for (std::uint32_t j = 0; j < r; ++j) {
            gy[j] = grad_h[b][j] * lc.h[j] * (1.0 - lc.h[j]);
            g.ln_bias[j] += gy[j];
            g.ln_gain[j] += gy[j] * lc.u[j];
            gu[j] = gy[j] * layer.ln_gain[j];
        }
        double mean_gu = 0.0, mean_guu = 0.0;
        for (std::uint32_t j = 0; j < r; ++j) {
            mean_gu += gu[j];
            mean_guu += gu[j] * lc.u[j];
        }
        mean_gu /= r;
        mean_guu /= r;
        for (std::uint32_t j = 0; j < r; ++j) {
            gz[j] = lc.inv_sigma * (gu[j] - mean_gu - lc.u[j] * mean_guu);
            g.bias[j] += gz[j];
        }
        for (std::uint32_t d = 0; d < enc.input_dim; ++d) {
            const double xd = x[d];
            double* row = g.weight.data() + static_cast<std::size_t>(d) * r;
            for (std::uint32_t j = 0; j < r; ++j) row[j] += xd * gz[j];
        }
    }
}

// Gradient of scale * (1 - cos(a, b)) added into ga and gb.
void add_cosine_grad(std::span<const double> a, std::span<const double> b, double scale,
                     std::vector<double>& ga, std::vector<double>& gb) {
    const double na = norm(a), nb = norm(b);
    if (na == 0.0 || nb == 0.0) throw NumericError("cosine gradient: zero-norm code");
    const double cos_ab = dot(a, b) / (na * nb);
    const double inv_cross = 1.0 / (na * nb);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ga[i] += scale * (cos_ab * a[i] / (na * na) - b[i] * inv_cross);
        gb[i] += scale * (cos_ab * b[i] / (nb * nb) - a[i] * inv_cross);
    }
}

// Gradient of scale * mutual_difference_loss added into per-layer grad_h.
void add_mutual_grad(const BranchCache& cache, double scale,
                     std::vector<std::vector<double>>& grad_h) {
    const std::size_t num_codes = cache.layers.size();
    if (num_codes < 2) return;
    const std::size_t r = cache.layers[0].h.size();
    const double kappa =
        2.0 / (static_cast<double>(r) * static_cast<double>(num_codes) * (num_codes - 1.0));

    std::vector<double> norms(num_codes);
    for (std::size_t i = 0; i < num_codes; ++i) {
        norms[i] = norm(cache.layers[i].h);
        if (norms[i] == 0.0) throw NumericError("mutual gradient: zero-norm code");
    }
    for (std::size_t i = 0; i < num_codes; ++i) {
        for (std::size_t j = 0; j < num_codes; ++j) {
            if (j == i) continue;
            const auto& hi = cache.layers[i].h;
            const auto& hj = cache.layers[j].h;
            const double cos_ij = dot(hi, hj) / (norms[i] * norms[j]);
            const double c = scale * kappa / norms[i];
            for (std::size_t t = 0; t < r; ++t) {
                grad_h[i][t] += c * (hj[t] / norms[j] - cos_ij * hi[t] / norms[i]);
            }
        }
    }
}

GradientSet zeroed_gradients(const HashEncoder& enc) {
    GradientSet g;
    g.layers.resize(enc.layers.size());
    for (auto& lg : g.layers) {
        lg.weight.assign(static_cast<std::size_t>(enc.input_dim) * enc.code_len, 0.0);
        lg.bias.assign(enc.code_len, 0.0);
        lg.ln_gain.assign(enc.code_len, 0.0);
        lg.ln_bias.assign(enc.code_len, 0.0);
    }
    return g;
}

std::vector<std::vector<double>> zeroed_code_grads(std::size_t num_layers, std::size_t r) {
    return std::vector<std::vector<double>>(num_layers, std::vector<double>(r, 0.0));
}

struct InstanceStats {
    double cosine = 0.0;
    double mutual = 0.0;  // mean of the two branch losses
    double total = 0.0;
};

// One training instance: positive pair, optional negative partner. Accumulates
// the objective gradient into `acc` and reports the loss components.
InstanceStats accumulate_instance(const HashEncoder& enc, const FeatureVector& anchor,
                                  const FeatureVector& partner, const FeatureVector* negative,
                                  double lambda_m, double lambda_neg, GradientSet& acc) {
    const std::size_t num_layers = enc.layers.size();
    const std::size_t r = enc.code_len;

    const BranchCache a = forward_branch(enc, anchor.values);
    const BranchCache p = forward_branch(enc, partner.values);

    InstanceStats stats;
    stats.cosine = cosine_loss(a.concat, p.concat);
    double mutual_sum = 0.0;
    if (num_layers >= 2) {
        std::vector<std::vector<double>> codes_a, codes_p;
        for (const auto& lc : a.layers) codes_a.push_back(lc.h);
        for (const auto& lc : p.layers) codes_p.push_back(lc.h);
        mutual_sum = mutual_difference_loss(codes_a) + mutual_difference_loss(codes_p);
    }
    stats.mutual = 0.5 * mutual_sum;
    stats.total = stats.cosine + lambda_m * 0.5 * mutual_sum;

    std::vector<double> grad_la(a.concat.size(), 0.0);
    std::vector<double> grad_lp(p.concat.size(), 0.0);
    add_cosine_grad(a.concat, p.concat, 1.0, grad_la, grad_lp);

    std::vector<std::vector<double>> grad_ha = zeroed_code_grads(num_layers, r);
    std::vector<std::vector<double>> grad_hp = zeroed_code_grads(num_layers, r);
    for (std::size_t b = 0; b < num_layers; ++b) {
        for (std::size_t j = 0; j < r; ++j) {
            grad_ha[b][j] += grad_la[b * r + j];
            grad_hp[b][j] += grad_lp[b * r + j];
        }
    }
    if (num_layers >= 2 && lambda_m != 0.0) {
        add_mutual_grad(a, lambda_m * 0.5, grad_ha);
        add_mutual_grad(p, lambda_m * 0.5, grad_hp);
    }

    if (negative != nullptr && lambda_neg != 0.0) {
        const BranchCache n = forward_branch(enc, negative->values);
        const double neg_loss = negative_pair_loss(a.concat, n.concat);
        stats.total += lambda_neg * neg_loss;
        // negative term is -(1 - cos), so flip the sign of the cosine gradient
        std::vector<double> grad_la_neg(a.concat.size(), 0.0);
        std::vector<double> grad_ln(n.concat.size(), 0.0);
        add_cosine_grad(a.concat, n.concat, -lambda_neg, grad_la_neg, grad_ln);
        for (std::size_t b = 0; b < num_layers; ++b) {
            for (std::size_t j = 0; j < r; ++j) grad_ha[b][j] += grad_la_neg[b * r + j];
        }
        std::vector<std::vector<double>> grad_hn(num_layers, std::vector<double>(r, 0.0));
        for (std::size_t b = 0; b < num_layers; ++b) {
            for (std::size_t j = 0; j < r; ++j) grad_hn[b][j] = grad_ln[b * r + j];
        }
        backward_branch(enc, negative->values, n, grad_hn, acc);
    }

    backward_branch(enc, anchor.values, a, grad_ha, acc);
    backward_branch(enc, partner.values, p, grad_hp, acc);
    return stats;
}

// Features grouped by video, snippets ordered by frame index. Ordering is
// sorted so training and knowledge-base construction see a fixed data order.
std::vector<std::vector<const FeatureVector*>> group_by_video(
    const std::vector<FeatureVector>& features) {
    std::map<std::string, std::vector<const FeatureVector*>> groups;
    for (const auto& f : features) groups[f.video_id].push_back(&f);
    std::vector<std::vector<const FeatureVector*>> out;
    out.reserve(groups.size());
    for (auto& [id, vec] : groups) {
        std::sort(vec.begin(), vec.end(), [](const FeatureVector* a, const FeatureVector* b) {
            return a->frame_index < b->frame_index;
        });
        out.push_back(std::move(vec));
    }
    return out;
}

struct IndexPair {
    const FeatureVector* anchor;
    const FeatureVector* partner;
    std::uint32_t delta_t;
    std::size_t video_index;
};

std::vector<IndexPair> sample_index_pairs(
    const std::vector<std::vector<const FeatureVector*>>& videos, std::uint32_t delta_max,
    Rng& rng, bool warn_single) {
    std::vector<IndexPair> pairs;
    for (std::size_t vi = 0; vi < videos.size(); ++vi) {
        const auto& video = videos[vi];
        if (video.size() < 2) {
            if (warn_single && !video.empty()) {
                std::cerr << "warning: video '" << video.front()->video_id
                          << "' has a single snippet, skipped for pair sampling\n";
            }
            continue;
        }
        const std::size_t last = video.size() - 1;
        for (std::size_t t = 0; t < last; ++t) {
            const std::uint64_t max_dt = std::min<std::uint64_t>(delta_max, last - t);
            const std::uint32_t dt = static_cast<std::uint32_t>(1 + rng.uniform_int(max_dt));
            pairs.push_back({video[t], video[t + dt], dt, vi});
        }
    }
    return pairs;
}

template <typename T>
void shuffle_deterministic(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
        std::swap(v[i - 1], v[j]);
    }
}

struct AdamState {
    std::vector<double> m, v;
};

void adam_step(std::vector<double>& param, const std::vector<double>& grad, AdamState& state,
               double lr, std::uint64_t t) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < param.size(); ++i) {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

void GradientSet::add_scaled(const GradientSet& other, double scale) {
    for (std::size_t b = 0; b < layers.size(); ++b) {
        auto& dst = layers[b];
        const auto& src = other.layers[b];
        for (std::size_t i = 0; i < dst.weight.size(); ++i) dst.weight[i] += scale * src.weight[i];
        for (std::size_t i = 0; i < dst.bias.size(); ++i) dst.bias[i] += scale * src.bias[i];
        for (std::size_t i = 0; i < dst.ln_gain.size(); ++i) dst.ln_gain[i] += scale * src.ln_gain[i];
        for (std::size_t i = 0; i < dst.ln_bias.size(); ++i) dst.ln_bias[i] += scale * src.ln_bias[i];
    }
}

double GradientSet::max_abs() const {
    double m = 0.0;
    for (const auto& lg : layers) {
        for (double v : lg.weight) m = std::max(m, std::fabs(v));
        for (double v : lg.bias) m = std::max(m, std::fabs(v));
        for (double v : lg.ln_gain) m = std::max(m, std::fabs(v));
        for (double v : lg.ln_bias) m = std::max(m, std::fabs(v));
    }
    return m;
}

double cosine_loss(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || a.size() != b.size()) {
        throw InvalidArgumentError("cosine_loss: codes must have equal nonzero lengths");
    }
    const double na = norm(a), nb = norm(b);
    if (na == 0.0 || nb == 0.0) throw NumericError("cosine_loss: zero-norm code");
    return 1.0 - dot(a, b) / (na * nb);
}

double mutual_difference_loss(const std::vector<std::vector<double>>& codes) {
    const std::size_t num_codes = codes.size();
    if (num_codes < 2) throw InvalidArgumentError("mutual_difference_loss: needs at least 2 codes");
    const std::size_t r = codes[0].size();
    for (const auto& c : codes) {
        if (c.size() != r) throw InvalidArgumentError("mutual_difference_loss: ragged code set");
    }
    std::vector<double> norms(num_codes);
    for (std::size_t i = 0; i < num_codes; ++i) {
        norms[i] = norm(codes[i]);
        if (norms[i] == 0.0) throw NumericError("mutual_difference_loss: zero-norm code");
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < num_codes; ++j) {
        for (std::size_t i = j + 1; i < num_codes; ++i) {
            sum += dot(codes[i], codes[j]) / (norms[i] * norms[j]);
        }
    }
    return 2.0 / (static_cast<double>(r) * static_cast<double>(num_codes) * (num_codes - 1.0)) * sum;
}

double mutual_difference_loss(const HashCodeSet& set) { return mutual_difference_loss(set.codes); }

double total_loss(const HashCodeSet& branch1, const HashCodeSet& branch2, double lambda_m) {
    if (branch1.num_codes() != branch2.num_codes() || branch1.code_len != branch2.code_len) {
        throw InvalidArgumentError("total_loss: branch shapes differ");
    }
    const double lc = cosine_loss(concat_codes(branch1), concat_codes(branch2));
    if (lambda_m == 0.0) return lc;
    return lc + lambda_m * 0.5 *
                    (mutual_difference_loss(branch1) + mutual_difference_loss(branch2));
}

double negative_pair_loss(std::span<const double> a, std::span<const double> b) {
    return -cosine_loss(a, b);
}

std::vector<PositivePair> sample_positive_pairs(const std::vector<FeatureVector>& features,
                                                std::uint32_t delta_max, std::uint64_t seed) {
    if (delta_max == 0) throw InvalidArgumentError("sample_positive_pairs: delta_max must be positive");
    const auto videos = group_by_video(features);
    Rng rng(seed);
    const auto index_pairs = sample_index_pairs(videos, delta_max, rng, /*warn_single=*/true);
    std::vector<PositivePair> out;
    out.reserve(index_pairs.size());
    for (const auto& ip : index_pairs) out.push_back({*ip.anchor, *ip.partner, ip.delta_t});
    return out;
}

GradientSet loss_gradient(const HashEncoder& encoder, const FeatureVector& anchor,
                          const FeatureVector& partner, double lambda_m) {
    if (anchor.values.size() != encoder.input_dim || partner.values.size() != encoder.input_dim) {
        throw InvalidArgumentError("loss_gradient: feature dimension mismatch");
    }
    GradientSet grad = zeroed_gradients(encoder);
    accumulate_instance(encoder, anchor, partner, nullptr, lambda_m, 0.0, grad);
    if (!std::isfinite(grad.max_abs())) throw NumericError("loss_gradient: non-finite gradient");
    return grad;
}

GradientSet loss_gradient(const HashEncoder& encoder, const PositivePair& pair, double lambda_m) {
    return loss_gradient(encoder, pair.anchor, pair.partner, lambda_m);
}

TrainResult train(HashEncoder encoder, const std::vector<FeatureVector>& features,
                  const TrainConfig& config) {
    if (config.learning_rate < 0.0 || config.epochs == 0 || config.batch_size == 0 ||
        config.delta_max == 0) {
        throw InvalidArgumentError("train: config values must be positive");
    }
    const auto videos = group_by_video(features);
    std::size_t usable = 0;
    for (const auto& v : videos) {
        if (v.size() >= 2) ++usable;
    }
    if (usable == 0) throw InvalidArgumentError("train: no video with at least 2 snippets");

    bool negatives = config.use_negative_pairs;
    if (negatives && videos.size() < 2) {
        std::cerr << "warning: negative pairs requested but only one video; disabled\n";
        negatives = false;
    }

    // flat list of snippets per video for negative sampling
    std::vector<std::size_t> video_of_snippet;
    std::vector<const FeatureVector*> all_snippets;
    for (std::size_t vi = 0; vi < videos.size(); ++vi) {
        for (const auto* f : videos[vi]) {
            all_snippets.push_back(f);
            video_of_snippet.push_back(vi);
        }
    }

    std::vector<AdamState> state_w(encoder.layers.size()), state_b(encoder.layers.size()),
        state_g(encoder.layers.size()), state_bb(encoder.layers.size());
    for (std::size_t b = 0; b < encoder.layers.size(); ++b) {
        const std::size_t wsize = encoder.layers[b].weight.size();
        state_w[b] = {std::vector<double>(wsize, 0.0), std::vector<double>(wsize, 0.0)};
        state_b[b] = {std::vector<double>(encoder.code_len, 0.0), std::vector<double>(encoder.code_len, 0.0)};
        state_g[b] = state_b[b];
        state_bb[b] = state_b[b];
    }

    Rng rng(config.seed);
    TrainResult result;
    std::uint64_t step = 0;

    for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        auto pairs = sample_index_pairs(videos, config.delta_max, rng, /*warn_single=*/epoch == 0);
        shuffle_deterministic(pairs, rng);

        EpochStats stats;
        std::size_t seen = 0;
        for (std::size_t begin = 0; begin < pairs.size(); begin += config.batch_size) {
            const std::size_t end = std::min(pairs.size(), begin + config.batch_size);
            GradientSet acc = zeroed_gradients(encoder);
            for (std::size_t i = begin; i < end; ++i) {
                const FeatureVector* negative = nullptr;
                if (negatives) {
                    // rejection-draw a snippet from a different video
                    std::size_t idx;
                    do {
                        idx = static_cast<std::size_t>(rng.uniform_int(all_snippets.size()));
                    } while (video_of_snippet[idx] == pairs[i].video_index);
                    negative = all_snippets[idx];
                }
                const InstanceStats s =
                    accumulate_instance(encoder, *pairs[i].anchor, *pairs[i].partner, negative,
                                        config.lambda_m, config.lambda_neg, acc);
                stats.mean_cosine += s.cosine;
                stats.mean_mutual += s.mutual;
                stats.mean_total += s.total;
                ++seen;
            }
            const double inv = 1.0 / static_cast<double>(end - begin);
            ++step;
            for (std::size_t b = 0; b < encoder.layers.size(); ++b) {
                auto& lg = acc.layers[b];
                for (auto& v : lg.weight) v *= inv;
                for (auto& v : lg.bias) v *= inv;
                for (auto& v : lg.ln_gain) v *= inv;
                for (auto& v : lg.ln_bias) v *= inv;
                auto& layer = encoder.layers[b];
                adam_step(layer.weight, lg.weight, state_w[b], config.learning_rate, step);
                adam_step(layer.bias, lg.bias, state_b[b], config.learning_rate, step);
                adam_step(layer.ln_gain, lg.ln_gain, state_g[b], config.learning_rate, step);
                adam_step(layer.ln_bias, lg.ln_bias, state_bb[b], config.learning_rate, step);
            }
        }
        if (seen > 0) {
            stats.mean_cosine /= static_cast<double>(seen);
            stats.mean_mutual /= static_cast<double>(seen);
            stats.mean_total /= static_cast<double>(seen);
        }
        result.trace.push_back(stats);
    }
    result.encoder = std::move(encoder);
    return result;
}

}  // namespace tsvad
