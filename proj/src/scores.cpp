#include "tsvad/scores.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace tsvad {

ScoreSeries align_to_frames(const std::vector<AnchoredScore>& anchored,
                            std::uint32_t video_length, std::string video_id) {
    if (anchored.empty()) throw InvalidArgumentError("align_to_frames: no anchored scores");
    if (video_length == 0) throw InvalidArgumentError("align_to_frames: zero video length");
    for (std::size_t i = 0; i < anchored.size(); ++i) {
        if (anchored[i].frame_index == 0 || anchored[i].frame_index > video_length) {
            throw InvalidArgumentError("align_to_frames: anchor outside the video");
        }
        if (i > 0 && anchored[i].frame_index <= anchored[i - 1].frame_index) {
            throw InvalidArgumentError("align_to_frames: anchors must be strictly increasing");
        }
    }

    ScoreSeries series;
    series.video_id = std::move(video_id);
    series.scores.resize(video_length);
    std::size_t a = 0;
    for (std::uint32_t f = 1; f <= video_length; ++f) {
        while (a + 1 < anchored.size() && anchored[a + 1].frame_index <= f) ++a;
        // frames before the first anchor hold the first score
        series.scores[f - 1] = (f < anchored[0].frame_index) ? anchored[0].score
                                                             : anchored[a].score;
    }
    return series;
}

ScoreSeries minmax_normalize(const ScoreSeries& series) {
    if (series.scores.empty()) throw InvalidArgumentError("minmax_normalize: empty series");
    const auto [mn_it, mx_it] = std::minmax_element(series.scores.begin(), series.scores.end());
    const double mn = *mn_it, mx = *mx_it;
    ScoreSeries out = series;
    if (mx == mn) {
        std::fill(out.scores.begin(), out.scores.end(), 0.0);
        return out;
    }
    const double inv = 1.0 / (mx - mn);
    for (auto& s : out.scores) s = (s - mn) * inv;
    return out;
}

ScoreSeries gaussian_smooth(const ScoreSeries& series, double sigma) {
    if (sigma <= 0.0) throw InvalidArgumentError("gaussian_smooth: sigma must be positive");
    if (series.scores.empty()) throw InvalidArgumentError("gaussian_smooth: empty series");

    const auto radius = static_cast<std::int64_t>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (std::int64_t j = -radius; j <= radius; ++j) {
        kernel[j + radius] = std::exp(-0.5 * (static_cast<double>(j) * j) / (sigma * sigma));
        sum += kernel[j + radius];
    }
    for (auto& w : kernel) w /= sum;

    const auto n = static_cast<std::int64_t>(series.scores.size());
    auto reflect = [n](std::int64_t i) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i - 1;
            else i = 2 * n - 1 - i;
        }
        return i;
    };

    ScoreSeries out = series;
    for (std::int64_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::int64_t j = -radius; j <= radius; ++j) {
            acc += kernel[j + radius] * series.scores[reflect(i + j)];
        }
        out.scores[i] = acc;
    }
    return out;
}

ScoreSeries fuse(const ScoreSeries& cr, const ScoreSeries& kr, const FusionWeights& weights) {
    if (weights.lambda_cr <= 0.0 || weights.lambda_kr <= 0.0) {
        throw InvalidArgumentError("fuse: fusion weights must be positive");
    }
    if (cr.scores.size() != kr.scores.size() || cr.video_id != kr.video_id) {
        throw InvalidArgumentError("fuse: series must cover the same video");
    }
    ScoreSeries out;
    out.video_id = cr.video_id;
    out.scores.resize(cr.scores.size());
    for (std::size_t i = 0; i < out.scores.size(); ++i) {
        out.scores[i] = weights.lambda_cr * cr.scores[i] + weights.lambda_kr * kr.scores[i];
    }
    out.labels = cr.has_labels() ? cr.labels : kr.labels;
    return out;
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw InvalidArgumentError("roc_auc: scores and labels must have equal nonzero length");
    }
    std::size_t n_pos = 0;
    for (auto l : labels) n_pos += (l != 0);
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw UndefinedMetricError("roc_auc: needs both a positive and a negative label");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks over tied groups, accumulate positive ranks
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t t = i; t <= j; ++t) {
            if (labels[order[t]] != 0) rank_sum_pos += avg_rank;
        }
        i = j + 1;
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1.0);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

void concat_labeled(const std::vector<ScoreSeries>& series, std::vector<double>& scores,
                    std::vector<std::uint8_t>& labels) {
    for (const auto& s : series) {
        if (!s.has_labels()) {
            throw UndefinedMetricError("evaluation: series '" + s.video_id + "' has no labels");
        }
        scores.insert(scores.end(), s.scores.begin(), s.scores.end());
        labels.insert(labels.end(), s.labels.begin(), s.labels.end());
    }
}

}  // namespace

double micro_auc(const std::vector<ScoreSeries>& series) {
    if (series.empty()) throw InvalidArgumentError("micro_auc: no series");
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    concat_labeled(series, scores, labels);
    return roc_auc(scores, labels);
}

MacroAucResult macro_auc(const std::vector<ScoreSeries>& series) {
    if (series.empty()) throw InvalidArgumentError("macro_auc: no series");
    MacroAucResult result;
    double sum = 0.0;
    for (const auto& s : series) {
        if (!s.has_labels()) {
            throw UndefinedMetricError("macro_auc: series '" + s.video_id + "' has no labels");
        }
        const bool has_pos = std::find(s.labels.begin(), s.labels.end(), 1) != s.labels.end();
        const bool has_neg = std::find(s.labels.begin(), s.labels.end(), 0) != s.labels.end();
        if (!has_pos || !has_neg) {
            result.excluded.push_back(s.video_id);
            continue;
        }
        const double auc = roc_auc(s.scores, s.labels);
        result.per_video.emplace_back(s.video_id, auc);
        sum += auc;
    }
    if (result.per_video.empty()) {
        throw UndefinedMetricError("macro_auc: no video with both classes");
    }
    result.value = sum / static_cast<double>(result.per_video.size());
    return result;
}

double score_gap(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw InvalidArgumentError("score_gap: scores and labels must have equal nonzero length");
    }
    double sum_pos = 0.0, sum_neg = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 0) {
            sum_pos += scores[i];
            ++n_pos;
        } else {
            sum_neg += scores[i];
            ++n_neg;
        }
    }
    if (n_pos == 0 || n_neg == 0) {
        throw UndefinedMetricError("score_gap: needs both a positive and a negative label");
    }
    return sum_pos / static_cast<double>(n_pos) - sum_neg / static_cast<double>(n_neg);
}

double score_gap(const std::vector<ScoreSeries>& series) {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    concat_labeled(series, scores, labels);
    return score_gap(scores, labels);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void write_score_csv(const std::filesystem::path& path, const std::vector<ScoreSeries>& series) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot open score file for writing: " + path.string());
    bool labeled = !series.empty();
    for (const auto& s : series) labeled = labeled && s.has_labels();

    out << (labeled ? "video_id,frame_index,score,label\n" : "video_id,frame_index,score\n");
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.scores.size(); ++i) {
            out << s.video_id << ',' << (i + 1) << ',' << format_double(s.scores[i]);
            if (labeled) out << ',' << static_cast<int>(s.labels[i]);
            out << '\n';
        }
    }
    if (!out) throw FormatError("failed writing score file: " + path.string());
}

std::vector<ScoreSeries> read_score_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open score file: " + path.string());
    const std::string source = path.string();

    std::string line;
    if (!std::getline(in, line)) throw FormatError(source + ": empty score file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool labeled;
    if (line == "video_id,frame_index,score") {
        labeled = false;
    } else if (line == "video_id,frame_index,score,label") {
        labeled = true;
    } else {
        throw FormatError(source + ": unexpected header '" + line + "'");
    }

    std::vector<ScoreSeries> series;
    std::map<std::string, std::size_t> index;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string video_id, frame_str, score_str, label_str;
        if (!std::getline(ss, video_id, ',') || !std::getline(ss, frame_str, ',') ||
            !std::getline(ss, score_str, ',') || (labeled && !std::getline(ss, label_str, ','))) {
            throw FormatError(source + ": malformed row at line " + std::to_string(line_no));
        }
        std::size_t series_idx;
        if (auto it = index.find(video_id); it != index.end()) {
            series_idx = it->second;
        } else {
            series_idx = series.size();
            index.emplace(video_id, series_idx);
            series.push_back({video_id, {}, {}});
        }
        auto& s = series[series_idx];
        const auto frame = static_cast<std::uint32_t>(std::stoul(frame_str));
        if (frame != s.scores.size() + 1) {
            throw FormatError(source + ": frame_index must be 1-based and contiguous per video (line " +
                              std::to_string(line_no) + ")");
        }
        s.scores.push_back(std::stod(score_str));
        if (labeled) {
            const int label = std::stoi(label_str);
            if (label != 0 && label != 1) {
                throw FormatError(source + ": label must be 0 or 1 (line " + std::to_string(line_no) + ")");
            }
            s.labels.push_back(static_cast<std::uint8_t>(label));
        }
    }
    if (series.empty()) throw FormatError(source + ": no score rows");
    return series;
}

}  // namespace tsvad
