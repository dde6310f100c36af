#include "tsvad/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "tsvad/arch.hpp"
#include "tsvad/byte_io.hpp"
#include "tsvad/feature_file.hpp"
#include "tsvad/frames.hpp"
#include "tsvad/knowledge_base.hpp"

namespace tsvad {

namespace {

using nlohmann::json;

void require_path(const std::string& path, const char* key) {
    if (path.empty()) {
        throw InvalidArgumentError(std::string("config: paths.") + key + " is required");
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot open file for writing: " + path.string());
    out << text;
    if (!out) throw FormatError("failed writing file: " + path.string());
}

// every run leaves its fully resolved configuration next to its primary output
void echo_config(const PipelineConfig& config, const std::string& primary_output) {
    write_text_file(primary_output + ".config.json", config_to_json(config));
}

std::map<std::string, std::uint32_t> read_lengths_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open lengths file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty lengths file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "video_id,length") {
        throw FormatError(path.string() + ": unexpected header '" + line + "'");
    }
    std::map<std::string, std::uint32_t> lengths;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw FormatError(path.string() + ": malformed row");
        lengths[line.substr(0, comma)] =
            static_cast<std::uint32_t>(std::stoul(line.substr(comma + 1)));
    }
    return lengths;
}

std::map<std::string, std::vector<std::uint8_t>> read_labels_csv(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open labels file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty labels file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "video_id,frame_index,label") {
        throw FormatError(path.string() + ": unexpected header '" + line + "'");
    }
    std::map<std::string, std::vector<std::uint8_t>> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string video_id, frame_str, label_str;
        if (!std::getline(ss, video_id, ',') || !std::getline(ss, frame_str, ',') ||
            !std::getline(ss, label_str, ',')) {
            throw FormatError(path.string() + ": malformed row at line " + std::to_string(line_no));
        }
        auto& vec = labels[video_id];
        if (std::stoul(frame_str) != vec.size() + 1) {
            throw FormatError(path.string() + ": frame_index must be 1-based and contiguous (line " +
                              std::to_string(line_no) + ")");
        }
        const int label = std::stoi(label_str);
        if (label != 0 && label != 1) {
            throw FormatError(path.string() + ": label must be 0 or 1 (line " +
                              std::to_string(line_no) + ")");
        }
        vec.push_back(static_cast<std::uint8_t>(label));
    }
    return labels;
}

}  // namespace

LocalErrorMode PipelineConfig::mle_mode() const {
    if (mle.mode == "mean") return LocalErrorMode::kWindowMean;
    if (mle.mode == "max") return LocalErrorMode::kWindowMax;
    throw InvalidArgumentError("config: mle.mode must be 'mean' or 'max'");
}

std::uint32_t PipelineConfig::mle_stride(std::uint32_t k) const {
    return mle.stride != 0 ? mle.stride : (k + 1) / 2;
}

PipelineConfig load_config(const std::string& json_text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw FormatError(source + ": invalid JSON: " + e.what());
    }
    if (!doc.is_object()) throw FormatError(source + ": config must be a JSON object");

    PipelineConfig c;
    try {
        c.seed = doc.value("seed", c.seed);

        if (doc.contains("paths")) {
            const auto& p = doc["paths"];
            auto& out = c.paths;
            out.features = p.value("features", out.features);
            out.frames_dir = p.value("frames_dir", out.frames_dir);
            out.predictions_dir = p.value("predictions_dir", out.predictions_dir);
            out.encoder = p.value("encoder", out.encoder);
            out.kb = p.value("kb", out.kb);
            out.loss_trace = p.value("loss_trace", out.loss_trace);
            out.kr_scores = p.value("kr_scores", out.kr_scores);
            out.cr_scores = p.value("cr_scores", out.cr_scores);
            out.fused_scores = p.value("fused_scores", out.fused_scores);
            out.labels = p.value("labels", out.labels);
            out.lengths = p.value("lengths", out.lengths);
            out.arch = p.value("arch", out.arch);
            out.report = p.value("report", out.report);
            out.window_report = p.value("window_report", out.window_report);
            out.sim_out_dir = p.value("sim_out_dir", out.sim_out_dir);
            out.sim_labels = p.value("sim_labels", out.sim_labels);
        }
        if (doc.contains("hash")) {
            const auto& h = doc["hash"];
            c.hash.input_dim = h.value("input_dim", c.hash.input_dim);
            c.hash.num_layers = h.value("num_layers", c.hash.num_layers);
            c.hash.code_len = h.value("code_len", c.hash.code_len);
        }
        c.train.seed = c.seed;
        if (doc.contains("train")) {
            const auto& t = doc["train"];
            c.train.lambda_m = t.value("lambda_m", c.train.lambda_m);
            c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
            c.train.epochs = t.value("epochs", c.train.epochs);
            c.train.batch_size = t.value("batch_size", c.train.batch_size);
            c.train.delta_max = t.value("delta_max", c.train.delta_max);
            c.train.seed = t.value("seed", c.train.seed);
            c.train.use_negative_pairs = t.value("use_negative_pairs", c.train.use_negative_pairs);
            c.train.lambda_neg = t.value("lambda_neg", c.train.lambda_neg);
        }
        c.sim.seed = c.seed;
        if (doc.contains("sim")) {
            const auto& s = doc["sim"];
            c.sim.nseg = s.value("nseg", c.sim.nseg);
            c.sim.ratio = s.value("ratio", c.sim.ratio);
            c.sim.offset = s.value("offset", c.sim.offset);
            c.sim.angle_min_deg = s.value("angle_min_deg", c.sim.angle_min_deg);
            c.sim.angle_max_deg = s.value("angle_max_deg", c.sim.angle_max_deg);
            c.sim.seed = s.value("seed", c.sim.seed);
        }
        if (doc.contains("mle")) {
            const auto& m = doc["mle"];
            c.mle.k = m.value("k", c.mle.k);
            c.mle.stride = m.value("stride", c.mle.stride);
            c.mle.lambda_l1 = m.value("lambda_l1", c.mle.lambda_l1);
            c.mle.mode = m.value("mode", c.mle.mode);
            if (m.contains("candidates")) {
                c.mle.candidates = m["candidates"].get<std::vector<std::uint32_t>>();
            }
        }
        if (doc.contains("fusion")) {
            const auto& f = doc["fusion"];
            c.fusion.lambda_cr = f.value("lambda_cr", c.fusion.lambda_cr);
            c.fusion.lambda_kr = f.value("lambda_kr", c.fusion.lambda_kr);
        }
        if (doc.contains("smooth")) c.smooth_sigma = doc["smooth"].value("sigma", c.smooth_sigma);
        if (doc.contains("rates")) {
            c.rates.cr = doc["rates"].value("cr", c.rates.cr);
            c.rates.kr = doc["rates"].value("kr", c.rates.kr);
        }
        c.predictor = doc.value("predictor", c.predictor);
        c.sim_format = doc.value("sim_format", c.sim_format);
    } catch (const json::exception& e) {
        throw FormatError(source + ": bad config value: " + e.what());
    }

    if (c.rates.cr == 0 || c.rates.kr == 0) {
        throw InvalidArgumentError("config: sampling rates must be >= 1");
    }
    const std::string* all_paths[] = {
        &c.paths.features,   &c.paths.frames_dir,    &c.paths.predictions_dir,
        &c.paths.encoder,    &c.paths.kb,            &c.paths.loss_trace,
        &c.paths.kr_scores,  &c.paths.cr_scores,     &c.paths.fused_scores,
        &c.paths.labels,     &c.paths.lengths,       &c.paths.arch,
        &c.paths.report,     &c.paths.window_report, &c.paths.sim_out_dir,
        &c.paths.sim_labels};
    std::map<std::string, int> path_uses;
    for (const auto* p : all_paths) {
        if (!p->empty() && ++path_uses[*p] > 1) {
            throw InvalidArgumentError("config: path '" + *p + "' is referenced twice");
        }
    }
    if (c.predictor != "persistence" && c.predictor != "external-files") {
        throw InvalidArgumentError("config: predictor must be 'persistence' or 'external-files'");
    }
    if (c.sim_format != "frms" && c.sim_format != "pnm") {
        throw InvalidArgumentError("config: sim_format must be 'frms' or 'pnm'");
    }
    c.mle_mode();  // validates the mode string
    return c;
}

PipelineConfig load_config_file(const std::string& path) {
    return load_config(read_text_file(path), path);
}

std::string config_to_json(const PipelineConfig& c) {
    json doc;
    doc["seed"] = c.seed;
    doc["paths"] = {{"features", c.paths.features},
                    {"frames_dir", c.paths.frames_dir},
                    {"predictions_dir", c.paths.predictions_dir},
                    {"encoder", c.paths.encoder},
                    {"kb", c.paths.kb},
                    {"loss_trace", c.paths.loss_trace},
                    {"kr_scores", c.paths.kr_scores},
                    {"cr_scores", c.paths.cr_scores},
                    {"fused_scores", c.paths.fused_scores},
                    {"labels", c.paths.labels},
                    {"lengths", c.paths.lengths},
                    {"arch", c.paths.arch},
                    {"report", c.paths.report},
                    {"window_report", c.paths.window_report},
                    {"sim_out_dir", c.paths.sim_out_dir},
                    {"sim_labels", c.paths.sim_labels}};
    doc["hash"] = {{"input_dim", c.hash.input_dim},
                   {"num_layers", c.hash.num_layers},
                   {"code_len", c.hash.code_len}};
    doc["train"] = {{"lambda_m", c.train.lambda_m},
                    {"learning_rate", c.train.learning_rate},
                    {"epochs", c.train.epochs},
                    {"batch_size", c.train.batch_size},
                    {"delta_max", c.train.delta_max},
                    {"seed", c.train.seed},
                    {"use_negative_pairs", c.train.use_negative_pairs},
                    {"lambda_neg", c.train.lambda_neg}};
    doc["sim"] = {{"nseg", c.sim.nseg},
                  {"ratio", c.sim.ratio},
                  {"offset", c.sim.offset},
                  {"angle_min_deg", c.sim.angle_min_deg},
                  {"angle_max_deg", c.sim.angle_max_deg},
                  {"seed", c.sim.seed}};
    doc["mle"] = {{"k", c.mle.k},
                  {"stride", c.mle.stride},
                  {"lambda_l1", c.mle.lambda_l1},
                  {"mode", c.mle.mode},
                  {"candidates", c.mle.candidates}};
    doc["fusion"] = {{"lambda_cr", c.fusion.lambda_cr}, {"lambda_kr", c.fusion.lambda_kr}};
    doc["smooth"] = {{"sigma", c.smooth_sigma}};
    doc["rates"] = {{"cr", c.rates.cr}, {"kr", c.rates.kr}};
    doc["predictor"] = c.predictor;
    doc["sim_format"] = c.sim_format;
    return doc.dump(2) + "\n";
}

std::string apply_override(const std::string& json_text, const std::string& flag,
                           const std::string& source) {
    if (flag.size() < 3 || flag.substr(0, 2) != "--") {
        throw InvalidArgumentError(source + ": override must look like --section.key=value");
    }
    const auto eq = flag.find('=');
    if (eq == std::string::npos || eq == 2) {
        throw InvalidArgumentError(source + ": override must look like --section.key=value");
    }
    std::string key = flag.substr(2, eq - 2);
    const std::string value = flag.substr(eq + 1);

    std::string pointer = "/";
    for (char ch : key) pointer += (ch == '.') ? '/' : ch;

    // the key must exist in the fully resolved default document
    const json defaults = json::parse(config_to_json(PipelineConfig{}));
    const json::json_pointer ptr(pointer);
    if (!defaults.contains(ptr)) {
        throw InvalidArgumentError(source + ": unknown config key '" + key + "'");
    }

    json doc = json::parse(json_text);
    json parsed_value;
    try {
        parsed_value = json::parse(value);
    } catch (const json::parse_error&) {
        parsed_value = value;  // bare strings need no quotes on the command line
    }
    // keep path-like strings as strings even when they parse as numbers
    if (defaults.at(ptr).is_string() && !parsed_value.is_string()) {
        parsed_value = value;
    }
    doc[ptr] = parsed_value;
    return doc.dump();
}

void cmd_train_hash(const PipelineConfig& config) {
    require_path(config.paths.features, "features");
    require_path(config.paths.encoder, "encoder");
    require_path(config.paths.loss_trace, "loss_trace");
    const auto features = read_features(config.paths.features);
    if (!features.empty() && features.front().values.size() != config.hash.input_dim) {
        throw InvalidArgumentError("train-hash: feature dimension " +
                                   std::to_string(features.front().values.size()) +
                                   " does not match hash.input_dim " +
                                   std::to_string(config.hash.input_dim));
    }
    HashEncoder encoder = init_encoder(config.hash.input_dim, config.hash.num_layers,
                                       config.hash.code_len, config.train.seed);
    TrainResult result = train(std::move(encoder), features, config.train);
    save_encoder(result.encoder, config.paths.encoder);

    std::string csv = "epoch,mean_L_c,mean_L_m,mean_total\n";
    for (std::size_t e = 0; e < result.trace.size(); ++e) {
        const auto& s = result.trace[e];
        csv += std::to_string(e + 1) + "," + format_double(s.mean_cosine) + "," +
               format_double(s.mean_mutual) + "," + format_double(s.mean_total) + "\n";
    }
    write_text_file(config.paths.loss_trace, csv);
    echo_config(config, config.paths.encoder);
}

void cmd_build_kb(const PipelineConfig& config) {
    require_path(config.paths.encoder, "encoder");
    require_path(config.paths.kb, "kb");
    require_path(config.paths.features, "features");
    const HashEncoder encoder = load_encoder(config.paths.encoder);
    const auto features = read_features(config.paths.features);
    const KnowledgeBase kb = build_kb(encoder, features);
    save_kb(kb, config.paths.kb);
    echo_config(config, config.paths.kb);
}

void cmd_score_kr(const PipelineConfig& config) {
    require_path(config.paths.encoder, "encoder");
    require_path(config.paths.kb, "kb");
    require_path(config.paths.features, "features");
    require_path(config.paths.kr_scores, "kr_scores");
    const HashEncoder encoder = load_encoder(config.paths.encoder);
    const KnowledgeBase kb = load_kb(config.paths.kb);
    if (encoder_fingerprint(encoder) != kb.fingerprint()) {
        throw InvalidStateError("score-kr: encoder fingerprint does not match the knowledge base");
    }
    const auto features = read_features(config.paths.features);

    std::map<std::string, std::uint32_t> lengths;
    if (!config.paths.lengths.empty()) lengths = read_lengths_csv(config.paths.lengths);

    std::map<std::string, std::vector<AnchoredScore>> anchored;
    std::vector<const FeatureVector*> order;
    order.reserve(features.size());
    for (const auto& f : features) order.push_back(&f);
    std::sort(order.begin(), order.end(), [](const FeatureVector* a, const FeatureVector* b) {
        if (a->video_id != b->video_id) return a->video_id < b->video_id;
        return a->frame_index < b->frame_index;
    });
    for (const auto* f : order) {
        if (f->frame_index == 0) {
            throw InvalidArgumentError("score-kr: snippet anchors are 1-based frame indices");
        }
        const RetrievalResult rr = kb.retrieve(encode(encoder, *f));
        anchored[f->video_id].push_back({f->frame_index, rr.score});
    }

    std::vector<ScoreSeries> series;
    for (auto& [video_id, anchors] : anchored) {
        std::uint32_t length = anchors.back().frame_index;
        if (auto it = lengths.find(video_id); it != lengths.end()) length = it->second;
        series.push_back(align_to_frames(anchors, length, video_id));
    }
    write_score_csv(config.paths.kr_scores, series);
    echo_config(config, config.paths.kr_scores);
}

void cmd_score_cr(const PipelineConfig& config) {
    require_path(config.paths.frames_dir, "frames_dir");
    require_path(config.paths.cr_scores, "cr_scores");
    const bool external = (config.predictor == "external-files");
    if (external) require_path(config.paths.predictions_dir, "predictions_dir");

    const auto videos = list_videos(config.paths.frames_dir);
    if (videos.empty()) throw InvalidArgumentError("score-cr: no videos in frames_dir");

    std::map<std::string, VideoRef> prediction_refs;
    if (external) {
        for (const auto& ref : list_videos(config.paths.predictions_dir)) {
            prediction_refs[ref.id] = ref;
        }
    }

    const std::uint32_t k = config.mle.k;
    const std::uint32_t stride = config.mle_stride(k);
    std::vector<ScoreSeries> series;
    for (const auto& ref : videos) {
        const auto frames = load_video(ref);
        std::optional<std::vector<Frame>> predictions;
        if (external) {
            const auto it = prediction_refs.find(ref.id);
            if (it == prediction_refs.end()) {
                throw InvalidArgumentError("score-cr: no predictions for video '" + ref.id + "'");
            }
            predictions = load_video(it->second);
        }
        ScoreSeries s;
        s.video_id = ref.id;
        s.scores = context_scores(frames, predictions, config.rates.cr, k, stride,
                                  config.mle.lambda_l1, config.mle_mode());
        series.push_back(std::move(s));
    }
    write_score_csv(config.paths.cr_scores, series);
    echo_config(config, config.paths.cr_scores);
}

void cmd_select_window(const PipelineConfig& config) {
    require_path(config.paths.frames_dir, "frames_dir");
    require_path(config.paths.window_report, "window_report");
    const auto refs = list_videos(config.paths.frames_dir);
    if (refs.empty()) throw InvalidArgumentError("select-window: no videos in frames_dir");

    std::vector<std::vector<Frame>> videos;
    videos.reserve(refs.size());
    for (const auto& ref : refs) videos.push_back(load_video(ref));

    const WindowSelection sel = select_window(videos, config.mle.candidates, config.sim,
                                              config.mle.lambda_l1, config.rates.cr,
                                              config.mle_mode());
    std::string csv = "k,auc,chosen\n";
    for (const auto& row : sel.by_k) {
        csv += std::to_string(row.k) + "," + format_double(row.auc) + "," +
               (row.k == sel.chosen_k ? "1" : "0") + "\n";
    }
    write_text_file(config.paths.window_report, csv);
    echo_config(config, config.paths.window_report);
}

void cmd_fuse_eval(const PipelineConfig& config) {
    require_path(config.paths.cr_scores, "cr_scores");
    require_path(config.paths.kr_scores, "kr_scores");
    require_path(config.paths.report, "report");
    auto cr = read_score_csv(config.paths.cr_scores);
    auto kr = read_score_csv(config.paths.kr_scores);

    std::map<std::string, std::vector<std::uint8_t>> labels;
    if (!config.paths.labels.empty()) labels = read_labels_csv(config.paths.labels);

    std::map<std::string, ScoreSeries*> kr_by_id;
    for (auto& s : kr) kr_by_id[s.video_id] = &s;
    if (cr.size() != kr.size()) {
        throw InvalidArgumentError("fuse-eval: streams cover different video sets");
    }

    std::vector<ScoreSeries> cr_n, kr_n, fused;
    for (auto& c : cr) {
        const auto it = kr_by_id.find(c.video_id);
        if (it == kr_by_id.end()) {
            throw InvalidArgumentError("fuse-eval: video '" + c.video_id +
                                       "' missing from the kr stream");
        }
        ScoreSeries& k = *it->second;
        if (k.scores.size() != c.scores.size()) {
            throw InvalidArgumentError("fuse-eval: stream lengths differ for video '" +
                                       c.video_id + "'");
        }
        // attach labels from the labels file, else from either stream
        std::vector<std::uint8_t> video_labels;
        if (auto lit = labels.find(c.video_id); lit != labels.end()) {
            video_labels = lit->second;
        } else if (c.has_labels()) {
            video_labels = c.labels;
        } else if (k.has_labels()) {
            video_labels = k.labels;
        } else {
            throw UndefinedMetricError("fuse-eval: no labels for video '" + c.video_id + "'");
        }
        if (video_labels.size() != c.scores.size()) {
            throw InvalidArgumentError("fuse-eval: label length differs for video '" +
                                       c.video_id + "'");
        }

        // per stream: normalize, then smooth, then fuse
        ScoreSeries cs = gaussian_smooth(minmax_normalize(c), config.smooth_sigma);
        ScoreSeries ks = gaussian_smooth(minmax_normalize(k), config.smooth_sigma);
        cs.labels = video_labels;
        ks.labels = video_labels;
        ScoreSeries f = fuse(cs, ks, config.fusion);
        f.labels = video_labels;
        cr_n.push_back(std::move(cs));
        kr_n.push_back(std::move(ks));
        fused.push_back(std::move(f));
    }

    std::string csv = "metric,stream,video_id,value\n";
    const struct {
        const char* name;
        const std::vector<ScoreSeries>* series;
    } streams[] = {{"cr", &cr_n}, {"kr", &kr_n}, {"fused", &fused}};
    for (const auto& stream : streams) {
        csv += std::string("micro_auc,") + stream.name + ",," +
               format_double(micro_auc(*stream.series)) + "\n";
    }
    for (const auto& stream : streams) {
        const MacroAucResult macro = macro_auc(*stream.series);
        csv += std::string("macro_auc,") + stream.name + ",," + format_double(macro.value) + "\n";
        for (const auto& [video_id, auc] : macro.per_video) {
            csv += std::string("video_auc,") + stream.name + "," + video_id + "," +
                   format_double(auc) + "\n";
        }
        for (const auto& video_id : macro.excluded) {
            std::cerr << "warning: video '" << video_id
                      << "' lacks one of the classes, excluded from macro-AUC\n";
            csv += std::string("video_auc_excluded,") + stream.name + "," + video_id + ",\n";
        }
    }
    for (const auto& stream : streams) {
        csv += std::string("score_gap,") + stream.name + ",," +
               format_double(score_gap(*stream.series)) + "\n";
    }
    write_text_file(config.paths.report, csv);
    if (!config.paths.fused_scores.empty()) write_score_csv(config.paths.fused_scores, fused);
    echo_config(config, config.paths.report);
}

bool cmd_check_shapes(const PipelineConfig& config, std::string* rendered) {
    std::vector<ArchChain> chains;
    if (config.paths.arch.empty()) {
        chains = builtin_video_unet_chains();
    } else {
        chains = parse_arch_json(read_text_file(config.paths.arch), config.paths.arch);
    }
    const auto rows = check_shapes(chains);

    bool all_ok = true;
    std::string table = "chain,layer,shape,expect,ok\n";
    for (const auto& row : rows) {
        table += row.chain + "," + row.layer + "," + row.shape.str() + ",";
        if (row.has_expect) {
            table += row.expect.str();
            table += row.ok ? ",1" : ",0";
            all_ok = all_ok && row.ok;
        } else {
            table += ",";
        }
        table += "\n";
    }
    if (rendered != nullptr) *rendered = table;
    if (!config.paths.report.empty()) {
        write_text_file(config.paths.report, table);
        echo_config(config, config.paths.report);
    }
    return all_ok;
}

void cmd_simulate(const PipelineConfig& config) {
    require_path(config.paths.frames_dir, "frames_dir");
    require_path(config.paths.sim_out_dir, "sim_out_dir");
    require_path(config.paths.sim_labels, "sim_labels");
    const auto refs = list_videos(config.paths.frames_dir);
    if (refs.empty()) throw InvalidArgumentError("simulate: no videos in frames_dir");

    Rng master(config.sim.seed);
    std::vector<ScoreSeries> labels;
    for (const auto& ref : refs) {
        SimulationConfig per_video = config.sim;
        per_video.seed = master.next_u64();
        const auto frames = load_video(ref);
        const SimulatedVideo sim = simulate_anomalous_video(frames, per_video);

        const std::filesystem::path out_dir(config.paths.sim_out_dir);
        if (config.sim_format == "frms") {
            write_frms(sim.frames, out_dir / (ref.id + ".frms"));
        } else {
            const auto video_dir = out_dir / ref.id;
            const char* ext = sim.frames.front().channels == 3 ? ".ppm" : ".pgm";
            for (std::size_t i = 0; i < sim.frames.size(); ++i) {
                char name[32];
                std::snprintf(name, sizeof(name), "frame_%06zu%s", i + 1, ext);
                write_pnm(sim.frames[i], video_dir / name);
            }
        }
        ScoreSeries s;
        s.video_id = ref.id;
        s.scores.assign(sim.labels.size(), 0.0);
        s.labels = sim.labels;
        labels.push_back(std::move(s));
    }
    write_labels_csv(config.paths.sim_labels, labels);
    echo_config(config, config.paths.sim_labels);
}

void write_labels_csv(const std::filesystem::path& path, const std::vector<ScoreSeries>& series) {
    std::string csv = "video_id,frame_index,label\n";
    for (const auto& s : series) {
        if (!s.has_labels()) {
            throw InvalidArgumentError("write_labels_csv: series without labels");
        }
        for (std::size_t i = 0; i < s.labels.size(); ++i) {
            csv += s.video_id + "," + std::to_string(i + 1) + "," +
                   std::to_string(static_cast<int>(s.labels[i])) + "\n";
        }
    }
    write_text_file(path, csv);
}

}  // namespace tsvad
