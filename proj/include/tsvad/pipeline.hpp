#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsvad/context.hpp"
#include "tsvad/scores.hpp"
#include "tsvad/siamese.hpp"

namespace tsvad {

// Fully resolved run configuration. JSON layout mirrors the nested structs;
// CLI flags override single keys as --section.key=value.
struct PipelineConfig {
    std::uint64_t seed = 0;

    struct Paths {
        std::string features;
        std::string frames_dir;
        std::string predictions_dir;
        std::string encoder;
        std::string kb;
        std::string loss_trace;
        std::string kr_scores;
        std::string cr_scores;
        std::string fused_scores;
        std::string labels;
        std::string lengths;
        std::string arch;
        std::string report;
        std::string window_report;
        std::string sim_out_dir;
        std::string sim_labels;
    } paths;

    struct Hash {
        std::uint32_t input_dim = 2048;
        std::uint32_t num_layers = 8;
        std::uint32_t code_len = 32;
    } hash;

    TrainConfig train;
    SimulationConfig sim;

    struct Mle {
        std::uint32_t k = 64;
        std::uint32_t stride = 0;  // 0 resolves to ceil(k / 2)
        double lambda_l1 = 1.0;
        std::string mode = "mean";  // or "max"
        std::vector<std::uint32_t> candidates = {16, 32, 64, 128, 256};
    } mle;

    FusionWeights fusion;
    double smooth_sigma = 3.0;

    struct Rates {
        std::uint32_t cr = 2;
        std::uint32_t kr = 8;
    } rates;

    std::string predictor = "persistence";  // or "external-files"
    std::string sim_format = "frms";        // or "pnm"

    LocalErrorMode mle_mode() const;
    std::uint32_t mle_stride(std::uint32_t k) const;
};

PipelineConfig load_config(const std::string& json_text, const std::string& source);
PipelineConfig load_config_file(const std::string& path);
std::string config_to_json(const PipelineConfig& config);

// Applies one --section.key=value override onto the JSON form of the config.
std::string apply_override(const std::string& json_text, const std::string& flag,
                           const std::string& source);

void cmd_train_hash(const PipelineConfig& config);
void cmd_build_kb(const PipelineConfig& config);
void cmd_score_kr(const PipelineConfig& config);
void cmd_score_cr(const PipelineConfig& config);
void cmd_select_window(const PipelineConfig& config);
void cmd_fuse_eval(const PipelineConfig& config);
// returns false when a shape expectation fails
bool cmd_check_shapes(const PipelineConfig& config, std::string* rendered = nullptr);
void cmd_simulate(const PipelineConfig& config);

// Labels CSV: header video_id,frame_index,label, frame_index 1-based and
// contiguous per video.
void write_labels_csv(const std::filesystem::path& path, const std::vector<ScoreSeries>& series);

}  // namespace tsvad
