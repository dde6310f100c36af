#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tsvad/pipeline.hpp"

namespace {

constexpr const char* kUsage = R"(usage: tsvad <command> [--config <file>] [--section.key=value ...]

commands:
  train-hash     train the hash encoder on a feature file, write encoder + loss trace
  build-kb       build the knowledge base from an encoder and training features
  score-kr       knowledge-retrieval scores: bucket lookup per snippet, per-frame CSV
  score-cr       context-recovery scores: prediction error + maximum local error
  select-window  pick the local-error window size on simulated pseudo-anomalies
  fuse-eval      normalize, smooth and fuse both streams; report micro/macro AUC
  check-shapes   propagate network shapes and verify expected output shapes
  simulate       write pseudo-anomalous versions of training videos + labels

Any config key can be overridden on the command line, e.g.
  tsvad train-hash --config run.json --train.learning_rate=0.0005
)";

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw tsvad::FormatError("cannot open config file: " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << kUsage;
        return 2;
    }
    const std::string command = argv[1];
    if (command == "-h" || command == "--help" || command == "help") {
        std::cout << kUsage;
        return 0;
    }

    std::string config_text = "{}";
    std::vector<std::string> overrides;
    for (int i = 2; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config") {
            if (i + 1 >= argc) {
                std::cerr << "error: --config needs a file argument\n";
                return 2;
            }
            config_text = read_file(argv[++i]);
        } else if (arg.rfind("--", 0) == 0) {
            overrides.push_back(arg);
        } else {
            std::cerr << "error: unexpected argument '" << arg << "'\n" << kUsage;
            return 2;
        }
    }
    for (const auto& flag : overrides) {
        config_text = tsvad::apply_override(config_text, flag, "command line");
    }
    const tsvad::PipelineConfig config = tsvad::load_config(config_text, "config");

    if (command == "train-hash") {
        tsvad::cmd_train_hash(config);
    } else if (command == "build-kb") {
        tsvad::cmd_build_kb(config);
    } else if (command == "score-kr") {
        tsvad::cmd_score_kr(config);
    } else if (command == "score-cr") {
        tsvad::cmd_score_cr(config);
    } else if (command == "select-window") {
        tsvad::cmd_select_window(config);
    } else if (command == "fuse-eval") {
        tsvad::cmd_fuse_eval(config);
    } else if (command == "check-shapes") {
        std::string table;
        const bool ok = tsvad::cmd_check_shapes(config, &table);
        std::cout << table;
        if (!ok) {
            std::cerr << "error: shape expectations not met\n";
            return 2;
        }
    } else if (command == "simulate") {
        tsvad::cmd_simulate(config);
    } else {
        std::cerr << "error: unknown command '" << command << "'\n" << kUsage;
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const tsvad::InvalidArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const tsvad::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const tsvad::ArchSpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const tsvad::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const tsvad::InvalidStateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const tsvad::UndefinedMetricError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
