#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tsvad/arch.hpp"
#include "tsvad/context.hpp"
#include "tsvad/feature_file.hpp"
#include "tsvad/frames.hpp"
#include "tsvad/knowledge_base.hpp"
#include "tsvad/pipeline.hpp"
#include "tsvad/scores.hpp"
#include "tsvad/siamese.hpp"

namespace py = pybind11;
using namespace tsvad;

namespace {

Frame frame_from_array(py::array_t<float, py::array::c_style | py::array::forcecast> array) {
    const auto info = array.request();
    if (info.ndim != 2 && info.ndim != 3) {
        throw InvalidArgumentError("frame arrays must be (H, W) or (H, W, C)");
    }
    const auto h = static_cast<std::uint32_t>(info.shape[0]);
    const auto w = static_cast<std::uint32_t>(info.shape[1]);
    const auto c = info.ndim == 3 ? static_cast<std::uint32_t>(info.shape[2]) : 1u;
    Frame frame = make_frame(h, w, c);
    std::memcpy(frame.pixels.data(), info.ptr, frame.pixels.size() * sizeof(float));
    return frame;
}

py::array_t<float> frame_to_array(const Frame& frame) {
    py::array_t<float> out(
        {static_cast<py::ssize_t>(frame.height), static_cast<py::ssize_t>(frame.width),
         static_cast<py::ssize_t>(frame.channels)});
    std::memcpy(out.mutable_data(), frame.pixels.data(), frame.pixels.size() * sizeof(float));
    return out;
}

py::array_t<double> error_map_to_array(const ErrorMap& map) {
    py::array_t<double> out(
        {static_cast<py::ssize_t>(map.height), static_cast<py::ssize_t>(map.width)});
    std::memcpy(out.mutable_data(), map.values.data(), map.values.size() * sizeof(double));
    return out;
}

ErrorMap error_map_from_array(
    py::array_t<double, py::array::c_style | py::array::forcecast> array, double lambda_l1) {
    const auto info = array.request();
    if (info.ndim != 2) throw InvalidArgumentError("error maps must be (H, W)");
    ErrorMap map;
    map.height = static_cast<std::uint32_t>(info.shape[0]);
    map.width = static_cast<std::uint32_t>(info.shape[1]);
    map.lambda_l1 = lambda_l1;
    map.values.resize(static_cast<std::size_t>(map.height) * map.width);
    std::memcpy(map.values.data(), info.ptr, map.values.size() * sizeof(double));
    return map;
}

LocalErrorMode mode_from_string(const std::string& mode) {
    if (mode == "mean") return LocalErrorMode::kWindowMean;
    if (mode == "max") return LocalErrorMode::kWindowMax;
    throw InvalidArgumentError("mode must be 'mean' or 'max'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Two-stream video anomaly detection: learnable LSH knowledge retrieval "
              "plus local prediction-error scoring";

    py::register_exception<InvalidArgumentError>(m, "InvalidArgumentError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<InvalidStateError>(m, "InvalidStateError", PyExc_RuntimeError);
    py::register_exception<UndefinedMetricError>(m, "UndefinedMetricError", PyExc_ValueError);
    py::register_exception<ArchSpecError>(m, "ArchSpecError", PyExc_ValueError);

    py::class_<FeatureVector>(m, "FeatureVector")
        .def(py::init([](std::vector<double> values, std::string video_id,
                         std::uint32_t frame_index) {
                 FeatureVector f;
                 f.values = std::move(values);
                 f.video_id = std::move(video_id);
                 f.frame_index = frame_index;
                 return f;
             }),
             py::arg("values"), py::arg("video_id") = "", py::arg("frame_index") = 0)
        .def_readwrite("values", &FeatureVector::values)
        .def_readwrite("video_id", &FeatureVector::video_id)
        .def_readwrite("frame_index", &FeatureVector::frame_index);

    py::class_<HashEncoder>(m, "HashEncoder")
        .def_readonly("input_dim", &HashEncoder::input_dim)
        .def_readonly("code_len", &HashEncoder::code_len)
        .def_property_readonly("num_layers", &HashEncoder::num_layers)
        .def("save", &save_encoder, py::arg("path"))
        .def_static("load", &load_encoder, py::arg("path"))
        .def("fingerprint", [](const HashEncoder& e) {
            return py::bytes(reinterpret_cast<const char*>(encoder_fingerprint(e).data()), 32);
        });

    py::class_<HashCodeSet>(m, "HashCodeSet")
        .def_readonly("code_len", &HashCodeSet::code_len)
        .def_readonly("codes", &HashCodeSet::codes);

    m.def("init_encoder", &init_encoder, py::arg("input_dim"), py::arg("num_layers"),
          py::arg("code_len"), py::arg("seed"));
    m.def("encode",
          [](const HashEncoder& encoder, const std::vector<double>& values) {
              return encode(encoder, std::span<const double>(values));
          },
          py::arg("encoder"), py::arg("values"));
    m.def("concat_codes", &concat_codes, py::arg("code_set"));
    m.def("binarize",
          [](const std::vector<double>& code) {
              const BinaryKey key = binarize(code);
              return unpack_bits(key);
          },
          py::arg("code"), "Threshold at 0.5; returns the bit list.");

    m.def("cosine_loss",
          [](const std::vector<double>& a, const std::vector<double>& b) {
              return cosine_loss(a, b);
          },
          py::arg("a"), py::arg("b"));
    m.def("mutual_difference_loss",
          py::overload_cast<const std::vector<std::vector<double>>&>(&mutual_difference_loss),
          py::arg("codes"));
    m.def("total_loss", &total_loss, py::arg("branch1"), py::arg("branch2"), py::arg("lambda_m"));
    m.def("negative_pair_loss",
          [](const std::vector<double>& a, const std::vector<double>& b) {
              return negative_pair_loss(a, b);
          },
          py::arg("a"), py::arg("b"));

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("lambda_m", &TrainConfig::lambda_m)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("delta_max", &TrainConfig::delta_max)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("use_negative_pairs", &TrainConfig::use_negative_pairs)
        .def_readwrite("lambda_neg", &TrainConfig::lambda_neg);

    m.def("train",
          [](const HashEncoder& encoder, const std::vector<FeatureVector>& features,
             const TrainConfig& config) {
              TrainResult result = train(encoder, features, config);
              std::vector<std::tuple<double, double, double>> trace;
              for (const auto& s : result.trace) {
                  trace.emplace_back(s.mean_cosine, s.mean_mutual, s.mean_total);
              }
              return py::make_tuple(result.encoder, trace);
          },
          py::arg("encoder"), py::arg("features"), py::arg("config"),
          "Returns (trained_encoder, [(mean_L_c, mean_L_m, mean_total), ...]).");

    py::class_<RetrievalEntry>(m, "RetrievalEntry")
        .def_readonly("hit", &RetrievalEntry::hit)
        .def_readonly("distance", &RetrievalEntry::distance)
        .def_property_readonly("key",
                               [](const RetrievalEntry& e) { return unpack_bits(e.key); });

    py::class_<RetrievalResult>(m, "RetrievalResult")
        .def_readonly("score", &RetrievalResult::score)
        .def_readonly("per_table", &RetrievalResult::per_table);

    py::class_<KnowledgeBase>(m, "KnowledgeBase")
        .def_property_readonly("num_tables", &KnowledgeBase::num_tables)
        .def_property_readonly("code_len", &KnowledgeBase::code_len)
        .def("max_score", &KnowledgeBase::max_score)
        .def("bucket_count", &KnowledgeBase::bucket_count, py::arg("table"))
        .def("total_count", &KnowledgeBase::total_count, py::arg("table"))
        .def("save", &save_kb, py::arg("path"))
        .def_static("load", &load_kb, py::arg("path"));

    m.def("build_kb", &build_kb, py::arg("encoder"), py::arg("features"));
    m.def("retrieve_score", &retrieve_score, py::arg("kb"), py::arg("encoder"), py::arg("feature"));

    m.def("error_map",
          [](py::array_t<float, py::array::c_style | py::array::forcecast> gt,
             py::array_t<float, py::array::c_style | py::array::forcecast> pred,
             double lambda_l1) {
              return error_map_to_array(
                  error_map(frame_from_array(gt), frame_from_array(pred), lambda_l1));
          },
          py::arg("gt"), py::arg("pred"), py::arg("lambda_l1") = 1.0);
    m.def("fle",
          [](py::array_t<float, py::array::c_style | py::array::forcecast> gt,
             py::array_t<float, py::array::c_style | py::array::forcecast> pred,
             double lambda_l1) {
              return fle(frame_from_array(gt), frame_from_array(pred), lambda_l1);
          },
          py::arg("gt"), py::arg("pred"), py::arg("lambda_l1") = 1.0);
    m.def("mle",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> map, std::uint32_t k,
             std::uint32_t stride, const std::string& mode) {
              return mle(error_map_from_array(map, 1.0), k, stride, mode_from_string(mode));
          },
          py::arg("error_map"), py::arg("k"), py::arg("stride"), py::arg("mode") = "mean");

    m.def("simulate_anomalous_video",
          [](const std::vector<py::array_t<float, py::array::c_style | py::array::forcecast>>&
                 frames,
             std::uint32_t nseg, double ratio, std::uint32_t offset, std::uint64_t seed) {
              std::vector<Frame> video;
              video.reserve(frames.size());
              for (const auto& f : frames) video.push_back(frame_from_array(f));
              SimulationConfig cfg;
              cfg.nseg = nseg;
              cfg.ratio = ratio;
              cfg.offset = offset;
              cfg.seed = seed;
              const SimulatedVideo sim = simulate_anomalous_video(video, cfg);
              std::vector<py::array_t<float>> out;
              out.reserve(sim.frames.size());
              for (const auto& f : sim.frames) out.push_back(frame_to_array(f));
              return py::make_tuple(out, sim.labels, sim.angle_deg);
          },
          py::arg("frames"), py::arg("nseg") = 1, py::arg("ratio") = 0.5, py::arg("offset") = 2,
          py::arg("seed") = 0,
          "Returns (frames, labels, rotation_angle_deg).");

    m.def("roc_auc",
          [](const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
              return roc_auc(scores, labels);
          },
          py::arg("scores"), py::arg("labels"));
    m.def("score_gap",
          [](const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
              return score_gap(scores, labels);
          },
          py::arg("scores"), py::arg("labels"));
    m.def("minmax_normalize",
          [](const std::vector<double>& scores) {
              ScoreSeries s{"", scores, {}};
              return minmax_normalize(s).scores;
          },
          py::arg("scores"));
    m.def("gaussian_smooth",
          [](const std::vector<double>& scores, double sigma) {
              ScoreSeries s{"", scores, {}};
              return gaussian_smooth(s, sigma).scores;
          },
          py::arg("scores"), py::arg("sigma") = 3.0);
    m.def("fuse",
          [](const std::vector<double>& cr, const std::vector<double>& kr, double lambda_cr,
             double lambda_kr) {
              ScoreSeries a{"", cr, {}}, b{"", kr, {}};
              return fuse(a, b, {lambda_cr, lambda_kr}).scores;
          },
          py::arg("cr"), py::arg("kr"), py::arg("lambda_cr") = 1.0, py::arg("lambda_kr") = 1.0);

    m.def("check_builtin_shapes", []() {
        const auto rows = check_shapes(builtin_video_unet_chains());
        std::vector<py::dict> out;
        for (const auto& row : rows) {
            py::dict d;
            d["chain"] = row.chain;
            d["layer"] = row.layer;
            d["shape"] = py::make_tuple(row.shape.c, row.shape.t, row.shape.h, row.shape.w);
            if (row.has_expect) {
                d["expect"] =
                    py::make_tuple(row.expect.c, row.expect.t, row.expect.h, row.expect.w);
                d["ok"] = row.ok;
            }
            out.push_back(std::move(d));
        }
        return out;
    });

    m.def("write_features", &write_features, py::arg("features"), py::arg("path"));
    m.def("read_features", &read_features, py::arg("path"));
    m.def("write_frms",
          [](const std::vector<py::array_t<float, py::array::c_style | py::array::forcecast>>&
                 frames,
             const std::filesystem::path& path) {
              std::vector<Frame> video;
              video.reserve(frames.size());
              for (const auto& f : frames) video.push_back(frame_from_array(f));
              write_frms(video, path);
          },
          py::arg("frames"), py::arg("path"));
    m.def("read_frms",
          [](const std::filesystem::path& path) {
              std::vector<py::array_t<float>> out;
              for (const auto& f : read_frms(path)) out.push_back(frame_to_array(f));
              return out;
          },
          py::arg("path"));
}
