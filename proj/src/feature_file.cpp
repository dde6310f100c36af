#include "tsvad/feature_file.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "tsvad/byte_io.hpp"

namespace tsvad {

namespace {

constexpr char kFeatureMagic[] = "FEAT";
constexpr std::uint16_t kFeatureVersion = 1;

}  // namespace

std::filesystem::path feature_index_path(const std::filesystem::path& path) {
    std::filesystem::path idx = path;
    idx += ".idx.csv";
    return idx;
}

void write_features(const std::vector<FeatureVector>& features,
                    const std::filesystem::path& path) {
    if (features.empty()) throw InvalidArgumentError("write_features: no features");
    const std::size_t dim = features.front().values.size();
    if (dim == 0) throw InvalidArgumentError("write_features: zero-dimensional features");

    ByteWriter w;
    w.bytes(kFeatureMagic, 4);
    w.u16(kFeatureVersion);
    w.u32(static_cast<std::uint32_t>(features.size()));
    w.u32(static_cast<std::uint32_t>(dim));
    for (const auto& f : features) {
        if (f.values.size() != dim) {
            throw InvalidArgumentError("write_features: inconsistent feature dimension");
        }
        for (double v : f.values) w.f32(static_cast<float>(v));
    }
    write_file_bytes(path, w.data());

    std::ofstream idx(feature_index_path(path), std::ios::trunc);
    if (!idx) throw FormatError("cannot write feature index: " + feature_index_path(path).string());
    idx << "row,video_id,frame_index\n";
    for (std::size_t i = 0; i < features.size(); ++i) {
        idx << i << ',' << features[i].video_id << ',' << features[i].frame_index << '\n';
    }
}

std::vector<FeatureVector> read_features(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    ByteReader r(bytes.data(), bytes.size(), path.string());
    char magic[4];
    r.bytes(magic, 4, "magic");
    if (std::memcmp(magic, kFeatureMagic, 4) != 0) r.fail("bad magic, not a feature file");
    const std::uint16_t version = r.u16("version");
    if (version != kFeatureVersion) r.fail("unsupported feature version " + std::to_string(version));
    const std::uint32_t count = r.u32("row count");
    const std::uint32_t dim = r.u32("dimension");
    if (count == 0 || dim == 0) r.fail("empty feature file");

    std::vector<FeatureVector> features(count);
    for (auto& f : features) {
        f.values.resize(dim);
        for (auto& v : f.values) v = r.f32("feature row");
    }
    if (!r.exhausted()) r.fail("trailing bytes after last row");

    // sidecar index
    const auto idx_path = feature_index_path(path);
    std::ifstream idx(idx_path);
    if (!idx) throw FormatError("cannot open feature index: " + idx_path.string());
    std::string line;
    if (!std::getline(idx, line)) throw FormatError(idx_path.string() + ": empty index");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "row,video_id,frame_index") {
        throw FormatError(idx_path.string() + ": unexpected header '" + line + "'");
    }
    std::unordered_set<std::uint32_t> seen;
    std::size_t line_no = 1;
    while (std::getline(idx, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string row_str, video_id, frame_str;
        if (!std::getline(ss, row_str, ',') || !std::getline(ss, video_id, ',') ||
            !std::getline(ss, frame_str, ',')) {
            throw FormatError(idx_path.string() + ": malformed row at line " + std::to_string(line_no));
        }
        const auto row = static_cast<std::uint32_t>(std::stoul(row_str));
        if (row >= count) {
            throw FormatError(idx_path.string() + ": row index out of range at line " +
                              std::to_string(line_no));
        }
        if (!seen.insert(row).second) {
            throw FormatError(idx_path.string() + ": duplicate row index at line " +
                              std::to_string(line_no));
        }
        features[row].video_id = video_id;
        features[row].frame_index = static_cast<std::uint32_t>(std::stoul(frame_str));
    }
    if (seen.size() != count) {
        throw FormatError(idx_path.string() + ": index covers " + std::to_string(seen.size()) +
                          " of " + std::to_string(count) + " rows");
    }
    return features;
}

}  // namespace tsvad
