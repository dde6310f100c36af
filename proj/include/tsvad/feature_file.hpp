#pragma once

#include <filesystem>
#include <vector>

#include "tsvad/hash_encoder.hpp"

namespace tsvad {

// Feature file: magic "FEAT", version u16, count u32, dim u32, then count rows
// of dim 32-bit floats, little-endian. A sidecar CSV `<path>.idx.csv` with
// header row,video_id,frame_index maps each row to its source snippet.
void write_features(const std::vector<FeatureVector>& features,
                    const std::filesystem::path& path);
std::vector<FeatureVector> read_features(const std::filesystem::path& path);

std::filesystem::path feature_index_path(const std::filesystem::path& path);

}  // namespace tsvad
