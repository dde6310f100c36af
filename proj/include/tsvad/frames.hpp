#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tsvad/common.hpp"

namespace tsvad {

// One frame: H x W x C pixels in [0,1], HWC layout, C in {1, 3}.
struct Frame {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t channels = 1;
    std::vector<float> pixels;

    float at(std::uint32_t y, std::uint32_t x, std::uint32_t c = 0) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float& at(std::uint32_t y, std::uint32_t x, std::uint32_t c = 0) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool same_shape(const Frame& other) const {
        return height == other.height && width == other.width && channels == other.channels;
    }
};

Frame make_frame(std::uint32_t height, std::uint32_t width, std::uint32_t channels,
                 float fill = 0.0f);

// 8-bit PGM (P5) / PPM (P6); pixel values scale to [0,1] on read and are
// rounded back to 8 bits on write.
Frame read_pnm(const std::filesystem::path& path);
void write_pnm(const Frame& frame, const std::filesystem::path& path);

// Raw tensor file: magic "FRMS", u32 N,H,W,C, then N*H*W*C 32-bit floats,
// little-endian, frames in order, HWC within a frame.
std::vector<Frame> read_frms(const std::filesystem::path& path);
void write_frms(std::span<const Frame> frames, const std::filesystem::path& path);

// A video on disk is either <id>.frms or a directory <id>/ of PGM/PPM frames
// ordered by filename.
struct VideoRef {
    std::string id;
    std::filesystem::path path;
    bool is_frms = false;
};

std::vector<VideoRef> list_videos(const std::filesystem::path& dir);
std::vector<Frame> load_video(const VideoRef& ref);

}  // namespace tsvad
