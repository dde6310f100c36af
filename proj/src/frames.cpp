#include "tsvad/frames.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tsvad/byte_io.hpp"

namespace tsvad {

namespace {

constexpr char kFrmsMagic[] = "FRMS";

// PNM header token reader skipping whitespace and '#' comments.
int next_pnm_int(std::istream& in, const std::string& source) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF) throw FormatError(source + ": truncated PNM header");
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw FormatError(source + ": malformed PNM header");
    return value;
}

}  // namespace

Frame make_frame(std::uint32_t height, std::uint32_t width, std::uint32_t channels, float fill) {
    if (height == 0 || width == 0 || (channels != 1 && channels != 3)) {
        throw InvalidArgumentError("make_frame: bad shape");
    }
    Frame f;
    f.height = height;
    f.width = width;
    f.channels = channels;
    f.pixels.assign(static_cast<std::size_t>(height) * width * channels, fill);
    return f;
}

Frame read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open image: " + path.string());
    const std::string source = path.string();

    char p = 0, type = 0;
    in.get(p);
    in.get(type);
    if (p != 'P' || (type != '5' && type != '6')) {
        throw FormatError(source + ": not a P5/P6 PNM file");
    }
    const std::uint32_t channels = (type == '6') ? 3 : 1;
    const int width = next_pnm_int(in, source);
    const int height = next_pnm_int(in, source);
    const int maxval = next_pnm_int(in, source);
    if (width <= 0 || height <= 0) throw FormatError(source + ": nonpositive image size");
    if (maxval <= 0 || maxval > 255) throw FormatError(source + ": only 8-bit PNM supported");

    Frame frame = make_frame(static_cast<std::uint32_t>(height), static_cast<std::uint32_t>(width),
                             channels);
    const std::size_t n = frame.pixels.size();
    std::vector<std::uint8_t> raw(n);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n))) {
        throw FormatError(source + ": truncated pixel data");
    }
    const float scale = 1.0f / static_cast<float>(maxval);
    for (std::size_t i = 0; i < n; ++i) frame.pixels[i] = static_cast<float>(raw[i]) * scale;
    return frame;
}

void write_pnm(const Frame& frame, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open image for writing: " + path.string());
    out << (frame.channels == 3 ? "P6" : "P5") << "\n"
        << frame.width << " " << frame.height << "\n255\n";
    std::vector<std::uint8_t> raw(frame.pixels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const float v = std::clamp(frame.pixels[i], 0.0f, 1.0f);
        raw[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw FormatError("failed writing image: " + path.string());
}

std::vector<Frame> read_frms(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    ByteReader r(bytes.data(), bytes.size(), path.string());
    char magic[4];
    r.bytes(magic, 4, "magic");
    if (std::memcmp(magic, kFrmsMagic, 4) != 0) r.fail("bad magic, not a FRMS file");
    const std::uint32_t n = r.u32("frame count");
    const std::uint32_t h = r.u32("height");
    const std::uint32_t w = r.u32("width");
    const std::uint32_t c = r.u32("channels");
    if (h == 0 || w == 0 || (c != 1 && c != 3)) r.fail("bad tensor shape in header");

    std::vector<Frame> frames;
    frames.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        Frame f = make_frame(h, w, c);
        for (auto& px : f.pixels) px = r.f32("pixel data");
        frames.push_back(std::move(f));
    }
    if (!r.exhausted()) r.fail("trailing bytes after last frame");
    return frames;
}

void write_frms(std::span<const Frame> frames, const std::filesystem::path& path) {
    if (frames.empty()) throw InvalidArgumentError("write_frms: no frames");
    const Frame& first = frames.front();
    ByteWriter w;
    w.bytes(kFrmsMagic, 4);
    w.u32(static_cast<std::uint32_t>(frames.size()));
    w.u32(first.height);
    w.u32(first.width);
    w.u32(first.channels);
    for (const auto& f : frames) {
        if (!f.same_shape(first)) throw InvalidArgumentError("write_frms: mixed frame shapes");
        for (float px : f.pixels) w.f32(px);
    }
    write_file_bytes(path, w.data());
}

std::vector<VideoRef> list_videos(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw InvalidArgumentError("list_videos: not a directory: " + dir.string());
    }
    std::vector<VideoRef> refs;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_directory()) {
            refs.push_back({entry.path().filename().string(), entry.path(), false});
        } else if (entry.path().extension() == ".frms") {
            refs.push_back({entry.path().stem().string(), entry.path(), true});
        }
    }
    std::sort(refs.begin(), refs.end(),
              [](const VideoRef& a, const VideoRef& b) { return a.id < b.id; });
    return refs;
}

std::vector<Frame> load_video(const VideoRef& ref) {
    if (ref.is_frms) return read_frms(ref.path);
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(ref.path)) {
        const auto ext = entry.path().extension();
        if (ext == ".pgm" || ext == ".ppm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw InvalidArgumentError("load_video: no frames in " + ref.path.string());
    }
    std::vector<Frame> frames;
    frames.reserve(files.size());
    for (const auto& f : files) frames.push_back(read_pnm(f));
    for (const auto& f : frames) {
        if (!f.same_shape(frames.front())) {
            throw FormatError("load_video: mixed frame shapes in " + ref.path.string());
        }
    }
    return frames;
}

}  // namespace tsvad
