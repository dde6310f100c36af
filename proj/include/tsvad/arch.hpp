#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsvad/common.hpp"

namespace tsvad {

enum class LayerKind {
    kConv3d,
    kTransposedConv3d,
    kMaxPool,
    kAvgPool,
    kTemporalSqueeze,
    kConcatSkip,
};

struct TensorShape {
    std::uint32_t c = 0, t = 0, h = 0, w = 0;

    bool operator==(const TensorShape&) const = default;
    std::string str() const;
};

// One layer of a network chain. Kernel and stride are (temporal, spatial);
// padding -1 means the kind's default: half-kernel for convolutions, zero for
// pooling. Transposed convolutions follow the doubling rule: the output side
// is the input side times the stride. For concat-skip, out_channels is the
// channel count arriving over the skip connection.
struct LayerDesc {
    std::string name;
    LayerKind kind = LayerKind::kConv3d;
    std::uint32_t out_channels = 0;
    std::uint32_t kt = 1, ks = 1;
    std::uint32_t st = 1, ss = 1;
    std::int32_t pt = -1, ps = -1;
    bool has_expect = false;
    TensorShape expect;
};

struct ArchSpec {
    std::vector<LayerDesc> layers;
};

// A named chain with its input shape; an architecture file holds several
// (encoder, decoder, temporal-squeeze shortcuts).
struct ArchChain {
    std::string name;
    TensorShape input;
    ArchSpec spec;
};

// Output shape of every layer in order. Raises ArchSpecError naming the layer
// when an intermediate dimension becomes nonpositive.
std::vector<TensorShape> propagate_shapes(const ArchSpec& spec, TensorShape input);

struct ShapeCheckRow {
    std::string chain;
    std::string layer;
    TensorShape shape;
    bool has_expect = false;
    TensorShape expect;
    bool ok = true;
};

std::vector<ShapeCheckRow> check_shapes(const std::vector<ArchChain>& chains);

// The bundled spatiotemporal U-Net: 5-level I3D-style encoder, transposed
// convolution decoder with concat skips, and the per-level temporal squeeze
// shortcuts, each layer annotated with its expected output shape.
std::vector<ArchChain> builtin_video_unet_chains();

std::vector<ArchChain> parse_arch_json(const std::string& text, const std::string& source);
std::string arch_to_json(const std::vector<ArchChain>& chains);

}  // namespace tsvad
