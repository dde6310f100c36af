#include "tsvad/arch.hpp"

#include <json.hpp>

namespace tsvad {

namespace {

using nlohmann::json;

std::uint32_t conv_extent(std::uint32_t in, std::uint32_t k, std::uint32_t s, std::int32_t pad,
                          const std::string& layer, const char* axis) {
    const std::int64_t padded = static_cast<std::int64_t>(in) + 2 * static_cast<std::int64_t>(pad);
    const std::int64_t out = (padded - k) / s + 1;
    if (padded < k || out < 1) {
        throw ArchSpecError("layer '" + layer + "': nonpositive " + axis +
                            " extent (input " + std::to_string(in) + ", kernel " +
                            std::to_string(k) + ", stride " + std::to_string(s) + ", padding " +
                            std::to_string(pad) + ")");
    }
    return static_cast<std::uint32_t>(out);
}

void validate(const LayerDesc& l) {
    if (l.kt == 0 || l.ks == 0 || l.st == 0 || l.ss == 0) {
        throw ArchSpecError("layer '" + l.name + "': kernel and stride must be positive");
    }
    const bool needs_channels = l.kind == LayerKind::kConv3d ||
                                l.kind == LayerKind::kTransposedConv3d ||
                                l.kind == LayerKind::kConcatSkip;
    if (needs_channels && l.out_channels == 0) {
        throw ArchSpecError("layer '" + l.name + "': out_channels must be positive");
    }
}

const char* kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::kConv3d: return "conv3d";
        case LayerKind::kTransposedConv3d: return "transposed-conv3d";
        case LayerKind::kMaxPool: return "maxpool";
        case LayerKind::kAvgPool: return "avgpool";
        case LayerKind::kTemporalSqueeze: return "temporal-squeeze";
        case LayerKind::kConcatSkip: return "concat-skip";
    }
    return "?";
}

LayerKind kind_from_name(const std::string& name, const std::string& source) {
    if (name == "conv3d") return LayerKind::kConv3d;
    if (name == "transposed-conv3d") return LayerKind::kTransposedConv3d;
    if (name == "maxpool") return LayerKind::kMaxPool;
    if (name == "avgpool") return LayerKind::kAvgPool;
    if (name == "temporal-squeeze") return LayerKind::kTemporalSqueeze;
    if (name == "concat-skip") return LayerKind::kConcatSkip;
    throw FormatError(source + ": unknown layer kind '" + name + "'");
}

}  // namespace

std::string TensorShape::str() const {
    return "(" + std::to_string(c) + "," + std::to_string(t) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
}

std::vector<TensorShape> propagate_shapes(const ArchSpec& spec, TensorShape input) {
    if (input.c == 0 || input.t == 0 || input.h == 0 || input.w == 0) {
        throw ArchSpecError("input shape has a nonpositive dimension");
    }
    std::vector<TensorShape> shapes;
    shapes.reserve(spec.layers.size());
    TensorShape cur = input;
    for (const auto& layer : spec.layers) {
        validate(layer);
        switch (layer.kind) {
            case LayerKind::kConv3d: {
                const std::int32_t pt = layer.pt < 0 ? static_cast<std::int32_t>(layer.kt / 2)
                                                     : layer.pt;
                const std::int32_t ps = layer.ps < 0 ? static_cast<std::int32_t>(layer.ks / 2)
                                                     : layer.ps;
                cur.t = conv_extent(cur.t, layer.kt, layer.st, pt, layer.name, "temporal");
                cur.h = conv_extent(cur.h, layer.ks, layer.ss, ps, layer.name, "height");
                cur.w = conv_extent(cur.w, layer.ks, layer.ss, ps, layer.name, "width");
                cur.c = layer.out_channels;
                break;
            }
            case LayerKind::kMaxPool:
            case LayerKind::kAvgPool: {
                const std::int32_t pt = layer.pt < 0 ? 0 : layer.pt;
                const std::int32_t ps = layer.ps < 0 ? 0 : layer.ps;
                cur.t = conv_extent(cur.t, layer.kt, layer.st, pt, layer.name, "temporal");
                cur.h = conv_extent(cur.h, layer.ks, layer.ss, ps, layer.name, "height");
                cur.w = conv_extent(cur.w, layer.ks, layer.ss, ps, layer.name, "width");
                break;
            }
            case LayerKind::kTransposedConv3d: {
                cur.t *= layer.st;
                cur.h *= layer.ss;
                cur.w *= layer.ss;
                cur.c = layer.out_channels;
                break;
            }
            case LayerKind::kTemporalSqueeze: {
                cur.t = 1;
                break;
            }
            case LayerKind::kConcatSkip: {
                cur.c += layer.out_channels;
                break;
            }
        }
        shapes.push_back(cur);
    }
    return shapes;
}

std::vector<ShapeCheckRow> check_shapes(const std::vector<ArchChain>& chains) {
    std::vector<ShapeCheckRow> rows;
    for (const auto& chain : chains) {
        const auto shapes = propagate_shapes(chain.spec, chain.input);
        for (std::size_t i = 0; i < shapes.size(); ++i) {
            const auto& layer = chain.spec.layers[i];
            ShapeCheckRow row;
            row.chain = chain.name;
            row.layer = layer.name;
            row.shape = shapes[i];
            row.has_expect = layer.has_expect;
            if (layer.has_expect) {
                row.expect = layer.expect;
                row.ok = (shapes[i] == layer.expect);
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

namespace {

LayerDesc conv(std::string name, std::uint32_t c, std::uint32_t kt, std::uint32_t ks,
               std::uint32_t st = 1, std::uint32_t ss = 1) {
    LayerDesc l;
    l.name = std::move(name);
    l.kind = LayerKind::kConv3d;
    l.out_channels = c;
    l.kt = kt;
    l.ks = ks;
    l.st = st;
    l.ss = ss;
    return l;
}

LayerDesc tconv(std::string name, std::uint32_t c, std::uint32_t ks) {
    LayerDesc l;
    l.name = std::move(name);
    l.kind = LayerKind::kTransposedConv3d;
    l.out_channels = c;
    l.ks = ks;
    l.ss = 2;  // transposed convolutions in this network all double the side
    return l;
}

LayerDesc pool(std::string name, LayerKind kind, std::uint32_t kt, std::uint32_t ks,
               std::uint32_t st, std::uint32_t ss, std::int32_t ps = -1) {
    LayerDesc l;
    l.name = std::move(name);
    l.kind = kind;
    l.kt = kt;
    l.ks = ks;
    l.st = st;
    l.ss = ss;
    l.ps = ps;
    return l;
}

LayerDesc skip(std::string name, std::uint32_t channels) {
    LayerDesc l;
    l.name = std::move(name);
    l.kind = LayerKind::kConcatSkip;
    l.out_channels = channels;
    return l;
}

LayerDesc expect(LayerDesc l, std::uint32_t c, std::uint32_t t, std::uint32_t hw) {
    l.has_expect = true;
    l.expect = {c, t, hw, hw};
    return l;
}

// Bottleneck block with a temporal 3x1x1 convolution first.
void push_fn1(std::vector<LayerDesc>& out, const std::string& prefix, std::uint32_t n,
              bool downsample = false) {
    out.push_back(conv(prefix + ".a", n, 3, 1));
    out.push_back(conv(prefix + ".b", n, 1, 3, 1, downsample ? 2u : 1u));
    out.push_back(conv(prefix + ".c", 4 * n, 1, 1));
}

// Bottleneck block without the temporal convolution.
void push_fn2(std::vector<LayerDesc>& out, const std::string& prefix, std::uint32_t n,
              bool downsample = false) {
    out.push_back(conv(prefix + ".a", n, 1, 1));
    out.push_back(conv(prefix + ".b", n, 1, 3, 1, downsample ? 2u : 1u));
    out.push_back(conv(prefix + ".c", 4 * n, 1, 1));
}

// Decoder block: three convolutions then an upsampling transposed convolution.
void push_fn3(std::vector<LayerDesc>& out, const std::string& prefix, std::uint32_t n) {
    out.push_back(conv(prefix + ".a", n, 1, 3));
    out.push_back(conv(prefix + ".b", n, 1, 3));
    out.push_back(conv(prefix + ".c", 4 * n, 1, 3));
    out.push_back(tconv(prefix + ".up", 2 * n, 2));
}

}  // namespace

std::vector<ArchChain> builtin_video_unet_chains() {
    std::vector<ArchChain> chains;

    // encoder: I3D ResNet-50 backbone, 5 levels
    {
        ArchChain enc;
        enc.name = "encoder";
        enc.input = {3, 8, 256, 256};
        auto& l = enc.spec.layers;
        l.push_back(expect(conv("L1.stem", 64, 5, 7, 1, 2), 64, 8, 128));
        l.push_back(expect(pool("L1.maxpool", LayerKind::kMaxPool, 1, 3, 1, 2, 1), 64, 8, 64));
        push_fn1(l, "L1.block1", 64);
        push_fn1(l, "L1.block2", 64);
        push_fn1(l, "L1.block3", 64);
        l.back() = expect(l.back(), 256, 8, 64);
        l.push_back(expect(pool("L1.tpool", LayerKind::kMaxPool, 2, 1, 2, 1), 256, 4, 64));

        push_fn1(l, "L2.block1", 128, /*downsample=*/true);
        push_fn2(l, "L2.block2", 128);
        push_fn1(l, "L2.block3", 128);
        push_fn2(l, "L2.block4", 128);
        l.back() = expect(l.back(), 512, 4, 32);

        push_fn1(l, "L3.block1", 256, /*downsample=*/true);
        push_fn2(l, "L3.block2", 256);
        push_fn1(l, "L3.block3", 256);
        push_fn2(l, "L3.block4", 256);
        push_fn1(l, "L3.block5", 256);
        push_fn2(l, "L3.block6", 256);
        l.back() = expect(l.back(), 1024, 4, 16);

        push_fn2(l, "L4.block1", 512, /*downsample=*/true);
        push_fn1(l, "L4.block2", 512);
        push_fn2(l, "L4.block3", 512);
        l.back() = expect(l.back(), 2048, 4, 8);

        l.push_back(expect(pool("L5.avgpool", LayerKind::kAvgPool, 4, 7, 1, 1), 2048, 1, 2));
        chains.push_back(std::move(enc));
    }

    // temporal squeezing layers on the skip connections
    const std::uint32_t tsl_channels[4] = {256, 512, 1024, 2048};
    const std::uint32_t tsl_sides[4] = {64, 32, 16, 8};
    for (int i = 0; i < 4; ++i) {
        ArchChain tsl;
        tsl.name = "tsl.L" + std::to_string(i + 1);
        tsl.input = {tsl_channels[i], 4, tsl_sides[i], tsl_sides[i]};
        LayerDesc l;
        l.name = "squeeze";
        l.kind = LayerKind::kTemporalSqueeze;
        l.kt = 4;
        l = expect(std::move(l), tsl_channels[i], 1, tsl_sides[i]);
        tsl.spec.layers.push_back(std::move(l));
        chains.push_back(std::move(tsl));
    }

    // decoder
    {
        ArchChain dec;
        dec.name = "decoder";
        dec.input = {2048, 1, 2, 2};
        auto& l = dec.spec.layers;
        l.push_back(conv("L5.conv1", 512, 1, 1));
        l.push_back(expect(tconv("L5.up1", 512, 2), 512, 1, 4));
        l.push_back(conv("L5.conv2", 512, 1, 1));
        l.push_back(expect(tconv("L5.up2", 2048, 1), 2048, 1, 8));

        l.push_back(skip("L4.skip", 2048));
        push_fn3(l, "L4", 512);
        l.back() = expect(l.back(), 1024, 1, 16);

        l.push_back(skip("L3.skip", 1024));
        push_fn3(l, "L3", 256);
        l.back() = expect(l.back(), 512, 1, 32);

        l.push_back(skip("L2.skip", 512));
        push_fn3(l, "L2", 128);
        l.back() = expect(l.back(), 256, 1, 64);

        l.push_back(skip("L1.skip", 256));
        push_fn3(l, "L1", 64);
        l.back() = expect(l.back(), 128, 1, 128);
        push_fn3(l, "L1b", 32);
        l.back() = expect(l.back(), 64, 1, 256);

        l.push_back(conv("out.conv1", 64, 1, 3));
        l.push_back(conv("out.conv2", 3, 1, 3));
        l.push_back(expect(conv("out.conv3", 3, 1, 3), 3, 1, 256));
        chains.push_back(std::move(dec));
    }
    return chains;
}

std::vector<ArchChain> parse_arch_json(const std::string& text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(source + ": invalid JSON: " + e.what());
    }
    if (!doc.contains("chains") || !doc["chains"].is_array()) {
        throw FormatError(source + ": missing 'chains' array");
    }
    std::vector<ArchChain> chains;
    for (const auto& jc : doc["chains"]) {
        ArchChain chain;
        chain.name = jc.value("name", "chain" + std::to_string(chains.size()));
        const auto& in = jc.at("input");
        if (!in.is_array() || in.size() != 4) {
            throw FormatError(source + ": chain input must be [C,T,H,W]");
        }
        chain.input = {in[0].get<std::uint32_t>(), in[1].get<std::uint32_t>(),
                       in[2].get<std::uint32_t>(), in[3].get<std::uint32_t>()};
        for (const auto& jl : jc.at("layers")) {
            LayerDesc l;
            l.name = jl.value("name", "layer" + std::to_string(chain.spec.layers.size()));
            l.kind = kind_from_name(jl.at("kind").get<std::string>(), source);
            l.out_channels = jl.value("out_channels", 0u);
            if (l.kind == LayerKind::kConcatSkip && jl.contains("skip_channels")) {
                l.out_channels = jl["skip_channels"].get<std::uint32_t>();
            }
            l.kt = jl.value("kt", 1u);
            l.ks = jl.value("ks", 1u);
            l.st = jl.value("st", 1u);
            l.ss = jl.value("ss", 1u);
            l.pt = jl.value("pt", -1);
            l.ps = jl.value("ps", -1);
            if (jl.contains("expect")) {
                const auto& ex = jl["expect"];
                if (!ex.is_array() || ex.size() != 4) {
                    throw FormatError(source + ": layer expect must be [C,T,H,W]");
                }
                l.has_expect = true;
                l.expect = {ex[0].get<std::uint32_t>(), ex[1].get<std::uint32_t>(),
                            ex[2].get<std::uint32_t>(), ex[3].get<std::uint32_t>()};
            }
            chain.spec.layers.push_back(std::move(l));
        }
        chains.push_back(std::move(chain));
    }
    return chains;
}

std::string arch_to_json(const std::vector<ArchChain>& chains) {
    json doc;
    doc["chains"] = json::array();
    for (const auto& chain : chains) {
        json jc;
        jc["name"] = chain.name;
        jc["input"] = {chain.input.c, chain.input.t, chain.input.h, chain.input.w};
        jc["layers"] = json::array();
        for (const auto& l : chain.spec.layers) {
            json jl;
            jl["name"] = l.name;
            jl["kind"] = kind_name(l.kind);
            if (l.out_channels != 0) {
                jl[l.kind == LayerKind::kConcatSkip ? "skip_channels" : "out_channels"] =
                    l.out_channels;
            }
            if (l.kt != 1) jl["kt"] = l.kt;
            if (l.ks != 1) jl["ks"] = l.ks;
            if (l.st != 1) jl["st"] = l.st;
            if (l.ss != 1) jl["ss"] = l.ss;
            if (l.pt != -1) jl["pt"] = l.pt;
            if (l.ps != -1) jl["ps"] = l.ps;
            if (l.has_expect) jl["expect"] = {l.expect.c, l.expect.t, l.expect.h, l.expect.w};
            jc["layers"].push_back(std::move(jl));
        }
        doc["chains"].push_back(std::move(jc));
    }
    return doc.dump(2) + "\n";
}

}  // namespace tsvad
