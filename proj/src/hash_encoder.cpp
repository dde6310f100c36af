#include "tsvad/hash_encoder.hpp"

#include <cmath>

#include "tsvad/byte_io.hpp"
#include "tsvad/sha256.hpp"

namespace tsvad {

namespace {

constexpr char kEncoderMagic[] = "ILSH-ENC";  // written with trailing NUL, 9 bytes
constexpr std::uint16_t kEncoderVersion = 1;

void check_dims(const HashEncoder& encoder, std::size_t feature_len) {
    if (feature_len != encoder.input_dim) {
        throw InvalidArgumentError("encode: feature length " + std::to_string(feature_len) +
                                   " does not match encoder input_dim " +
                                   std::to_string(encoder.input_dim));
    }
}

}  // namespace

BinaryKey pack_bits(const std::vector<bool>& bits) {
    BinaryKey key;
    key.nbits = static_cast<std::uint32_t>(bits.size());
    key.bytes.assign((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) key.bytes[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    }
    return key;
}

std::vector<bool> unpack_bits(const BinaryKey& key) {
    std::vector<bool> bits(key.nbits);
    for (std::uint32_t i = 0; i < key.nbits; ++i) bits[i] = key.bit(i);
    return bits;
}

HashEncoder init_encoder(std::uint32_t input_dim, std::uint32_t num_layers,
                         std::uint32_t code_len, std::uint64_t seed) {
    if (input_dim == 0 || num_layers == 0 || code_len == 0) {
        throw InvalidArgumentError("init_encoder: dimensions must be positive");
    }
    HashEncoder encoder;
    encoder.input_dim = input_dim;
    encoder.code_len = code_len;
    encoder.ln_epsilon = 1e-5;
    encoder.layers.resize(num_layers);

    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (auto& layer : encoder.layers) {
        layer.weight.resize(static_cast<std::size_t>(input_dim) * code_len);
        for (auto& w : layer.weight) w = rng.uniform(-bound, bound);
        layer.bias.assign(code_len, 0.0);
        layer.ln_gain.assign(code_len, 1.0);
        layer.ln_bias.assign(code_len, 0.0);
    }
    return encoder;
}

HashCodeSet encode(const HashEncoder& encoder, std::span<const double> values) {
    check_dims(encoder, values.size());
    const std::uint32_t d_in = encoder.input_dim;
    const std::uint32_t r = encoder.code_len;

    HashCodeSet set;
    set.code_len = r;
    set.codes.reserve(encoder.layers.size());

    std::vector<double> z(r);
    for (const auto& layer : encoder.layers) {
        // z = W^T x + bias
        for (std::uint32_t j = 0; j < r; ++j) z[j] = layer.bias[j];
        for (std::uint32_t d = 0; d < d_in; ++d) {
            const double x = values[d];
            const double* row = layer.weight.data() + static_cast<std::size_t>(d) * r;
            for (std::uint32_t j = 0; j < r; ++j) z[j] += row[j] * x;
        }
        // layer normalization over the R components, population variance
        double mean = 0.0;
        for (std::uint32_t j = 0; j < r; ++j) mean += z[j];
        mean /= r;
        double var = 0.0;
        for (std::uint32_t j = 0; j < r; ++j) {
            const double c = z[j] - mean;
            var += c * c;
        }
        var /= r;
        const double inv_sigma = 1.0 / std::sqrt(var + encoder.ln_epsilon);

        std::vector<double> h(r);
        for (std::uint32_t j = 0; j < r; ++j) {
            const double y = (z[j] - mean) * inv_sigma * layer.ln_gain[j] + layer.ln_bias[j];
            h[j] = 1.0 / (1.0 + std::exp(-y));
            if (!std::isfinite(h[j])) throw NumericError("encode: non-finite hash code entry");
        }
        set.codes.push_back(std::move(h));
    }
    return set;
}

HashCodeSet encode(const HashEncoder& encoder, const FeatureVector& feature) {
    return encode(encoder, std::span<const double>(feature.values));
}

std::vector<double> concat_codes(const HashCodeSet& set) {
    if (set.codes.empty()) throw InvalidArgumentError("concat_codes: empty code set");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(set.codes.size()) * set.code_len);
    for (const auto& code : set.codes) out.insert(out.end(), code.begin(), code.end());
    return out;
}

BinaryKey binarize(std::span<const double> code) {
    if (code.empty()) throw InvalidArgumentError("binarize: empty code");
    std::vector<bool> bits(code.size());
    for (std::size_t i = 0; i < code.size(); ++i) {
        if (std::isnan(code[i])) throw NumericError("binarize: NaN code entry");
        bits[i] = !(code[i] < 0.5);
    }
    return pack_bits(bits);
}

std::vector<std::uint8_t> encoder_to_bytes(const HashEncoder& encoder) {
    ByteWriter w;
    w.bytes(kEncoderMagic, 9);
    w.u16(kEncoderVersion);
    w.u32(encoder.input_dim);
    w.u32(encoder.num_layers());
    w.u32(encoder.code_len);
    w.f64(encoder.ln_epsilon);
    for (const auto& layer : encoder.layers) {
        for (double v : layer.weight) w.f32(static_cast<float>(v));
        for (double v : layer.bias) w.f32(static_cast<float>(v));
        for (double v : layer.ln_gain) w.f32(static_cast<float>(v));
        for (double v : layer.ln_bias) w.f32(static_cast<float>(v));
    }
    return w.data();
}

HashEncoder encoder_from_bytes(const std::vector<std::uint8_t>& bytes, const std::string& source) {
    ByteReader r(bytes.data(), bytes.size(), source);
    char magic[9];
    r.bytes(magic, 9, "magic");
    if (std::memcmp(magic, kEncoderMagic, 9) != 0) r.fail("bad magic, not an encoder file");
    const std::uint16_t version = r.u16("version");
    if (version != kEncoderVersion) r.fail("unsupported encoder version " + std::to_string(version));

    HashEncoder encoder;
    encoder.input_dim = r.u32("input_dim");
    const std::uint32_t num_layers = r.u32("num_layers");
    encoder.code_len = r.u32("code_len");
    encoder.ln_epsilon = r.f64("ln_epsilon");
    if (encoder.input_dim == 0 || num_layers == 0 || encoder.code_len == 0) {
        r.fail("nonpositive dimension in header");
    }

    encoder.layers.resize(num_layers);
    for (auto& layer : encoder.layers) {
        layer.weight.resize(static_cast<std::size_t>(encoder.input_dim) * encoder.code_len);
        for (auto& v : layer.weight) v = r.f32("layer weight");
        layer.bias.resize(encoder.code_len);
        for (auto& v : layer.bias) v = r.f32("layer bias");
        layer.ln_gain.resize(encoder.code_len);
        for (auto& v : layer.ln_gain) v = r.f32("layer ln_gain");
        layer.ln_bias.resize(encoder.code_len);
        for (auto& v : layer.ln_bias) v = r.f32("layer ln_bias");
    }
    if (!r.exhausted()) r.fail("trailing bytes after last layer");
    return encoder;
}

void save_encoder(const HashEncoder& encoder, const std::filesystem::path& path) {
    write_file_bytes(path, encoder_to_bytes(encoder));
}

HashEncoder load_encoder(const std::filesystem::path& path) {
    return encoder_from_bytes(read_file_bytes(path), path.string());
}

std::array<std::uint8_t, 32> encoder_fingerprint(const HashEncoder& encoder) {
    return sha256(encoder_to_bytes(encoder));
}

}  // namespace tsvad
