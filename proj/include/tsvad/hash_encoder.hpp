#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tsvad/common.hpp"

namespace tsvad {

// One hash layer: linear map, layer normalization with learnable affine, sigmoid.
// weight is D x R row-major (row d holds the R output weights of input d).
struct HashLayer {
    std::vector<double> weight;
    std::vector<double> bias;
    std::vector<double> ln_gain;
    std::vector<double> ln_bias;
};

// A group of parallel hash layers sharing input dimension D and code length R.
struct HashEncoder {
    std::uint32_t input_dim = 0;
    std::uint32_t code_len = 0;
    double ln_epsilon = 1e-5;
    std::vector<HashLayer> layers;

    std::uint32_t num_layers() const { return static_cast<std::uint32_t>(layers.size()); }
};

// One event's embedding plus its provenance in the source video. frame_index is
// the index of the snippet's last frame, 1-based in score files.
struct FeatureVector {
    std::vector<double> values;
    std::string video_id;
    std::uint32_t frame_index = 0;
};

// B real-valued codes, entries strictly inside (0,1).
struct HashCodeSet {
    std::uint32_t code_len = 0;
    std::vector<std::vector<double>> codes;

    std::uint32_t num_codes() const { return static_cast<std::uint32_t>(codes.size()); }
};

// Packed binary key: bit i lives at bit position (i % 8) of byte i / 8,
// bytes in little-endian order. Unused trailing bits are zero so equal keys
// are byte-equal.
struct BinaryKey {
    std::uint32_t nbits = 0;
    std::vector<std::uint8_t> bytes;

    bool operator==(const BinaryKey& other) const = default;
    bool bit(std::uint32_t i) const { return (bytes[i / 8] >> (i % 8)) & 1u; }
};

struct BinaryKeyHash {
    std::size_t operator()(const BinaryKey& k) const {
        std::uint64_t h = 1469598103934665603ull ^ k.nbits;
        for (auto b : k.bytes) {
            h ^= b;
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

BinaryKey pack_bits(const std::vector<bool>& bits);
std::vector<bool> unpack_bits(const BinaryKey& key);

// Seeded construction: weights i.i.d. uniform on [-1/sqrt(D), +1/sqrt(D)],
// bias 0, ln_gain 1, ln_bias 0. Identical seed gives a bit-identical encoder.
HashEncoder init_encoder(std::uint32_t input_dim, std::uint32_t num_layers,
                         std::uint32_t code_len, std::uint64_t seed);

// Forward pass of every hash layer: sigmoid(LN(W^T x + bias)).
HashCodeSet encode(const HashEncoder& encoder, const FeatureVector& feature);
HashCodeSet encode(const HashEncoder& encoder, std::span<const double> values);

// Codes concatenated in layer order into one length B*R vector.
std::vector<double> concat_codes(const HashCodeSet& set);

// Threshold at 0.5; entries >= 0.5 map to 1. NaN raises NumericError.
BinaryKey binarize(std::span<const double> code);

// Encoder persistence: magic "ILSH-ENC\0", version, dims, ln_epsilon, then per
// layer weight/bias/ln_gain/ln_bias as 32-bit floats, all little-endian.
std::vector<std::uint8_t> encoder_to_bytes(const HashEncoder& encoder);
HashEncoder encoder_from_bytes(const std::vector<std::uint8_t>& bytes, const std::string& source);
void save_encoder(const HashEncoder& encoder, const std::filesystem::path& path);
HashEncoder load_encoder(const std::filesystem::path& path);

// SHA-256 of the canonical serialization; ties a knowledge base to the encoder
// that produced it.
std::array<std::uint8_t, 32> encoder_fingerprint(const HashEncoder& encoder);

}  // namespace tsvad
