#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "tsvad/common.hpp"

namespace tsvad {

// Little-endian byte buffer writer. All on-disk formats in this project are
// little-endian regardless of host order.
class ByteWriter {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        buf_.insert(buf_.end(), p, p + n);
    }
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }

    const std::vector<std::uint8_t>& data() const { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

// Reader over an in-memory buffer. Every read names the section it expects so
// truncation errors report what is missing and at which byte offset.
class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t size, std::string source)
        : data_(data), size_(size), source_(std::move(source)) {}

    std::size_t offset() const { return pos_; }
    bool exhausted() const { return pos_ >= size_; }

    void bytes(void* out, std::size_t n, const char* section) {
        require(n, section);
        std::memcpy(out, data_ + pos_, n);
        pos_ += n;
    }
    std::uint8_t u8(const char* section) {
        require(1, section);
        return data_[pos_++];
    }
    std::uint16_t u16(const char* section) {
        require(2, section);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32(const char* section) {
        require(4, section);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64(const char* section) {
        require(8, section);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    float f32(const char* section) {
        std::uint32_t bits = u32(section);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    double f64(const char* section) {
        std::uint64_t bits = u64(section);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError(source_ + ": " + what + " at byte offset " + std::to_string(pos_));
    }

private:
    void require(std::size_t n, const char* section) const {
        if (pos_ + n > size_) {
            throw FormatError(source_ + ": truncated file, missing " + section +
                              " at byte offset " + std::to_string(pos_));
        }
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
    std::string source_;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace tsvad
