#pragma once

// Internal little-endian byte packing used by the asset / .flo / PFM writers.
// Byte order is explicit so files are identical regardless of host platform.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "faceflow/error.hpp"

namespace faceflow::detail {

class ByteWriter {
  public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }

    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }

    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
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

    void bytes(const void* data, std::size_t n) {
        buf_.append(static_cast<const char*>(data), n);
    }

    const std::string& data() const { return buf_; }

    void write_file(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw_io("cannot open '" + path + "' for writing");
        out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        if (!out) throw_io("short write to '" + path + "'");
    }

  private:
    std::string buf_;
};

class ByteReader {
  public:
    ByteReader(std::string data, std::string source)
        : data_(std::move(data)), source_(std::move(source)) {}

    static ByteReader from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw_io("cannot open '" + path + "' for reading");
        std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return ByteReader(std::move(data), path);
    }

    std::uint8_t u8(const char* field) {
        need(1, field);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }

    std::uint32_t u32(const char* field) {
        need(4, field);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::int32_t i32(const char* field) { return static_cast<std::int32_t>(u32(field)); }

    std::uint64_t u64(const char* field) {
        need(8, field);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }

    float f32(const char* field) {
        std::uint32_t bits = u32(field);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    double f64(const char* field) {
        std::uint64_t bits = u64(field);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    void raw(void* out, std::size_t n, const char* field) {
        need(n, field);
        std::memcpy(out, data_.data() + pos_, n);
        pos_ += n;
    }

    std::size_t remaining() const { return data_.size() - pos_; }
    bool at_end() const { return pos_ == data_.size(); }
    const std::string& source() const { return source_; }

  private:
    void need(std::size_t n, const char* field) {
        if (data_.size() - pos_ < n)
            throw_format(source_ + ": truncated while reading " + field);
    }

    std::string data_;
    std::size_t pos_ = 0;
    std::string source_;
};

}  // namespace faceflow::detail
