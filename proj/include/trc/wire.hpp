#pragma once

// Little-endian binary primitives shared by the dataset and checkpoint
// formats. Buffers are std::string so they can be written/read in one call.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>

#include "trc/common.hpp"

namespace trc::wire {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

inline void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

/// Bounds-checked sequential reader; truncation surfaces as FormatError.
class Reader {
public:
    Reader(const std::string& data, std::size_t offset = 0) : data_(data), off_(offset) {}

    std::uint8_t u8() { return take(1)[0]; }

    std::uint32_t u32() {
        const unsigned char* p = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        return v;
    }

    std::uint64_t u64() {
        const unsigned char* p = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }
    float f32() { return std::bit_cast<float>(u32()); }

    std::string bytes(std::size_t n) {
        const unsigned char* p = take(n);
        return std::string(reinterpret_cast<const char*>(p), n);
    }

    std::size_t offset() const { return off_; }
    bool exhausted() const { return off_ == data_.size(); }

private:
    const unsigned char* take(std::size_t n) {
        if (off_ + n > data_.size()) throw FormatError("truncated payload");
        const unsigned char* p = reinterpret_cast<const unsigned char*>(data_.data()) + off_;
        off_ += n;
        return p;
    }

    const std::string& data_;
    std::size_t off_ = 0;
};

std::string read_file(const std::string& path);             // IoError on failure
void write_file(const std::string& path, const std::string& bytes);

}  // namespace trc::wire
