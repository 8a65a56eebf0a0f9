#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace adadqa::io {

// Little-endian primitives for the binary file formats (clip files, feature
// caches, checkpoints). Written byte by byte so the formats are identical on
// any host.

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
    write_u32(os, static_cast<std::uint32_t>(v & 0xffffffffULL));
    write_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("unexpected end of file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t read_u64(std::istream& is) {
    const std::uint64_t lo = read_u32(is);
    const std::uint64_t hi = read_u32(is);
    return lo | (hi << 32);
}

inline void write_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(os, bits);
}

inline float read_f32(std::istream& is) {
    const std::uint32_t bits = read_u32(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

inline void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(os, bits);
}

inline double read_f64(std::istream& is) {
    const std::uint64_t bits = read_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
    const std::uint32_t n = read_u32(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw std::runtime_error("unexpected end of file");
    return s;
}

inline void write_f32_array(std::ostream& os, const float* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) write_f32(os, p[i]);
}

inline void read_f32_array(std::istream& is, float* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) p[i] = read_f32(is);
}

inline void write_magic(std::ostream& os, const char (&magic)[9]) { os.write(magic, 8); }

inline bool check_magic(std::istream& is, const char (&magic)[9]) {
    char buf[8];
    is.read(buf, 8);
    return is && std::memcmp(buf, magic, 8) == 0;
}

}  // namespace adadqa::io
