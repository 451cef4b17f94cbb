#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "sentqa/error.hpp"

// Little-endian scalar I/O for the snapshot formats.
namespace sentqa::binio {

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    out.write(bytes.data(), bytes.size());
}

template <typename T>
T read_le(std::istream& in) {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    std::array<char, sizeof(T)> bytes;
    if (!in.read(bytes.data(), bytes.size())) throw Error("truncated snapshot");
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

inline void write_u32(std::ostream& out, std::uint32_t v) { write_le(out, v); }
inline void write_u64(std::ostream& out, std::uint64_t v) { write_le(out, v); }
inline void write_f64(std::ostream& out, double v) { write_le(out, v); }
inline std::uint32_t read_u32(std::istream& in) { return read_le<std::uint32_t>(in); }
inline std::uint64_t read_u64(std::istream& in) { return read_le<std::uint64_t>(in); }
inline double read_f64(std::istream& in) { return read_le<double>(in); }

inline void write_f64_array(std::ostream& out, std::span<const double> values) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size_bytes()));
    } else {
        for (const double v : values) write_f64(out, v);
    }
}

inline void read_f64_array(std::istream& in, std::span<double> values) {
    if constexpr (std::endian::native == std::endian::little) {
        if (!in.read(reinterpret_cast<char*>(values.data()),
                     static_cast<std::streamsize>(values.size_bytes()))) {
            throw Error("truncated snapshot");
        }
    } else {
        for (double& v : values) v = read_f64(in);
    }
}

inline void write_string(std::ostream& out, std::string_view s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, std::uint64_t max_len = 1u << 20) {
    const auto len = read_u64(in);
    if (len > max_len) throw Error("corrupt snapshot: string length " + std::to_string(len));
    std::string s(len, '\0');
    if (len > 0 && !in.read(s.data(), static_cast<std::streamsize>(len))) {
        throw Error("truncated snapshot");
    }
    return s;
}

inline void write_magic(std::ostream& out, std::string_view magic) {
    out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void expect_magic(std::istream& in, std::string_view magic) {
    std::string got(magic.size(), '\0');
    if (!in.read(got.data(), static_cast<std::streamsize>(got.size())) || got != magic) {
        throw Error("not a " + std::string(magic) + " snapshot");
    }
}

}  // namespace sentqa::binio
