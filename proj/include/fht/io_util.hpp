#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "fht/errors.hpp"

namespace fht::io {

// Little-endian encoding, independent of host byte order.

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(os, bits);
}

/// Stream reader that tracks its byte offset for parse diagnostics.
class Reader {
  public:
    explicit Reader(std::istream& is) : is_(is) {}

    std::size_t offset() const { return offset_; }

    void bytes(void* dst, std::size_t n, const char* what) {
        is_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is_.gcount()) != n) {
            throw ParseError(std::string("unexpected end of file reading ") + what, offset_);
        }
        offset_ += n;
    }

    std::uint32_t u32(const char* what) {
        unsigned char b[4];
        bytes(b, 4, what);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    std::uint64_t u64(const char* what) {
        unsigned char b[8];
        bytes(b, 8, what);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    double f64(const char* what) {
        const std::uint64_t bits = u64(what);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    void expect_magic(const char magic[4]) {
        char got[4];
        const std::size_t at = offset_;
        bytes(got, 4, "magic");
        if (std::memcmp(got, magic, 4) != 0) {
            throw ParseError(std::string("bad magic, expected \"") + std::string(magic, 4) + "\"",
                             at);
        }
    }

  private:
    std::istream& is_;
    std::size_t offset_ = 0;
};

}  // namespace fht::io
