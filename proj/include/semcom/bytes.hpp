#pragma once

#include <cstdint>
#include <vector>

namespace semcom {

// Little-endian byte stream writer.
struct ByteWriter {
    std::vector<uint8_t> out;

    void u8(uint8_t v) { out.push_back(v); }
    void u16(uint16_t v) {
        out.push_back(static_cast<uint8_t>(v & 0xFF));
        out.push_back(static_cast<uint8_t>(v >> 8));
    }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
    }
    void i8(int8_t v) { out.push_back(static_cast<uint8_t>(v)); }
    void i16(int16_t v) { u16(static_cast<uint16_t>(v)); }
    void raw(const uint8_t* p, size_t n) { out.insert(out.end(), p, p + n); }
};

// Throwing little-endian cursor; out-of-bounds reads raise E.
template <typename E>
struct ByteReader {
    const std::vector<uint8_t>& in;
    size_t pos = 0;

    explicit ByteReader(const std::vector<uint8_t>& b) : in(b) {}

    size_t remaining() const { return in.size() - pos; }
    void need(size_t n) const {
        if (remaining() < n) throw E("truncated input");
    }
    uint8_t u8() {
        need(1);
        return in[pos++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(in[pos] | (in[pos + 1] << 8));
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | in[pos + i];
        pos += 4;
        return v;
    }
    int8_t i8() { return static_cast<int8_t>(u8()); }
    int16_t i16() { return static_cast<int16_t>(u16()); }
    std::vector<uint8_t> raw(size_t n) {
        need(n);
        auto first = in.begin() + static_cast<ptrdiff_t>(pos);
        pos += n;
        return {first, first + static_cast<ptrdiff_t>(n)};
    }
};

}  // namespace semcom
