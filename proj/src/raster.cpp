#include "semcom/raster.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>

#include "semcom/errors.hpp"

namespace semcom {

ImageRaster ImageRaster::filled(uint16_t w, uint16_t h, uint8_t r, uint8_t g, uint8_t b) {
    ImageRaster img;
    img.width = w;
    img.height = h;
    img.pixels.resize(static_cast<size_t>(w) * h * 3);
    for (size_t i = 0; i < img.pixels.size(); i += 3) {
        img.pixels[i] = r;
        img.pixels[i + 1] = g;
        img.pixels[i + 2] = b;
    }
    return img;
}

std::vector<uint8_t> encode_ppm(const ImageRaster& img) {
    if (!img.valid()) throw InvariantViolation("encode_ppm: invalid raster");
    char header[64];
    int n = std::snprintf(header, sizeof(header), "P6\n%u %u\n255\n", img.width, img.height);
    std::vector<uint8_t> out(header, header + n);
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

namespace {

// Reads the next whitespace/comment-delimited unsigned integer of a PPM header.
unsigned next_header_uint(const std::vector<uint8_t>& b, size_t& pos) {
    while (pos < b.size()) {
        if (std::isspace(b[pos])) {
            ++pos;
        } else if (b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    if (pos >= b.size() || !std::isdigit(b[pos])) throw ParseError("ppm: expected integer in header");
    unsigned v = 0;
    while (pos < b.size() && std::isdigit(b[pos])) {
        v = v * 10 + (b[pos] - '0');
        if (v > 1000000) throw ParseError("ppm: header value out of range");
        ++pos;
    }
    return v;
}

}  // namespace

ImageRaster decode_ppm(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
        throw ParseError("ppm: not a P6 file");
    size_t pos = 2;
    const unsigned w = next_header_uint(bytes, pos);
    const unsigned h = next_header_uint(bytes, pos);
    const unsigned maxval = next_header_uint(bytes, pos);
    if (maxval != 255) throw ParseError("ppm: only maxval 255 supported");
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw ParseError("ppm: missing separator after maxval");
    ++pos;  // exactly one whitespace byte before pixel data
    if (w < 1 || h < 1 || w > 65535 || h > 65535) throw ParseError("ppm: bad dimensions");
    const size_t need = static_cast<size_t>(w) * h * 3;
    if (bytes.size() - pos < need) throw ParseError("ppm: truncated pixel data");
    ImageRaster img;
    img.width = static_cast<uint16_t>(w);
    img.height = static_cast<uint16_t>(h);
    img.pixels.assign(bytes.begin() + pos, bytes.begin() + pos + need);
    return img;
}

void write_ppm(const ImageRaster& img, const std::string& path) {
    const std::vector<uint8_t> data = encode_ppm(img);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("ppm: cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!f) throw ParseError("ppm: write failed: " + path);
}

ImageRaster read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("ppm: cannot open: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_ppm(bytes);
}

}  // namespace semcom
