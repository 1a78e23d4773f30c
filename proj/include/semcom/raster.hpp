#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace semcom {

// Row-major RGB image, 8 bits per channel.
struct ImageRaster {
    uint16_t width = 0;
    uint16_t height = 0;
    std::vector<uint8_t> pixels;  // width * height * 3

    bool valid() const {
        return width >= 1 && height >= 1 &&
               pixels.size() == static_cast<size_t>(width) * height * 3;
    }

    uint8_t* at(unsigned x, unsigned y) {
        return pixels.data() + (static_cast<size_t>(y) * width + x) * 3;
    }
    const uint8_t* at(unsigned x, unsigned y) const {
        return pixels.data() + (static_cast<size_t>(y) * width + x) * 3;
    }

    static ImageRaster filled(uint16_t w, uint16_t h, uint8_t r, uint8_t g, uint8_t b);

    bool operator==(const ImageRaster&) const = default;
};

// Binary PPM (P6, maxval 255). Throws ParseError on malformed input,
// InvariantViolation when asked to write an invalid raster.
std::vector<uint8_t> encode_ppm(const ImageRaster& img);
ImageRaster decode_ppm(const std::vector<uint8_t>& bytes);
void write_ppm(const ImageRaster& img, const std::string& path);
ImageRaster read_ppm(const std::string& path);

}  // namespace semcom
