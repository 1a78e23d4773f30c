#pragma once

// Explainable semantic payload types and their discrete codecs: caption text,
// coarse label maps with instance boxes, fine polygon contours, and ROI-masked
// sub-image crops. All layouts are little-endian and byte-exact so transmitter
// and receiver interoperate and element sizes are measurable.

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "semcom/errors.hpp"
#include "semcom/raster.hpp"

namespace semcom {

constexpr uint8_t kBackgroundClass = 255;
constexpr size_t kMaxIsTextBytes = 200;

// Caption-style sentence, at most 200 UTF-8 bytes on the wire.
struct IsText {
    std::string text;
    bool operator==(const IsText&) const = default;
};

struct AsegInstance {
    uint16_t instance_id = 0;
    uint8_t category_id = 0;
    std::array<uint16_t, 4> bbox{};  // x, y, w, h in pixels
    bool operator==(const AsegInstance&) const = default;
};

// Coarse segmentation: per-pixel category labels plus instance boxes.
struct AsegMap {
    uint16_t width = 0;
    uint16_t height = 0;
    std::vector<AsegInstance> instances;
    std::vector<uint8_t> class_grid;  // width*height, row-major, 255 = background
    bool operator==(const AsegMap&) const = default;
};

using Vertex = std::array<uint16_t, 2>;  // x, y

struct BsegRegion {
    uint16_t instance_id = 0;
    uint8_t category_id = 0;
    std::vector<Vertex> polygon;  // closed simple polygon, >= 3 vertices
    bool operator==(const BsegRegion&) const = default;
};

// Fine-contour segmentation: one polygon region per instance.
struct BsegMap {
    uint16_t width = 0;
    uint16_t height = 0;
    std::vector<BsegRegion> regions;
    bool operator==(const BsegMap&) const = default;
};

// ROI-masked crop of one instance; pixels outside the mask are zero.
struct SubImage {
    uint16_t instance_id = 0;
    std::array<uint16_t, 4> bbox{};  // x, y, w, h
    std::vector<uint8_t> pixels;     // w*h*3
    bool operator==(const SubImage&) const = default;
};

enum class ElementKind : uint8_t {
    TEXT = 0x01,
    ASEG = 0x02,
    BSEG = 0x03,
    SIMG = 0x04,
};

const char* to_string(ElementKind k);

// The unit of transmission: exactly one payload, tagged by kind.
struct SemanticElement {
    std::variant<IsText, AsegMap, BsegMap, std::vector<SubImage>> payload;

    ElementKind kind() const {
        switch (payload.index()) {
            case 0: return ElementKind::TEXT;
            case 1: return ElementKind::ASEG;
            case 2: return ElementKind::BSEG;
            default: return ElementKind::SIMG;
        }
    }
    const IsText& text() const { return std::get<IsText>(payload); }
    const AsegMap& aseg() const { return std::get<AsegMap>(payload); }
    const BsegMap& bseg() const { return std::get<BsegMap>(payload); }
    const std::vector<SubImage>& subimages() const {
        return std::get<std::vector<SubImage>>(payload);
    }

    bool operator==(const SemanticElement&) const = default;
};

// Full transmitter-side semantics of one image.
struct SemanticBundle {
    uint32_t image_id = 0;
    IsText text;
    AsegMap aseg;
    BsegMap bseg;
    std::vector<SubImage> subimages;
    bool operator==(const SemanticBundle&) const = default;
};

// ---------------------------------------------------------------------------
// Run-length codec for label grids. Output is a sequence of
// (value: u8, run_length: u16 LE) triples; runs longer than 65535 split.
std::vector<uint8_t> rle_encode(const std::vector<uint8_t>& grid);
std::vector<uint8_t> rle_decode(const std::vector<uint8_t>& bytes);  // throws MalformedRle

// ---------------------------------------------------------------------------
// Element codecs. encode_element throws InvariantViolation on invalid input;
// decode_element throws MalformedElement on anything it cannot reconstruct
// into a valid element, and never crashes on arbitrary bytes.
std::vector<uint8_t> encode_element(const SemanticElement& e);
SemanticElement decode_element(const std::vector<uint8_t>& bytes);

// Longest prefix of `text` that fits in 200 bytes without splitting a UTF-8
// code point.
std::string truncate_istext(const std::string& text);

// Validation used by the codecs and the ingest path. Returns an explanation
// of the first violated invariant, or nullopt when the value is valid.
std::optional<std::string> invariant_failure(const IsText& t);
std::optional<std::string> invariant_failure(const AsegMap& m);
std::optional<std::string> invariant_failure(const BsegMap& m);
std::optional<std::string> invariant_failure(const SubImage& s);
std::optional<std::string> invariant_failure(const SemanticElement& e);

// ---------------------------------------------------------------------------
// Even-odd point-in-polygon test. Pixel (x, y) is treated as its center
// (x + 0.5, y + 0.5), which never coincides with integer vertex coordinates.
bool point_in_polygon(double px, double py, const std::vector<Vertex>& polygon);

// ROI-based masking: one crop per instance whose category passes the filter
// (no filter = all). The crop is the bbox region of the raster with pixels
// outside the instance polygon zeroed. An instance with no polygon region
// keeps its full bbox crop. Throws DimensionMismatch when dimensions disagree.
std::vector<SubImage> extract_subimages(
    const ImageRaster& raster, const AsegMap& aseg, const BsegMap& bseg,
    const std::optional<std::set<uint8_t>>& categories = std::nullopt);

}  // namespace semcom
