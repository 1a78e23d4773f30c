#pragma once

// Receiver-side image reconstruction: a deterministic reference renderer that
// refines its output as more semantic elements arrive, and a file-exchange
// bridge that delegates rendering to an external process.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semcom/errors.hpp"
#include "semcom/raster.hpp"
#include "semcom/semantics.hpp"

namespace semcom {

constexpr std::array<uint8_t, 3> kBackgroundColor{128, 128, 128};
// Chosen so every default corpus category color sits far from the background.
constexpr uint64_t kPaletteSeed = 184;

// Stable category colors: the low 24 bits of a seeded hash of each category
// name. Category 255 is always the background gray.
struct Palette {
    std::vector<std::array<uint8_t, 3>> colors;

    static Palette from_names(const std::vector<std::string>& names,
                              uint64_t seed = kPaletteSeed);
    std::array<uint8_t, 3> color(uint8_t category_id) const;
};

// Whatever subset of a bundle was actually delivered.
struct ReceivedSemantics {
    std::optional<IsText> text;
    std::optional<AsegMap> aseg;
    std::optional<BsegMap> bseg;
    std::optional<std::vector<SubImage>> crops;
};

ReceivedSemantics received_from_bundle(const SemanticBundle& bundle);

// Stage rules: the canvas starts as background; instance bboxes fill with
// their category color when only the coarse map arrived; polygon fills
// replace the bbox fills entirely once contours arrive; sub-image crops then
// paste their pixels inside the matching polygon mask (whole bbox when no
// polygon matches the instance). Zero width/height fall back to the
// dimensions carried by a segmentation element; disagreement between the two
// throws DimensionMismatch, and no dimensions at all throws DimensionUnknown.
ImageRaster render_reference(const ReceivedSemantics& received, uint16_t width, uint16_t height,
                             const Palette& palette);

// External reconstructor bridge. Writes workdir/request/ with the encoded
// elements and a manifest.json {image_id, width, height, elements:
// [{kind, file}]}, runs `sh -c "<command> <workdir>"`, then reads and
// validates workdir/response/image.ppm. Nonzero exit throws
// ExternalToolFailure, exceeding the wall-clock budget throws Timeout, and a
// missing, unparsable, or wrong-size response throws BadResponse.
struct BridgeConfig {
    std::string command;
    double timeout_seconds = 10.0;
    uint32_t image_id = 0;
};

ImageRaster reconstruct_external(const ReceivedSemantics& received, uint16_t width,
                                 uint16_t height, const std::string& workdir,
                                 const BridgeConfig& config);

}  // namespace semcom
