#pragma once

// Conventional-scheme baselines: the configured size model that reproduces
// published per-task byte averages in accounting mode, and a minimal lossy
// block-DCT image codec that supplies honest measured sizes.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "semcom/errors.hpp"
#include "semcom/raster.hpp"
#include "semcom/semantics.hpp"
#include "semcom/task.hpp"

namespace semcom {

enum class Scheme { DIGITAL, DIGITAL_KNOWLEDGE, ISC_KNOWLEDGE, MULTIRATE };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& name);  // throws UnknownScheme

// Average bytes per artifact in accounting mode.
struct SizeModel {
    double jpeg_q1 = 2094.93;
    double jpeg_q25 = 4684.57;
    double jpeg_q30 = 5761.12;
    double istext = 200.0;
    double aseg = 1952.09;
    double bseg = 2650.29;
};

// Configured size of one semantic element. Sub-image crops have no configured
// average and keep their measured encoded size.
double element_configured_size(ElementKind kind, size_t encoded_bytes, const SizeModel& model);

// Accounting hook for session configs, closing over a size model.
std::function<double(ElementKind, size_t)> configured_size_hook(SizeModel model);

// Fixed per-task cost of a scheme under the size model. The adaptive
// multi-rate scheme reports its relevant-image cost: the opening text plus
// every escalation step of its ladder.
double scheme_task_size(Scheme scheme, TaskKind task, const SizeModel& model);

// Lossy image codec: 8x8 block DCT on full-range YCbCr with 2x2 chroma
// subsampling, uniform AC quantization with step 101 - q (DC keeps step 1),
// zigzag scan, zero-run coding, and fixed-parameter Rice codes. Quality q is
// an integer in [1, 100]; dimensions pad to block multiples by edge
// replication and the decode crops back. Bitstream: "DCT1", width u16 LE,
// height u16 LE, q u8, then the MSB-first bit stream for the Y, Cb, Cr
// planes. decode throws MalformedBitstream and never crashes on junk.
std::vector<uint8_t> dct_codec_encode(const ImageRaster& raster, int q);
ImageRaster dct_codec_decode(const std::vector<uint8_t>& bytes);

}  // namespace semcom
