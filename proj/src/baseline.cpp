#include "semcom/baseline.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "semcom/bytes.hpp"
#include "semcom/policy.hpp"

namespace semcom {

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::DIGITAL: return "digital";
        case Scheme::DIGITAL_KNOWLEDGE: return "digital_knowledge";
        case Scheme::ISC_KNOWLEDGE: return "isc_knowledge";
        case Scheme::MULTIRATE: return "multirate";
    }
    return "unknown";
}

Scheme parse_scheme(const std::string& name) {
    if (name == "digital") return Scheme::DIGITAL;
    if (name == "digital_knowledge") return Scheme::DIGITAL_KNOWLEDGE;
    if (name == "isc_knowledge") return Scheme::ISC_KNOWLEDGE;
    if (name == "multirate") return Scheme::MULTIRATE;
    throw UnknownScheme("unknown scheme " + name);
}

double element_configured_size(ElementKind kind, size_t encoded_bytes, const SizeModel& model) {
    switch (kind) {
        case ElementKind::TEXT: return model.istext;
        case ElementKind::ASEG: return model.aseg;
        case ElementKind::BSEG: return model.bseg;
        case ElementKind::SIMG: return double(encoded_bytes);
    }
    throw InvariantViolation("unhandled element kind");
}

std::function<double(ElementKind, size_t)> configured_size_hook(SizeModel model) {
    return [model](ElementKind kind, size_t encoded_bytes) {
        return element_configured_size(kind, encoded_bytes, model);
    };
}

double scheme_task_size(Scheme scheme, TaskKind task, const SizeModel& model) {
    auto ladder_total = [&](const std::vector<ElementKind>& kinds) {
        double total = 0.0;
        for (ElementKind kind : kinds) {
            if (kind == ElementKind::SIMG)
                throw InvariantViolation("sub-image crops have no configured size");
            total += element_configured_size(kind, 0, model);
        }
        return total;
    };
    switch (scheme) {
        case Scheme::DIGITAL: return model.jpeg_q30;
        case Scheme::DIGITAL_KNOWLEDGE:
            return task == TaskKind::CAPTION ? model.jpeg_q25 : model.jpeg_q30;
        case Scheme::ISC_KNOWLEDGE: return ladder_total(knowledge_policy(task));
        case Scheme::MULTIRATE: return ladder_total(escalation_ladder(LadderPreset::TABLE2, task));
    }
    throw UnknownScheme("unhandled scheme");
}

// ---------------------------------------------------------------------------
// Block-DCT codec.

namespace {

constexpr int kBlock = 8;
constexpr size_t kMaxPlanePixels = size_t(1) << 24;  // refuses absurd headers

struct DctTables {
    std::array<std::array<double, kBlock>, kBlock> c{};  // c[u][x] = a(u) cos((2x+1)u pi/16)
    std::array<int, 64> zigzag{};
};

const DctTables& tables() {
    static const DctTables t = [] {
        DctTables out;
        for (int u = 0; u < kBlock; ++u) {
            const double a = u == 0 ? std::sqrt(1.0 / kBlock) : std::sqrt(2.0 / kBlock);
            for (int x = 0; x < kBlock; ++x)
                out.c[size_t(u)][size_t(x)] = a * std::cos((2 * x + 1) * u * M_PI / 16.0);
        }
        int idx = 0;
        for (int s = 0; s <= 14; ++s) {
            if (s % 2 == 1) {
                for (int r = std::max(0, s - 7); r <= std::min(7, s); ++r)
                    out.zigzag[size_t(idx++)] = r * kBlock + (s - r);
            } else {
                for (int r = std::min(7, s); r >= std::max(0, s - 7); --r)
                    out.zigzag[size_t(idx++)] = r * kBlock + (s - r);
            }
        }
        return out;
    }();
    return t;
}

class BitWriter {
  public:
    void put(uint32_t value, int nbits) {
        for (int i = nbits - 1; i >= 0; --i) put_bit((value >> i) & 1);
    }
    void put_bit(uint32_t bit) {
        acc_ = uint8_t(acc_ << 1 | (bit & 1));
        if (++fill_ == 8) {
            bytes_.push_back(acc_);
            acc_ = 0;
            fill_ = 0;
        }
    }
    void rice(uint32_t value, int k) {
        uint32_t quotient = value >> k;
        while (quotient--) put_bit(1);
        put_bit(0);
        put(value & ((1u << k) - 1), k);
    }
    std::vector<uint8_t> finish() {
        while (fill_ != 0) put_bit(0);
        return std::move(bytes_);
    }

  private:
    std::vector<uint8_t> bytes_;
    uint8_t acc_ = 0;
    int fill_ = 0;
};

class BitReader {
  public:
    BitReader(const uint8_t* data, size_t size) : data_(data), bits_(size * 8) {}

    uint32_t bit() {
        if (pos_ >= bits_) throw MalformedBitstream("bit stream ends mid-value");
        uint32_t b = (data_[pos_ / 8] >> (7 - pos_ % 8)) & 1;
        ++pos_;
        return b;
    }
    uint32_t rice(int k) {
        uint32_t quotient = 0;
        while (bit() == 1)
            if (++quotient > (1u << 20)) throw MalformedBitstream("runaway unary prefix");
        uint32_t rem = 0;
        for (int i = 0; i < k; ++i) rem = rem << 1 | bit();
        return (quotient << k) | rem;
    }
    // Only zero padding shorter than a byte may remain.
    void expect_clean_tail() {
        if (bits_ - pos_ >= 8) throw MalformedBitstream("trailing data after last block");
        while (pos_ < bits_)
            if (bit() != 0) throw MalformedBitstream("nonzero padding bits");
    }

  private:
    const uint8_t* data_;
    size_t bits_;
    size_t pos_ = 0;
};

// Nonzero signed value <-> even/odd index, zero excluded.
uint32_t pack_nonzero(long v) { return v > 0 ? uint32_t(2 * (v - 1)) : uint32_t(-2 * v - 1); }
long unpack_nonzero(uint32_t u) { return u % 2 == 0 ? long(u / 2) + 1 : -long((u + 1) / 2); }
uint32_t pack_signed(long v) { return v >= 0 ? uint32_t(2 * v) : uint32_t(-2 * v - 1); }
long unpack_signed(uint32_t u) { return u % 2 == 0 ? long(u / 2) : -long((u + 1) / 2); }

struct Plane {
    int w = 0;
    int h = 0;
    std::vector<int> v;

    int at(int x, int y) const { return v[size_t(y) * size_t(w) + size_t(x)]; }
    int clamped(int x, int y) const {
        return at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
    }
};

Plane pad_to_blocks(const Plane& p) {
    Plane out;
    out.w = (p.w + kBlock - 1) / kBlock * kBlock;
    out.h = (p.h + kBlock - 1) / kBlock * kBlock;
    out.v.resize(size_t(out.w) * size_t(out.h));
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) out.v[size_t(y) * size_t(out.w) + size_t(x)] = p.clamped(x, y);
    return out;
}

void encode_plane(const Plane& padded, int step, BitWriter& bw) {
    const auto& t = tables();
    for (int by = 0; by < padded.h; by += kBlock)
        for (int bx = 0; bx < padded.w; bx += kBlock) {
            double f[kBlock][kBlock], tmp[kBlock][kBlock], coef[kBlock][kBlock];
            for (int r = 0; r < kBlock; ++r)
                for (int c = 0; c < kBlock; ++c) f[r][c] = padded.at(bx + c, by + r);
            for (int u = 0; u < kBlock; ++u)
                for (int c = 0; c < kBlock; ++c) {
                    double acc = 0.0;
                    for (int r = 0; r < kBlock; ++r) acc += t.c[size_t(u)][size_t(r)] * f[r][c];
                    tmp[u][c] = acc;
                }
            for (int u = 0; u < kBlock; ++u)
                for (int v = 0; v < kBlock; ++v) {
                    double acc = 0.0;
                    for (int c = 0; c < kBlock; ++c) acc += tmp[u][c] * t.c[size_t(v)][size_t(c)];
                    coef[u][v] = acc;
                }

            long quant[64];
            for (int i = 0; i < 64; ++i) {
                const double value = coef[t.zigzag[size_t(i)] / kBlock][t.zigzag[size_t(i)] % kBlock];
                quant[i] = std::lround(value / (i == 0 ? 1 : step));
            }
            bw.rice(pack_signed(quant[0]), 4);
            int pos = 1;
            for (int i = 1; i < 64; ++i) {
                if (quant[i] == 0) continue;
                bw.rice(uint32_t(i - pos), 2);
                bw.rice(pack_nonzero(quant[i]), 3);
                pos = i + 1;
            }
            if (pos <= 63) bw.rice(63, 2);  // end of block
        }
}

Plane decode_plane(int w, int h, int step, BitReader& br) {
    const auto& t = tables();
    Plane padded;
    padded.w = (w + kBlock - 1) / kBlock * kBlock;
    padded.h = (h + kBlock - 1) / kBlock * kBlock;
    padded.v.resize(size_t(padded.w) * size_t(padded.h));
    for (int by = 0; by < padded.h; by += kBlock)
        for (int bx = 0; bx < padded.w; bx += kBlock) {
            long quant[64] = {0};
            quant[0] = unpack_signed(br.rice(4));
            int pos = 1;
            while (pos <= 63) {
                const uint32_t run = br.rice(2);
                if (run == 63) break;
                const int at = pos + int(run);
                if (at > 63) throw MalformedBitstream("zero run overflows the block");
                quant[at] = unpack_nonzero(br.rice(3));
                pos = at + 1;
            }

            double coef[kBlock][kBlock] = {{0}}, tmp[kBlock][kBlock], f[kBlock][kBlock];
            for (int i = 0; i < 64; ++i)
                coef[t.zigzag[size_t(i)] / kBlock][t.zigzag[size_t(i)] % kBlock] =
                    double(quant[i]) * (i == 0 ? 1 : step);
            for (int r = 0; r < kBlock; ++r)
                for (int v = 0; v < kBlock; ++v) {
                    double acc = 0.0;
                    for (int u = 0; u < kBlock; ++u) acc += t.c[size_t(u)][size_t(r)] * coef[u][v];
                    tmp[r][v] = acc;
                }
            for (int r = 0; r < kBlock; ++r)
                for (int c = 0; c < kBlock; ++c) {
                    double acc = 0.0;
                    for (int v = 0; v < kBlock; ++v) acc += tmp[r][v] * t.c[size_t(v)][size_t(c)];
                    f[r][c] = acc;
                }
            for (int r = 0; r < kBlock; ++r)
                for (int c = 0; c < kBlock; ++c)
                    padded.v[size_t(by + r) * size_t(padded.w) + size_t(bx + c)] =
                        int(std::clamp(std::lround(f[r][c]), 0l, 255l));
        }
    return padded;
}

int clamp_byte(long v) { return int(std::clamp(v, 0l, 255l)); }

}  // namespace

std::vector<uint8_t> dct_codec_encode(const ImageRaster& raster, int q) {
    if (!raster.valid()) throw InvariantViolation("raster is not a valid image");
    if (q < 1 || q > 100) throw InvariantViolation("quality outside [1, 100]");
    const int w = raster.width, h = raster.height;
    const int step = 101 - q;

    Plane y{w, h, {}}, cb_full{w, h, {}}, cr_full{w, h, {}};
    y.v.resize(size_t(w) * size_t(h));
    cb_full.v.resize(size_t(w) * size_t(h));
    cr_full.v.resize(size_t(w) * size_t(h));
    for (int py = 0; py < h; ++py)
        for (int px = 0; px < w; ++px) {
            const uint8_t* rgb = raster.at(unsigned(px), unsigned(py));
            const long r = rgb[0], g = rgb[1], b = rgb[2];
            const size_t i = size_t(py) * size_t(w) + size_t(px);
            y.v[i] = clamp_byte((77 * r + 150 * g + 29 * b + 128) >> 8);
            cb_full.v[i] = clamp_byte(((-43 * r - 85 * g + 128 * b + 128) >> 8) + 128);
            cr_full.v[i] = clamp_byte(((128 * r - 107 * g - 21 * b + 128) >> 8) + 128);
        }

    auto subsample = [&](const Plane& full) {
        Plane half{(full.w + 1) / 2, (full.h + 1) / 2, {}};
        half.v.resize(size_t(half.w) * size_t(half.h));
        for (int cy = 0; cy < half.h; ++cy)
            for (int cx = 0; cx < half.w; ++cx)
                half.v[size_t(cy) * size_t(half.w) + size_t(cx)] =
                    (full.clamped(2 * cx, 2 * cy) + full.clamped(2 * cx + 1, 2 * cy) +
                     full.clamped(2 * cx, 2 * cy + 1) + full.clamped(2 * cx + 1, 2 * cy + 1) + 2) >>
                    2;
        return half;
    };
    const Plane cb = subsample(cb_full);
    const Plane cr = subsample(cr_full);

    ByteWriter header;
    const uint8_t magic[4] = {'D', 'C', 'T', '1'};
    header.raw(magic, 4);
    header.u16(uint16_t(w));
    header.u16(uint16_t(h));
    header.u8(uint8_t(q));
    BitWriter bw;
    encode_plane(pad_to_blocks(y), step, bw);
    encode_plane(pad_to_blocks(cb), step, bw);
    encode_plane(pad_to_blocks(cr), step, bw);
    auto out = std::move(header.out);
    auto bits = bw.finish();
    out.insert(out.end(), bits.begin(), bits.end());
    return out;
}

ImageRaster dct_codec_decode(const std::vector<uint8_t>& bytes) {
    ByteReader<MalformedBitstream> header(bytes);
    const auto magic = header.raw(4);
    if (!(magic[0] == 'D' && magic[1] == 'C' && magic[2] == 'T' && magic[3] == '1'))
        throw MalformedBitstream("bad magic");
    const int w = header.u16();
    const int h = header.u16();
    const int q = header.u8();
    if (w < 1 || h < 1) throw MalformedBitstream("empty dimensions");
    if (size_t(w) * size_t(h) > kMaxPlanePixels) throw MalformedBitstream("dimensions too large");
    if (q < 1 || q > 100) throw MalformedBitstream("quality outside [1, 100]");
    const int step = 101 - q;
    const int cw = (w + 1) / 2, ch = (h + 1) / 2;

    BitReader br(bytes.data() + 9, bytes.size() - 9);
    const Plane y = decode_plane(w, h, step, br);
    const Plane cb = decode_plane(cw, ch, step, br);
    const Plane cr = decode_plane(cw, ch, step, br);
    br.expect_clean_tail();

    ImageRaster img;
    img.width = uint16_t(w);
    img.height = uint16_t(h);
    img.pixels.resize(size_t(w) * size_t(h) * 3);
    for (int py = 0; py < h; ++py)
        for (int px = 0; px < w; ++px) {
            const long yy = y.at(px, py);
            const long pb = cb.at(px / 2, py / 2) - 128;
            const long pr = cr.at(px / 2, py / 2) - 128;
            uint8_t* rgb = img.at(unsigned(px), unsigned(py));
            rgb[0] = uint8_t(clamp_byte(yy + ((359 * pr + 128) >> 8)));
            rgb[1] = uint8_t(clamp_byte(yy - ((88 * pb + 183 * pr + 128) >> 8)));
            rgb[2] = uint8_t(clamp_byte(yy + ((454 * pb + 128) >> 8)));
        }
    return img;
}

}  // namespace semcom
