#include "semcom/semantics.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string_view>

#include "semcom/bytes.hpp"

namespace semcom {

const char* to_string(ElementKind k) {
    switch (k) {
        case ElementKind::TEXT: return "TEXT";
        case ElementKind::ASEG: return "ASEG";
        case ElementKind::BSEG: return "BSEG";
        case ElementKind::SIMG: return "SIMG";
    }
    return "UNKNOWN";
}

std::vector<uint8_t> rle_encode(const std::vector<uint8_t>& grid) {
    ByteWriter w;
    size_t i = 0;
    while (i < grid.size()) {
        uint8_t v = grid[i];
        size_t run = 1;
        while (i + run < grid.size() && grid[i + run] == v && run < 65535) ++run;
        w.u8(v);
        w.u16(static_cast<uint16_t>(run));
        i += run;
    }
    return w.out;
}

std::vector<uint8_t> rle_decode(const std::vector<uint8_t>& bytes) {
    if (bytes.size() % 3 != 0) throw MalformedRle("byte length not a multiple of 3");
    std::vector<uint8_t> out;
    ByteReader<MalformedRle> r(bytes);
    while (r.remaining() > 0) {
        uint8_t v = r.u8();
        uint16_t run = r.u16();
        if (run == 0) throw MalformedRle("zero run length");
        out.insert(out.end(), run, v);
    }
    return out;
}

namespace {

// Stricter variant used inside element decoding: requires the canonical form
// produced by rle_encode, so decode composed with encode is the identity on
// every accepted payload.
std::vector<uint8_t> rle_decode_canonical(const std::vector<uint8_t>& bytes, size_t expect) {
    if (bytes.size() % 3 != 0) throw MalformedElement("rle byte length not a multiple of 3");
    std::vector<uint8_t> out;
    out.reserve(expect);
    ByteReader<MalformedElement> r(bytes);
    bool have_prev = false;
    uint8_t prev_v = 0;
    uint16_t prev_run = 0;
    while (r.remaining() > 0) {
        uint8_t v = r.u8();
        uint16_t run = r.u16();
        if (run == 0) throw MalformedElement("zero rle run length");
        if (have_prev && v == prev_v && prev_run != 65535)
            throw MalformedElement("non-canonical rle run split");
        out.insert(out.end(), run, v);
        if (out.size() > expect) throw MalformedElement("rle output exceeds grid size");
        have_prev = true;
        prev_v = v;
        prev_run = run;
    }
    if (out.size() != expect) throw MalformedElement("rle output shorter than grid");
    return out;
}

bool utf8_valid(std::string_view s) {
    size_t i = 0;
    while (i < s.size()) {
        uint8_t c = static_cast<uint8_t>(s[i]);
        if (c < 0x80) {
            ++i;
            continue;
        }
        int len;
        uint32_t cp, min_cp;
        if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
            min_cp = 0x80;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
            min_cp = 0x800;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
            min_cp = 0x10000;
        } else {
            return false;
        }
        if (i + static_cast<size_t>(len) > s.size()) return false;
        for (int k = 1; k < len; ++k) {
            uint8_t cc = static_cast<uint8_t>(s[i + static_cast<size_t>(k)]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
        i += static_cast<size_t>(len);
    }
    return true;
}

using P = std::array<int64_t, 2>;

int64_t cross3(const P& o, const P& a, const P& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

bool in_box(const P& p, const P& a, const P& b) {
    return std::min(a[0], b[0]) <= p[0] && p[0] <= std::max(a[0], b[0]) &&
           std::min(a[1], b[1]) <= p[1] && p[1] <= std::max(a[1], b[1]);
}

// True when segments [a1,a2] and [b1,b2] share at least one point.
bool segments_touch(const P& a1, const P& a2, const P& b1, const P& b2) {
    int64_t d1 = cross3(b1, b2, a1);
    int64_t d2 = cross3(b1, b2, a2);
    int64_t d3 = cross3(a1, a2, b1);
    int64_t d4 = cross3(a1, a2, b2);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    if (d1 == 0 && in_box(a1, b1, b2)) return true;
    if (d2 == 0 && in_box(a2, b1, b2)) return true;
    if (d3 == 0 && in_box(b1, a1, a2)) return true;
    if (d4 == 0 && in_box(b2, a1, a2)) return true;
    return false;
}

P vp(const Vertex& v) { return {static_cast<int64_t>(v[0]), static_cast<int64_t>(v[1])}; }

// Simple polygon: no zero-length edges, no doubling back at a vertex, and
// non-adjacent edges never meet. Collinear straight-through vertices pass.
std::optional<std::string> polygon_failure(const std::vector<Vertex>& poly) {
    size_t n = poly.size();
    if (n < 3) return "polygon has fewer than 3 vertices";
    for (size_t i = 0; i < n; ++i) {
        const P a = vp(poly[i]);
        const P s = vp(poly[(i + 1) % n]);
        const P b = vp(poly[(i + 2) % n]);
        if (a == s) return "zero-length polygon edge";
        if (cross3(s, a, b) == 0) {
            int64_t dot = (a[0] - s[0]) * (b[0] - s[0]) + (a[1] - s[1]) * (b[1] - s[1]);
            if (dot > 0) return "polygon doubles back on itself";
        }
    }
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            if (adjacent) continue;
            if (segments_touch(vp(poly[i]), vp(poly[(i + 1) % n]), vp(poly[j]),
                               vp(poly[(j + 1) % n])))
                return "polygon self-intersects";
        }
    }
    return std::nullopt;
}

}  // namespace

std::string truncate_istext(const std::string& text) {
    if (text.size() <= kMaxIsTextBytes) return text;
    size_t cut = kMaxIsTextBytes;
    while (cut > 0 && (static_cast<uint8_t>(text[cut]) & 0xC0) == 0x80) --cut;
    return text.substr(0, cut);
}

std::optional<std::string> invariant_failure(const IsText& t) {
    if (t.text.empty()) return "text is empty";
    if (!utf8_valid(t.text)) return "text is not valid UTF-8";
    if (t.text.size() > kMaxIsTextBytes) return "text exceeds 200 bytes";
    return std::nullopt;
}

std::optional<std::string> invariant_failure(const AsegMap& m) {
    if (m.width == 0 || m.height == 0) return "aseg dimensions are zero";
    if (m.class_grid.size() != static_cast<size_t>(m.width) * m.height)
        return "class grid size does not match dimensions";
    std::set<uint16_t> ids;
    std::map<uint8_t, std::vector<const AsegInstance*>> by_cat;
    for (const auto& inst : m.instances) {
        if (inst.category_id == kBackgroundClass) return "instance labeled with background class";
        if (!ids.insert(inst.instance_id).second) return "duplicate instance id";
        auto [x, y, w, h] = inst.bbox;
        if (w == 0 || h == 0) return "empty bbox";
        if (x + w > m.width || y + h > m.height) return "bbox out of image bounds";
        by_cat[inst.category_id].push_back(&inst);
    }
    for (uint16_t y = 0; y < m.height; ++y) {
        for (uint16_t x = 0; x < m.width; ++x) {
            uint8_t c = m.class_grid[static_cast<size_t>(y) * m.width + x];
            if (c == kBackgroundClass) continue;
            auto it = by_cat.find(c);
            bool covered = false;
            if (it != by_cat.end()) {
                for (const auto* inst : it->second) {
                    auto [bx, by, bw, bh] = inst->bbox;
                    if (x >= bx && x < bx + bw && y >= by && y < by + bh) {
                        covered = true;
                        break;
                    }
                }
            }
            if (!covered) return "labeled pixel outside every bbox of its class";
        }
    }
    return std::nullopt;
}

std::optional<std::string> invariant_failure(const BsegMap& m) {
    if (m.width == 0 || m.height == 0) return "bseg dimensions are zero";
    for (const auto& region : m.regions) {
        if (region.category_id == kBackgroundClass) return "region labeled with background class";
        for (const auto& v : region.polygon) {
            if (v[0] > m.width || v[1] > m.height) return "polygon vertex out of image bounds";
        }
        if (auto why = polygon_failure(region.polygon)) return *why;
    }
    return std::nullopt;
}

std::optional<std::string> invariant_failure(const SubImage& s) {
    auto [x, y, w, h] = s.bbox;
    (void)x;
    (void)y;
    if (w == 0 || h == 0) return "empty sub-image bbox";
    if (s.pixels.size() != static_cast<size_t>(w) * h * 3)
        return "pixel buffer does not match bbox area";
    return std::nullopt;
}

std::optional<std::string> invariant_failure(const SemanticElement& e) {
    switch (e.kind()) {
        case ElementKind::TEXT: return invariant_failure(e.text());
        case ElementKind::ASEG: return invariant_failure(e.aseg());
        case ElementKind::BSEG: return invariant_failure(e.bseg());
        case ElementKind::SIMG:
            for (const auto& s : e.subimages())
                if (auto why = invariant_failure(s)) return *why;
            return std::nullopt;
    }
    return "unknown element kind";
}

std::vector<uint8_t> encode_element(const SemanticElement& e) {
    ByteWriter w;
    switch (e.kind()) {
        case ElementKind::TEXT: {
            IsText t{truncate_istext(e.text().text)};
            if (auto why = invariant_failure(t)) throw InvariantViolation(*why);
            w.u8(static_cast<uint8_t>(ElementKind::TEXT));
            w.raw(reinterpret_cast<const uint8_t*>(t.text.data()), t.text.size());
            break;
        }
        case ElementKind::ASEG: {
            const AsegMap& m = e.aseg();
            if (auto why = invariant_failure(m)) throw InvariantViolation(*why);
            w.u8(static_cast<uint8_t>(ElementKind::ASEG));
            w.u16(m.width);
            w.u16(m.height);
            w.u16(static_cast<uint16_t>(m.instances.size()));
            for (const auto& inst : m.instances) {
                w.u16(inst.instance_id);
                w.u8(inst.category_id);
                for (uint16_t f : inst.bbox) w.u16(f);
            }
            auto rle = rle_encode(m.class_grid);
            w.raw(rle.data(), rle.size());
            break;
        }
        case ElementKind::BSEG: {
            const BsegMap& m = e.bseg();
            if (auto why = invariant_failure(m)) throw InvariantViolation(*why);
            w.u8(static_cast<uint8_t>(ElementKind::BSEG));
            w.u16(m.width);
            w.u16(m.height);
            w.u16(static_cast<uint16_t>(m.regions.size()));
            for (const auto& region : m.regions) {
                w.u16(region.instance_id);
                w.u8(region.category_id);
                w.u16(static_cast<uint16_t>(region.polygon.size()));
                w.u16(region.polygon[0][0]);
                w.u16(region.polygon[0][1]);
                for (size_t i = 1; i < region.polygon.size(); ++i) {
                    int dx = region.polygon[i][0] - region.polygon[i - 1][0];
                    int dy = region.polygon[i][1] - region.polygon[i - 1][1];
                    if (dx >= -127 && dx <= 127 && dy >= -127 && dy <= 127) {
                        w.i8(static_cast<int8_t>(dx));
                        w.i8(static_cast<int8_t>(dy));
                    } else if (dx >= INT16_MIN && dx <= INT16_MAX && dy >= INT16_MIN &&
                               dy <= INT16_MAX) {
                        w.i8(-128);
                        w.i8(-128);
                        w.i16(static_cast<int16_t>(dx));
                        w.i16(static_cast<int16_t>(dy));
                    } else {
                        throw InvariantViolation("polygon step exceeds 16-bit delta range");
                    }
                }
            }
            break;
        }
        case ElementKind::SIMG: {
            const auto& crops = e.subimages();
            for (const auto& s : crops)
                if (auto why = invariant_failure(s)) throw InvariantViolation(*why);
            w.u8(static_cast<uint8_t>(ElementKind::SIMG));
            w.u16(static_cast<uint16_t>(crops.size()));
            for (const auto& s : crops) {
                w.u16(s.instance_id);
                for (uint16_t f : s.bbox) w.u16(f);
                w.raw(s.pixels.data(), s.pixels.size());
            }
            break;
        }
    }
    return w.out;
}

SemanticElement decode_element(const std::vector<uint8_t>& bytes) {
    ByteReader<MalformedElement> r(bytes);
    uint8_t kind = r.u8();
    switch (kind) {
        case static_cast<uint8_t>(ElementKind::TEXT): {
            size_t n = r.remaining();
            if (n == 0) throw MalformedElement("empty text payload");
            if (n > kMaxIsTextBytes) throw MalformedElement("text payload exceeds 200 bytes");
            auto body = r.raw(n);
            IsText t{std::string(body.begin(), body.end())};
            if (auto why = invariant_failure(t)) throw MalformedElement(*why);
            return SemanticElement{t};
        }
        case static_cast<uint8_t>(ElementKind::ASEG): {
            AsegMap m;
            m.width = r.u16();
            m.height = r.u16();
            if (m.width == 0 || m.height == 0) throw MalformedElement("aseg dimensions are zero");
            uint16_t count = r.u16();
            m.instances.resize(count);
            for (auto& inst : m.instances) {
                inst.instance_id = r.u16();
                inst.category_id = r.u8();
                for (auto& f : inst.bbox) f = r.u16();
            }
            auto rle = r.raw(r.remaining());
            m.class_grid =
                rle_decode_canonical(rle, static_cast<size_t>(m.width) * m.height);
            if (auto why = invariant_failure(m)) throw MalformedElement(*why);
            return SemanticElement{std::move(m)};
        }
        case static_cast<uint8_t>(ElementKind::BSEG): {
            BsegMap m;
            m.width = r.u16();
            m.height = r.u16();
            uint16_t count = r.u16();
            m.regions.resize(count);
            for (auto& region : m.regions) {
                region.instance_id = r.u16();
                region.category_id = r.u8();
                uint16_t nverts = r.u16();
                if (nverts < 3) throw MalformedElement("polygon has fewer than 3 vertices");
                region.polygon.resize(nverts);
                int x = r.u16();
                int y = r.u16();
                region.polygon[0] = {static_cast<uint16_t>(x), static_cast<uint16_t>(y)};
                for (uint16_t i = 1; i < nverts; ++i) {
                    int dx = r.i8();
                    int dy = r.i8();
                    if (dx == -128 || dy == -128) {
                        if (dx != -128 || dy != -128)
                            throw MalformedElement("malformed polygon delta escape");
                        dx = r.i16();
                        dy = r.i16();
                        if (dx >= -127 && dx <= 127 && dy >= -127 && dy <= 127)
                            throw MalformedElement("non-canonical wide polygon delta");
                    }
                    x += dx;
                    y += dy;
                    if (x < 0 || x > 65535 || y < 0 || y > 65535)
                        throw MalformedElement("polygon vertex out of coordinate range");
                    region.polygon[i] = {static_cast<uint16_t>(x), static_cast<uint16_t>(y)};
                }
            }
            if (r.remaining() != 0) throw MalformedElement("trailing bytes after regions");
            if (auto why = invariant_failure(m)) throw MalformedElement(*why);
            return SemanticElement{std::move(m)};
        }
        case static_cast<uint8_t>(ElementKind::SIMG): {
            uint16_t count = r.u16();
            std::vector<SubImage> crops(count);
            for (auto& s : crops) {
                s.instance_id = r.u16();
                for (auto& f : s.bbox) f = r.u16();
                if (s.bbox[2] == 0 || s.bbox[3] == 0)
                    throw MalformedElement("empty sub-image bbox");
                s.pixels = r.raw(static_cast<size_t>(s.bbox[2]) * s.bbox[3] * 3);
            }
            if (r.remaining() != 0) throw MalformedElement("trailing bytes after sub-images");
            return SemanticElement{std::move(crops)};
        }
        default: break;
    }
    throw MalformedElement("unknown element kind byte");
}

bool point_in_polygon(double px, double py, const std::vector<Vertex>& poly) {
    bool inside = false;
    size_t n = poly.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        double xi = poly[i][0], yi = poly[i][1];
        double xj = poly[j][0], yj = poly[j][1];
        if ((yi > py) != (yj > py)) {
            double t = (py - yi) / (yj - yi);
            if (px < xi + t * (xj - xi)) inside = !inside;
        }
    }
    return inside;
}

std::vector<SubImage> extract_subimages(const ImageRaster& img, const AsegMap& aseg,
                                        const BsegMap& bseg,
                                        const std::optional<std::set<uint8_t>>& categories) {
    if (img.width != aseg.width || img.height != aseg.height)
        throw DimensionMismatch("raster and aseg dimensions differ");
    if (img.width != bseg.width || img.height != bseg.height)
        throw DimensionMismatch("raster and bseg dimensions differ");
    std::vector<SubImage> out;
    for (const auto& inst : aseg.instances) {
        if (categories && !categories->count(inst.category_id)) continue;
        auto [bx, by, bw, bh] = inst.bbox;
        if (bw == 0 || bh == 0 || bx + bw > img.width || by + bh > img.height)
            throw InvariantViolation("instance bbox out of raster bounds");
        std::vector<const BsegRegion*> regions;
        for (const auto& region : bseg.regions)
            if (region.instance_id == inst.instance_id) regions.push_back(&region);
        SubImage s;
        s.instance_id = inst.instance_id;
        s.bbox = inst.bbox;
        s.pixels.assign(static_cast<size_t>(bw) * bh * 3, 0);
        for (uint16_t cy = 0; cy < bh; ++cy) {
            for (uint16_t cx = 0; cx < bw; ++cx) {
                uint16_t gx = static_cast<uint16_t>(bx + cx);
                uint16_t gy = static_cast<uint16_t>(by + cy);
                bool keep = regions.empty();
                for (const auto* region : regions) {
                    if (point_in_polygon(gx + 0.5, gy + 0.5, region->polygon)) {
                        keep = true;
                        break;
                    }
                }
                if (!keep) continue;
                const uint8_t* src = img.at(gx, gy);
                uint8_t* dst = &s.pixels[(static_cast<size_t>(cy) * bw + cx) * 3];
                dst[0] = src[0];
                dst[1] = src[1];
                dst[2] = src[2];
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace semcom
