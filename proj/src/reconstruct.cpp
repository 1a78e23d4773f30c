#include "semcom/reconstruct.hpp"

#include <algorithm>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <thread>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "semcom/rng.hpp"

namespace semcom {

namespace {

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 14695981039346656037ULL;
    for (char c : s) {
        h ^= uint8_t(c);
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

Palette Palette::from_names(const std::vector<std::string>& names, uint64_t seed) {
    Palette p;
    p.colors.reserve(names.size());
    for (const auto& name : names) {
        const uint64_t h = splitmix64(seed ^ fnv1a64(name));
        p.colors.push_back({uint8_t(h & 0xFF), uint8_t((h >> 8) & 0xFF), uint8_t((h >> 16) & 0xFF)});
    }
    return p;
}

std::array<uint8_t, 3> Palette::color(uint8_t category_id) const {
    if (category_id == kBackgroundClass) return kBackgroundColor;
    if (category_id >= colors.size())
        throw InvariantViolation("category id has no palette entry");
    return colors[category_id];
}

ReceivedSemantics received_from_bundle(const SemanticBundle& bundle) {
    ReceivedSemantics r;
    r.text = bundle.text;
    r.aseg = bundle.aseg;
    r.bseg = bundle.bseg;
    r.crops = bundle.subimages;
    return r;
}

namespace {

void put_pixel(ImageRaster& img, int x, int y, const std::array<uint8_t, 3>& c) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    uint8_t* px = img.at(unsigned(x), unsigned(y));
    px[0] = c[0];
    px[1] = c[1];
    px[2] = c[2];
}

void fill_rect(ImageRaster& img, const std::array<uint16_t, 4>& bbox,
               const std::array<uint8_t, 3>& c) {
    for (int y = bbox[1]; y < bbox[1] + bbox[3]; ++y)
        for (int x = bbox[0]; x < bbox[0] + bbox[2]; ++x) put_pixel(img, x, y, c);
}

void fill_polygon(ImageRaster& img, const std::vector<Vertex>& polygon,
                  const std::array<uint8_t, 3>& c) {
    uint16_t x0 = polygon[0][0], x1 = polygon[0][0];
    uint16_t y0 = polygon[0][1], y1 = polygon[0][1];
    for (const auto& v : polygon) {
        x0 = std::min(x0, v[0]);
        x1 = std::max(x1, v[0]);
        y0 = std::min(y0, v[1]);
        y1 = std::max(y1, v[1]);
    }
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
            if (point_in_polygon(x + 0.5, y + 0.5, polygon)) put_pixel(img, x, y, c);
}

}  // namespace

ImageRaster render_reference(const ReceivedSemantics& received, uint16_t width, uint16_t height,
                             const Palette& palette) {
    uint16_t ew = 0, eh = 0;
    if (received.aseg) {
        ew = received.aseg->width;
        eh = received.aseg->height;
    } else if (received.bseg) {
        ew = received.bseg->width;
        eh = received.bseg->height;
    }
    if (width == 0 || height == 0) {
        width = ew;
        height = eh;
    } else if (ew != 0 && (ew != width || eh != height)) {
        throw DimensionMismatch("requested canvas disagrees with element dimensions");
    }
    if (received.aseg && received.bseg &&
        (received.aseg->width != received.bseg->width ||
         received.aseg->height != received.bseg->height))
        throw DimensionMismatch("segmentation elements disagree on dimensions");
    if (width == 0 || height == 0)
        throw DimensionUnknown("no dimensions given and none carried by the elements");

    ImageRaster img = ImageRaster::filled(width, height, kBackgroundColor[0], kBackgroundColor[1],
                                          kBackgroundColor[2]);
    if (received.aseg && !received.bseg)
        for (const auto& inst : received.aseg->instances)
            fill_rect(img, inst.bbox, palette.color(inst.category_id));
    if (received.bseg)
        for (const auto& region : received.bseg->regions)
            fill_polygon(img, region.polygon, palette.color(region.category_id));
    if (received.crops)
        for (const auto& crop : *received.crops) {
            const BsegRegion* region = nullptr;
            if (received.bseg)
                for (const auto& r : received.bseg->regions)
                    if (r.instance_id == crop.instance_id) {
                        region = &r;
                        break;
                    }
            for (int dy = 0; dy < crop.bbox[3]; ++dy)
                for (int dx = 0; dx < crop.bbox[2]; ++dx) {
                    const int x = crop.bbox[0] + dx, y = crop.bbox[1] + dy;
                    if (region && !point_in_polygon(x + 0.5, y + 0.5, region->polygon)) continue;
                    const uint8_t* src = &crop.pixels[(size_t(dy) * crop.bbox[2] + size_t(dx)) * 3];
                    put_pixel(img, x, y, {src[0], src[1], src[2]});
                }
        }
    return img;
}

ImageRaster reconstruct_external(const ReceivedSemantics& received, uint16_t width,
                                 uint16_t height, const std::string& workdir,
                                 const BridgeConfig& config) {
    namespace fs = std::filesystem;
    const fs::path root(workdir);
    fs::create_directories(root / "request");
    fs::create_directories(root / "response");

    nlohmann::json manifest;
    manifest["image_id"] = config.image_id;
    manifest["width"] = width;
    manifest["height"] = height;
    manifest["elements"] = nlohmann::json::array();
    auto emit = [&](ElementKind kind, const SemanticElement& element) {
        std::string file;
        switch (kind) {
            case ElementKind::TEXT: file = "text.bin"; break;
            case ElementKind::ASEG: file = "aseg.bin"; break;
            case ElementKind::BSEG: file = "bseg.bin"; break;
            case ElementKind::SIMG: file = "simg.bin"; break;
        }
        const auto bytes = encode_element(element);
        std::ofstream out(root / "request" / file, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
        manifest["elements"].push_back({{"kind", to_string(kind)}, {"file", file}});
    };
    if (received.text) emit(ElementKind::TEXT, SemanticElement{*received.text});
    if (received.aseg) emit(ElementKind::ASEG, SemanticElement{*received.aseg});
    if (received.bseg) emit(ElementKind::BSEG, SemanticElement{*received.bseg});
    if (received.crops) emit(ElementKind::SIMG, SemanticElement{*received.crops});
    {
        std::ofstream out(root / "request" / "manifest.json");
        out << manifest.dump(2) << "\n";
    }

    const pid_t pid = fork();
    if (pid < 0) throw ExternalToolFailure("fork failed");
    if (pid == 0) {
        const std::string cmdline = config.command + " " + workdir;
        execl("/bin/sh", "sh", "-c", cmdline.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(config.timeout_seconds));
    int status = 0;
    for (;;) {
        const pid_t done = waitpid(pid, &status, WNOHANG);
        if (done == pid) break;
        if (done < 0) throw ExternalToolFailure("waitpid failed");
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            throw Timeout("external reconstructor exceeded its time budget");
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
        throw ExternalToolFailure("external reconstructor exited with status " +
                                  std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));

    ImageRaster img;
    try {
        img = read_ppm((root / "response" / "image.ppm").string());
    } catch (const Error& e) {
        throw BadResponse(std::string("unreadable response image: ") + e.what());
    }
    if (img.width != width || img.height != height)
        throw BadResponse("response image has the wrong dimensions");
    return img;
}

}  // namespace semcom
