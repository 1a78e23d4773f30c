#include "semcom/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "semcom/rng.hpp"

namespace semcom {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Shared helpers.

template <typename T>
void seeded_shuffle(std::vector<T>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[rng.uniform_int(0, i - 1)]);
}

std::string image_stem(uint32_t image_id) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "img%05u", image_id);
    return buf;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path.string());
    out.write(content.data(), std::streamsize(content.size()));
}

void write_file(const fs::path& path, const std::vector<uint8_t>& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(content.data()), std::streamsize(content.size()));
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

double raster_mse(const ImageRaster& a, const ImageRaster& b) {
    if (a.width != b.width || a.height != b.height)
        throw DimensionMismatch("mse needs equal dimensions");
    double sum = 0.0;
    for (size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = double(a.pixels[i]) - double(b.pixels[i]);
        sum += d * d;
    }
    return sum / double(a.pixels.size());
}

// ---------------------------------------------------------------------------
// Corpus generation.

void validate_corpus_config(const CorpusConfig& c) {
    if (c.n_images == 0) throw ConfigInvalid("corpus needs at least one image");
    if (c.n_categories == 0 || c.n_categories > 255)
        throw ConfigInvalid("category count must be in [1, 255]");
    if (!(c.presence > 0.0) || c.presence > 1.0)
        throw ConfigInvalid("presence fraction must be in (0, 1]");
    if (c.width < 64 || c.height < 64 || c.width > 4096 || c.height > 4096)
        throw ConfigInvalid("image dimensions must be in [64, 4096]");
    if (c.max_instances == 0) throw ConfigInvalid("per-image instance cap must be positive");
}

std::string category_name(uint16_t id) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "cat%02u", id);
    return buf;
}

// Each category lands in exactly round(presence * n_images) images: least
// loaded images first, seeded shuffle breaking ties.
std::vector<std::vector<uint8_t>> assign_presence(const CorpusConfig& c) {
    const uint32_t per_cat = uint32_t(std::llround(c.presence * double(c.n_images)));
    if (uint64_t(per_cat) * c.n_categories > uint64_t(c.n_images) * c.max_instances)
        throw ConfigInvalid("instance cap too small for the presence fraction");
    std::vector<std::vector<uint8_t>> present(c.n_images);
    std::vector<uint32_t> load(c.n_images, 0);
    for (uint16_t cat = 0; cat < c.n_categories; ++cat) {
        std::vector<uint32_t> order(c.n_images);
        std::iota(order.begin(), order.end(), 0u);
        Rng rng(c.seed, 1 + cat);
        seeded_shuffle(order, rng);
        std::stable_sort(order.begin(), order.end(),
                         [&](uint32_t a, uint32_t b) { return load[a] < load[b]; });
        for (uint32_t slot = 0; slot < per_cat; ++slot) {
            const uint32_t img = order[slot];
            if (load[img] >= c.max_instances)
                throw ConfigInvalid("instance cap too small for the presence fraction");
            present[img].push_back(uint8_t(cat));
            ++load[img];
        }
    }
    for (auto& cats : present) std::sort(cats.begin(), cats.end());
    return present;
}

bool bboxes_clash(const std::array<uint16_t, 4>& a, const std::array<uint16_t, 4>& b) {
    // A one pixel gap is required between boxes.
    return a[0] < uint32_t(b[0]) + b[2] + 1 && b[0] < uint32_t(a[0]) + a[2] + 1 &&
           a[1] < uint32_t(b[1]) + b[3] + 1 && b[1] < uint32_t(a[1]) + a[3] + 1;
}

struct PlacedInstance {
    std::array<uint16_t, 4> bbox{};
    std::vector<Vertex> polygon;
};

// Star polygon with 8..12 vertices at radii in [0.85, 1.0] of the base
// radius, placed so instance bboxes never touch. Radii shrink when the
// canvas gets crowded.
PlacedInstance place_instance(const CorpusConfig& c, Rng& rng,
                              const std::vector<PlacedInstance>& existing) {
    const double scale = double(std::min(c.width, c.height)) / 128.0;
    for (int shrink = 0; shrink < 4; ++shrink) {
        const uint64_t lo = uint64_t(std::max(4, 8 - 2 * shrink));
        const uint64_t hi = uint64_t(std::max(5, 13 - 3 * shrink));
        for (int attempt = 0; attempt < 200; ++attempt) {
            const double r = double(rng.uniform_int(lo, hi)) * scale;
            const uint32_t margin = uint32_t(std::ceil(r)) + 1;
            if (2 * margin + 2 >= c.width || 2 * margin + 2 >= c.height) continue;
            const double cx = double(rng.uniform_int(margin, c.width - 1 - margin));
            const double cy = double(rng.uniform_int(margin, c.height - 1 - margin));
            const uint64_t nv = rng.uniform_int(8, 12);
            const double phase = rng.uniform() * 2.0 * M_PI / double(nv);

            PlacedInstance inst;
            uint16_t minx = 0xFFFF, miny = 0xFFFF, maxx = 0, maxy = 0;
            for (uint64_t i = 0; i < nv; ++i) {
                const double angle = phase + 2.0 * M_PI * double(i) / double(nv);
                const double u = 0.85 + 0.15 * rng.uniform();
                const long px = std::lround(cx + r * u * std::cos(angle));
                const long py = std::lround(cy + r * u * std::sin(angle));
                const uint16_t x = uint16_t(std::clamp<long>(px, 0, c.width - 1));
                const uint16_t y = uint16_t(std::clamp<long>(py, 0, c.height - 1));
                inst.polygon.push_back({x, y});
                minx = std::min(minx, x);
                miny = std::min(miny, y);
                maxx = std::max(maxx, x);
                maxy = std::max(maxy, y);
            }
            if (maxx <= minx || maxy <= miny) continue;
            inst.bbox = {minx, miny, uint16_t(maxx - minx + 1), uint16_t(maxy - miny + 1)};

            bool clash = false;
            for (const auto& other : existing)
                if (bboxes_clash(inst.bbox, other.bbox)) {
                    clash = true;
                    break;
                }
            if (clash) continue;

            bool has_interior = false;
            for (uint32_t y = miny; y <= maxy && !has_interior; ++y)
                for (uint32_t x = minx; x <= maxx && !has_interior; ++x)
                    if (point_in_polygon(x + 0.5, y + 0.5, inst.polygon)) has_interior = true;
            if (!has_interior) continue;
            return inst;
        }
    }
    throw ConfigInvalid("cannot place an instance without bbox overlap; canvas too crowded");
}

// Deterministic per-pixel texture deltas in [-6, 6] per channel.
int texture_delta(uint64_t seed, uint32_t image_id, uint16_t x, uint16_t y, int channel) {
    const uint64_t mixed =
        splitmix64(seed ^ splitmix64((uint64_t(image_id) << 40) | (uint64_t(y) << 20) | x));
    return int((mixed >> (8 * channel)) % 13) - 6;
}

struct BuiltImage {
    CorpusImage image;
    std::vector<uint8_t> present_categories;
};

BuiltImage build_image(const CorpusConfig& c, uint32_t image_id,
                       const std::vector<uint8_t>& categories, const Palette& palette,
                       const std::vector<std::string>& names) {
    Rng rng(c.seed, (1ull << 20) + image_id);
    std::vector<PlacedInstance> placed;
    for (size_t i = 0; i < categories.size(); ++i)
        placed.push_back(place_instance(c, rng, placed));

    AsegMap aseg;
    aseg.width = c.width;
    aseg.height = c.height;
    aseg.class_grid.assign(size_t(c.width) * c.height, kBackgroundClass);
    BsegMap bseg;
    bseg.width = c.width;
    bseg.height = c.height;
    for (size_t i = 0; i < categories.size(); ++i) {
        const uint16_t instance_id = uint16_t(i + 1);
        aseg.instances.push_back({instance_id, categories[i], placed[i].bbox});
        bseg.regions.push_back({instance_id, categories[i], placed[i].polygon});
        const auto& bb = placed[i].bbox;
        for (uint32_t y = bb[1]; y < uint32_t(bb[1]) + bb[3]; ++y)
            for (uint32_t x = bb[0]; x < uint32_t(bb[0]) + bb[2]; ++x)
                if (point_in_polygon(x + 0.5, y + 0.5, placed[i].polygon))
                    aseg.class_grid[y * c.width + x] = categories[i];
    }

    std::string caption = "a scene";
    if (!categories.empty()) {
        caption += " with";
        for (uint8_t cat : categories) caption += " " + names[cat];
    }
    if (caption.size() > kMaxIsTextBytes)
        throw ConfigInvalid("caption exceeds the text element limit");

    ReceivedSemantics upto_contours;
    upto_contours.text = IsText{caption};
    upto_contours.aseg = aseg;
    upto_contours.bseg = bseg;
    ImageRaster gt = render_reference(upto_contours, c.width, c.height, palette);
    for (uint16_t y = 0; y < c.height; ++y)
        for (uint16_t x = 0; x < c.width; ++x) {
            if (aseg.class_grid[size_t(y) * c.width + x] == kBackgroundClass) continue;
            uint8_t* px = gt.at(x, y);
            for (int ch = 0; ch < 3; ++ch)
                px[ch] = uint8_t(std::clamp(int(px[ch]) + texture_delta(c.seed, image_id, x, y, ch),
                                            0, 255));
        }

    BuiltImage built;
    built.present_categories = categories;
    built.image.image_id = image_id;
    built.image.caption = caption;
    built.image.present.insert(categories.begin(), categories.end());
    built.image.gt = gt;
    built.image.bundle.image_id = image_id;
    built.image.bundle.text = IsText{caption};
    built.image.bundle.aseg = std::move(aseg);
    built.image.bundle.bseg = std::move(bseg);
    built.image.bundle.subimages =
        extract_subimages(gt, built.image.bundle.aseg, built.image.bundle.bseg);
    built.image.gt = std::move(gt);
    return built;
}

std::string onehot_embeddings_text(const std::vector<std::string>& names) {
    std::string out = std::to_string(names.size()) + " " + std::to_string(names.size()) + "\n";
    for (size_t i = 0; i < names.size(); ++i) {
        out += names[i];
        for (size_t j = 0; j < names.size(); ++j) out += (j == i) ? " 1" : " 0";
        out += "\n";
    }
    return out;
}

}  // namespace

void generate_corpus(const CorpusConfig& config, const std::string& out_dir) {
    validate_corpus_config(config);
    std::vector<std::string> names;
    for (uint16_t c = 0; c < config.n_categories; ++c) names.push_back(category_name(c));
    const auto present = assign_presence(config);
    const Palette palette = Palette::from_names(names);

    const fs::path root(out_dir);
    fs::create_directories(root / "images");
    fs::create_directories(root / "semantics");

    std::string categories_txt;
    for (const auto& name : names) categories_txt += name + "\n";
    write_file(root / "categories.txt", categories_txt);
    write_file(root / "embeddings.txt", onehot_embeddings_text(names));

    nlohmann::json annotations;
    annotations["categories"] = names;
    annotations["images"] = nlohmann::json::array();

    for (uint32_t id = 0; id < config.n_images; ++id) {
        BuiltImage built = build_image(config, id, present[id], palette, names);
        const auto& bundle = built.image.bundle;

        nlohmann::json instances = nlohmann::json::array();
        for (size_t i = 0; i < bundle.aseg.instances.size(); ++i) {
            const auto& inst = bundle.aseg.instances[i];
            const auto& region = bundle.bseg.regions[i];
            std::vector<uint32_t> flat;
            for (const auto& v : region.polygon) {
                flat.push_back(v[0]);
                flat.push_back(v[1]);
            }
            instances.push_back({{"instance_id", inst.instance_id},
                                 {"category_id", inst.category_id},
                                 {"bbox", inst.bbox},
                                 {"polygon", flat}});
        }
        annotations["images"].push_back({{"id", id},
                                         {"width", config.width},
                                         {"height", config.height},
                                         {"caption", built.image.caption},
                                         {"instances", std::move(instances)}});

        const std::string stem = image_stem(id);
        write_ppm(built.image.gt, (root / "images" / (stem + ".ppm")).string());
        write_file(root / "semantics" / (stem + ".text.bin"),
                   encode_element(SemanticElement{bundle.text}));
        write_file(root / "semantics" / (stem + ".aseg.bin"),
                   encode_element(SemanticElement{bundle.aseg}));
        write_file(root / "semantics" / (stem + ".bseg.bin"),
                   encode_element(SemanticElement{bundle.bseg}));
        write_file(root / "semantics" / (stem + ".simg.bin"),
                   encode_element(SemanticElement{bundle.subimages}));
    }
    write_file(root / "annotations.json", annotations.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Annotation ingestion.

namespace {

const nlohmann::json& need_field(const nlohmann::json& obj, const char* key,
                                 const std::string& ptr) {
    if (!obj.is_object()) throw SchemaError(ptr + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(ptr + "/" + key + ": missing field");
    return *it;
}

uint64_t as_uint(const nlohmann::json& v, const std::string& ptr, uint64_t max) {
    if (!v.is_number_unsigned()) throw SchemaError(ptr + ": expected an unsigned integer");
    const uint64_t u = v.get<uint64_t>();
    if (u > max) throw SchemaError(ptr + ": value " + std::to_string(u) + " out of range");
    return u;
}

}  // namespace

AnnotationSet ingest_annotations(const std::string& annotations_path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(annotations_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("/: not valid json: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaError("/: expected an object");

    AnnotationSet set;
    const auto& categories = need_field(doc, "categories", "");
    if (!categories.is_array() || categories.empty() || categories.size() > 255)
        throw SchemaError("/categories: expected an array of 1 to 255 names");
    for (size_t i = 0; i < categories.size(); ++i) {
        const std::string ptr = "/categories/" + std::to_string(i);
        if (!categories[i].is_string() || categories[i].get<std::string>().empty())
            throw SchemaError(ptr + ": expected a non-empty string");
        set.categories.push_back(categories[i].get<std::string>());
    }

    const auto& images = need_field(doc, "images", "");
    if (!images.is_array()) throw SchemaError("/images: expected an array");
    std::set<uint64_t> seen_ids;
    for (size_t i = 0; i < images.size(); ++i) {
        const std::string iptr = "/images/" + std::to_string(i);
        const auto& jimg = images[i];
        AnnotatedImage img;
        img.image_id = uint32_t(as_uint(need_field(jimg, "id", iptr), iptr + "/id", 0xFFFFFFFFull));
        if (!seen_ids.insert(img.image_id).second)
            throw SchemaError(iptr + "/id: duplicate image id");
        img.width = uint16_t(as_uint(need_field(jimg, "width", iptr), iptr + "/width", 65535));
        img.height = uint16_t(as_uint(need_field(jimg, "height", iptr), iptr + "/height", 65535));
        if (img.width == 0 || img.height == 0)
            throw SchemaError(iptr + "/width: dimensions must be positive");
        const auto& caption = need_field(jimg, "caption", iptr);
        if (!caption.is_string()) throw SchemaError(iptr + "/caption: expected a string");
        img.caption = caption.get<std::string>();
        if (img.caption.size() > kMaxIsTextBytes)
            throw SchemaError(iptr + "/caption: longer than 200 bytes");

        img.aseg.width = img.width;
        img.aseg.height = img.height;
        img.aseg.class_grid.assign(size_t(img.width) * img.height, kBackgroundClass);
        img.bseg.width = img.width;
        img.bseg.height = img.height;

        const auto& instances = need_field(jimg, "instances", iptr);
        if (!instances.is_array()) throw SchemaError(iptr + "/instances: expected an array");
        std::set<uint64_t> seen_instances;
        for (size_t j = 0; j < instances.size(); ++j) {
            const std::string ptr = iptr + "/instances/" + std::to_string(j);
            const auto& jinst = instances[j];
            AsegInstance inst;
            inst.instance_id = uint16_t(
                as_uint(need_field(jinst, "instance_id", ptr), ptr + "/instance_id", 65535));
            if (!seen_instances.insert(inst.instance_id).second)
                throw SchemaError(ptr + "/instance_id: duplicate instance id");
            inst.category_id = uint8_t(as_uint(need_field(jinst, "category_id", ptr),
                                               ptr + "/category_id", set.categories.size() - 1));

            const auto& jbbox = need_field(jinst, "bbox", ptr);
            if (!jbbox.is_array() || jbbox.size() != 4)
                throw SchemaError(ptr + "/bbox: expected [x, y, w, h]");
            for (int k = 0; k < 4; ++k)
                inst.bbox[size_t(k)] =
                    uint16_t(as_uint(jbbox[size_t(k)], ptr + "/bbox/" + std::to_string(k), 65535));
            if (inst.bbox[2] == 0 || inst.bbox[3] == 0 ||
                uint32_t(inst.bbox[0]) + inst.bbox[2] > img.width ||
                uint32_t(inst.bbox[1]) + inst.bbox[3] > img.height)
                throw SchemaError(ptr + "/bbox: box leaves the image");

            const auto& jpoly = need_field(jinst, "polygon", ptr);
            if (!jpoly.is_array() || jpoly.size() < 6 || jpoly.size() % 2 != 0)
                throw SchemaError(ptr + "/polygon: expected a flat list of 3 or more points");
            BsegRegion region;
            region.instance_id = inst.instance_id;
            region.category_id = inst.category_id;
            for (size_t k = 0; k < jpoly.size(); k += 2) {
                const uint16_t x = uint16_t(as_uint(
                    jpoly[k], ptr + "/polygon/" + std::to_string(k), uint64_t(img.width) - 1));
                const uint16_t y =
                    uint16_t(as_uint(jpoly[k + 1], ptr + "/polygon/" + std::to_string(k + 1),
                                     uint64_t(img.height) - 1));
                region.polygon.push_back({x, y});
            }

            // Later instances overwrite earlier ones where hand-made
            // polygons overlap.
            uint16_t minx = 0xFFFF, miny = 0xFFFF, maxx = 0, maxy = 0;
            for (const auto& v : region.polygon) {
                minx = std::min(minx, v[0]);
                miny = std::min(miny, v[1]);
                maxx = std::max(maxx, v[0]);
                maxy = std::max(maxy, v[1]);
            }
            for (uint32_t y = miny; y <= maxy; ++y)
                for (uint32_t x = minx; x <= maxx; ++x)
                    if (point_in_polygon(x + 0.5, y + 0.5, region.polygon))
                        img.aseg.class_grid[y * img.width + x] = inst.category_id;

            img.aseg.instances.push_back(inst);
            img.bseg.regions.push_back(std::move(region));
        }
        set.images.push_back(std::move(img));
    }
    return set;
}

Corpus load_corpus(const std::string& dir) {
    const fs::path root(dir);
    Corpus corpus;

    std::istringstream cats(read_file(root / "categories.txt"));
    std::string line;
    while (std::getline(cats, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) corpus.categories.push_back(line);
    }
    if (corpus.categories.empty()) throw ParseError("categories.txt lists no categories");

    auto set = ingest_annotations((root / "annotations.json").string());
    if (set.categories != corpus.categories)
        throw ParseError("categories.txt disagrees with annotations.json");

    corpus.embeddings = load_embeddings((root / "embeddings.txt").string());
    corpus.vocab = ClassVocabulary{corpus.categories};
    corpus.gazetteer.insert(corpus.categories.begin(), corpus.categories.end());

    for (auto& ann : set.images) {
        CorpusImage img;
        img.image_id = ann.image_id;
        img.caption = ann.caption;
        img.gt = read_ppm((root / "images" / (image_stem(ann.image_id) + ".ppm")).string());
        if (img.gt.width != ann.width || img.gt.height != ann.height)
            throw DimensionMismatch("image file dimensions disagree with annotations");
        for (const auto& inst : ann.aseg.instances) img.present.insert(inst.category_id);
        img.bundle.image_id = ann.image_id;
        img.bundle.text = IsText{ann.caption};
        img.bundle.aseg = std::move(ann.aseg);
        img.bundle.bseg = std::move(ann.bseg);
        img.bundle.subimages = extract_subimages(img.gt, img.bundle.aseg, img.bundle.bseg);
        corpus.images.push_back(std::move(img));
    }
    return corpus;
}

// ---------------------------------------------------------------------------
// Scenario configuration and planning.

ScenarioConfig scenario_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigInvalid(std::string("scenario config is not valid json: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigInvalid("scenario config must be a json object");

    ScenarioConfig cfg;
    for (const auto& [key, value] : doc.items()) {
        try {
            if (key == "schemes") {
                cfg.schemes.clear();
                for (const auto& s : value) cfg.schemes.push_back(parse_scheme(s.get<std::string>()));
            } else if (key == "tasks_per_kind") {
                cfg.tasks_per_kind = value.get<uint32_t>();
            } else if (key == "relevant_fraction") {
                cfg.relevant_fraction = value.get<double>();
            } else if (key == "ladder") {
                const auto name = value.get<std::string>();
                if (name == "table2") cfg.ladder = LadderPreset::TABLE2;
                else if (name == "progressive") cfg.ladder = LadderPreset::PROGRESSIVE;
                else throw ConfigInvalid("unknown ladder '" + name + "'");
            } else if (key == "threshold") {
                cfg.threshold = value.get<double>();
            } else if (key == "measured") {
                cfg.measured = value.get<bool>();
            } else if (key == "channel") {
                if (value.contains("mode"))
                    cfg.channel.mode = parse_channel_mode(value.at("mode").get<std::string>());
                if (value.contains("ebn0_db")) cfg.channel.ebn0_db = value.at("ebn0_db").get<double>();
                if (value.contains("seed")) cfg.channel.seed = value.at("seed").get<uint64_t>();
            } else if (key == "seed") {
                cfg.seed = value.get<uint64_t>();
            } else if (key == "max_retries") {
                cfg.max_retries = value.get<int>();
            } else if (key == "feedback_over_channel") {
                cfg.feedback_over_channel = value.get<bool>();
            } else if (key == "size_model") {
                if (value.contains("jpeg_q1")) cfg.size_model.jpeg_q1 = value.at("jpeg_q1").get<double>();
                if (value.contains("jpeg_q25"))
                    cfg.size_model.jpeg_q25 = value.at("jpeg_q25").get<double>();
                if (value.contains("jpeg_q30"))
                    cfg.size_model.jpeg_q30 = value.at("jpeg_q30").get<double>();
                if (value.contains("istext")) cfg.size_model.istext = value.at("istext").get<double>();
                if (value.contains("aseg")) cfg.size_model.aseg = value.at("aseg").get<double>();
                if (value.contains("bseg")) cfg.size_model.bseg = value.at("bseg").get<double>();
            } else {
                throw ConfigInvalid("unknown scenario config key '" + key + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigInvalid("scenario config key '" + key + "': " + e.what());
        } catch (const ParseError& e) {
            throw ConfigInvalid("scenario config key '" + key + "': " + e.what());
        } catch (const UnknownScheme& e) {
            throw ConfigInvalid("scenario config key '" + key + "': " + e.what());
        }
    }
    if (cfg.relevant_fraction < 0.0 || cfg.relevant_fraction > 1.0)
        throw ConfigInvalid("relevant_fraction must be in [0, 1]");
    if (cfg.max_retries < 0) throw ConfigInvalid("max_retries must be non-negative");
    return cfg;
}

std::vector<ScenarioTask> plan_tasks(const Corpus& corpus, const ScenarioConfig& config) {
    if (corpus.categories.empty()) throw ConfigInvalid("corpus has no categories");
    const uint32_t per_kind = config.tasks_per_kind;
    if (uint64_t(per_kind) * 3 > 4096)
        throw ConfigInvalid("tasks_per_kind exceeds the per-scheme session id space");
    const uint32_t relevant_count =
        uint32_t(std::llround(config.relevant_fraction * double(per_kind)));

    std::vector<ScenarioTask> tasks;
    for (int k = 0; k < 3; ++k) {
        std::vector<uint32_t> order(per_kind);
        std::iota(order.begin(), order.end(), 0u);
        Rng shuffle_rng(config.seed, 50 + uint64_t(k));
        seeded_shuffle(order, shuffle_rng);
        Rng pick_rng(config.seed, 60 + uint64_t(k));
        for (uint32_t rank = 0; rank < per_kind; ++rank) {
            const uint32_t t = order[rank];
            ScenarioTask task;
            task.kind = TaskKind(k);
            task.category = uint8_t(t % corpus.categories.size());
            task.relevant = rank < relevant_count;
            task.task_index = uint16_t(uint32_t(k) * per_kind + t);

            std::vector<uint32_t> candidates;
            for (uint32_t i = 0; i < corpus.images.size(); ++i)
                if ((corpus.images[i].present.count(task.category) != 0) == task.relevant)
                    candidates.push_back(i);
            if (candidates.empty())
                throw ConfigInvalid("no image " + std::string(task.relevant ? "with" : "without") +
                                    " category " + corpus.categories[task.category]);
            task.image_index = candidates[pick_rng.uniform_int(0, candidates.size() - 1)];
            tasks.push_back(task);
        }
    }
    Rng order_rng(config.seed, 77);
    seeded_shuffle(tasks, order_rng);
    return tasks;
}

// ---------------------------------------------------------------------------
// Scenario execution.

namespace {

using DctCache = std::map<std::pair<uint32_t, int>, std::vector<uint8_t>>;

struct TaskOutcome {
    TaskRecord configured;
    TaskRecord measured;
    SessionLog log;
};

TaskOutcome run_task(const Corpus& corpus, const ScenarioConfig& config, const ScenarioTask& task,
                     Scheme scheme, DctCache* cache) {
    const CorpusImage& image = corpus.images.at(task.image_index);
    const TaskDescriptor descriptor{task.kind, corpus.categories.at(task.category)};
    const uint16_t session_id = uint16_t(int(scheme) * 4096 + task.task_index);

    ChannelConfig channel_cfg = config.channel;
    channel_cfg.stream = session_id;
    auto channel = make_byte_channel(channel_cfg);

    SessionConfig scfg;
    scfg.session_id = session_id;
    scfg.max_retries = config.max_retries;
    scfg.feedback_over_channel = config.feedback_over_channel;
    scfg.threshold = config.threshold;
    scfg.accounted_size = configured_size_hook(config.size_model);

    TaskOutcome outcome;
    double measured_semantic = 0.0;
    try {
        if (scheme == Scheme::DIGITAL || scheme == Scheme::DIGITAL_KNOWLEDGE) {
            const int q =
                (scheme == Scheme::DIGITAL_KNOWLEDGE && task.kind == TaskKind::CAPTION) ? 25 : 30;
            const std::pair<uint32_t, int> key{task.image_index, q};
            if (cache && !cache->count(key)) (*cache)[key] = dct_codec_encode(image.gt, q);
            const std::vector<uint8_t> payload =
                cache ? cache->at(key) : dct_codec_encode(image.gt, q);
            const double accounted =
                q == 25 ? config.size_model.jpeg_q25 : config.size_model.jpeg_q30;
            auto result = run_transfer({{payload, accounted}}, channel, scfg);
            if (result.delivered.at(0) != payload)
                throw InvariantViolation("transfer corrupted a payload");
            measured_semantic = double(payload.size());
            outcome.log = std::move(result.log);
        } else if (scheme == Scheme::ISC_KNOWLEDGE) {
            std::vector<TransferItem> items;
            for (ElementKind kind : knowledge_policy(task.kind)) {
                SemanticElement element{IsText{""}};
                switch (kind) {
                    case ElementKind::TEXT: element = SemanticElement{image.bundle.text}; break;
                    case ElementKind::ASEG: element = SemanticElement{image.bundle.aseg}; break;
                    case ElementKind::BSEG: element = SemanticElement{image.bundle.bseg}; break;
                    case ElementKind::SIMG:
                        element = SemanticElement{image.bundle.subimages};
                        break;
                }
                auto encoded = encode_element(element);
                const double accounted =
                    element_configured_size(kind, encoded.size(), config.size_model);
                measured_semantic += double(encoded.size());
                items.push_back({std::move(encoded), accounted});
            }
            auto result = run_transfer(items, channel, scfg);
            for (size_t i = 0; i < items.size(); ++i)
                if (result.delivered.at(i) != items[i].payload)
                    throw InvariantViolation("transfer corrupted a payload");
            outcome.log = std::move(result.log);
        } else {
            auto ladder = escalation_ladder(config.ladder, task.kind);
            TransmitterSession tx(image.bundle, ladder);
            ReceiverContext rx{descriptor, &corpus.embeddings, &corpus.vocab, &corpus.gazetteer,
                               ladder};
            outcome.log = run_session(tx, rx, channel, scfg);
            for (const auto& delivered : outcome.log.delivered)
                measured_semantic += double(delivered.encoded_bytes);
        }
    } catch (const SessionAbort& e) {
        throw SessionAbort("session " + std::to_string(session_id) + " (" + to_string(scheme) +
                           ", " + to_string(task.kind) + "): " + e.what());
    }

    TaskRecord base;
    base.scheme = scheme;
    base.kind = task.kind;
    base.session_id = session_id;
    base.wire_bytes = outcome.log.wire_bytes;
    base.ticks = outcome.log.ticks;
    base.completed = outcome.log.completed;
    outcome.configured = base;
    outcome.configured.semantic_bytes = outcome.log.semantic_bytes;
    outcome.measured = base;
    outcome.measured.semantic_bytes = measured_semantic;
    return outcome;
}

}  // namespace

ScenarioResult run_scenario(const Corpus& corpus, const ScenarioConfig& config) {
    std::set<Scheme> unique(config.schemes.begin(), config.schemes.end());
    if (unique.size() != config.schemes.size())
        throw ConfigInvalid("duplicate scheme in scenario config");

    ScenarioResult result;
    result.tasks = plan_tasks(corpus, config);
    DctCache cache;
    for (Scheme scheme : config.schemes)
        for (const ScenarioTask& task : result.tasks) {
            auto outcome = run_task(corpus, config, task, scheme, &cache);
            result.configured.push_back(outcome.configured);
            result.measured.push_back(outcome.measured);
            result.logs.push_back(std::move(outcome.log));
        }
    result.configured_report = build_report(result.configured);
    result.measured_report = build_report(result.measured);
    return result;
}

void write_scenario_outputs(const ScenarioResult& result, const ScenarioConfig& config,
                            const std::string& out_dir) {
    const fs::path root(out_dir);
    fs::create_directories(root);
    const ByteReport& primary =
        config.measured ? result.measured_report : result.configured_report;
    write_file(root / "report.csv", report_csv(primary));
    write_file(root / "report.json", report_json(primary));
    write_file(root / "report_configured.json", report_json(result.configured_report));
    write_file(root / "report_measured.json", report_json(result.measured_report));

    std::string lines;
    for (const auto& log : result.logs) {
        nlohmann::json j;
        j["session_id"] = log.session_id;
        j["completed"] = log.completed;
        j["ticks"] = log.ticks;
        j["semantic_bytes"] = log.semantic_bytes;
        j["wire_bytes"] = log.wire_bytes;
        j["retransmissions"] = log.retransmissions;
        auto kinds = nlohmann::json::array();
        for (const auto& d : log.delivered) kinds.push_back(to_string(d.kind));
        j["delivered"] = std::move(kinds);
        lines += j.dump() + "\n";
    }
    write_file(root / "sessions.jsonl", lines);
}

std::vector<double> stage_mse(const CorpusImage& image, const Palette& palette) {
    std::vector<double> errors;
    ReceivedSemantics acc;
    acc.text = image.bundle.text;
    errors.push_back(raster_mse(
        image.gt, render_reference(acc, image.gt.width, image.gt.height, palette)));
    acc.aseg = image.bundle.aseg;
    errors.push_back(raster_mse(
        image.gt, render_reference(acc, image.gt.width, image.gt.height, palette)));
    acc.bseg = image.bundle.bseg;
    errors.push_back(raster_mse(
        image.gt, render_reference(acc, image.gt.width, image.gt.height, palette)));
    acc.crops = image.bundle.subimages;
    errors.push_back(raster_mse(
        image.gt, render_reference(acc, image.gt.width, image.gt.height, palette)));
    return errors;
}

ProgressiveResult run_progressive(const Corpus& corpus, uint32_t image_index,
                                  const TaskDescriptor& task, const ScenarioConfig& config) {
    const CorpusImage& image = corpus.images.at(image_index);
    const uint16_t session_id = uint16_t(0xE000u | (image_index & 0x1FFFu));

    ChannelConfig channel_cfg = config.channel;
    channel_cfg.stream = session_id;
    SessionConfig scfg;
    scfg.session_id = session_id;
    scfg.max_retries = config.max_retries;
    scfg.feedback_over_channel = config.feedback_over_channel;
    scfg.threshold = config.threshold;
    scfg.accounted_size = configured_size_hook(config.size_model);

    auto ladder = escalation_ladder(LadderPreset::PROGRESSIVE, task.kind);
    TransmitterSession tx(image.bundle, ladder);
    ReceiverContext rx{task, &corpus.embeddings, &corpus.vocab, &corpus.gazetteer, ladder};

    ProgressiveResult result;
    result.log = run_session(tx, rx, make_byte_channel(channel_cfg), scfg);

    const Palette palette = Palette::from_names(corpus.categories);
    ReceivedSemantics acc;
    for (const auto& delivered : result.log.delivered) {
        switch (delivered.kind) {
            case ElementKind::TEXT: acc.text = delivered.element.text(); break;
            case ElementKind::ASEG: acc.aseg = delivered.element.aseg(); break;
            case ElementKind::BSEG: acc.bseg = delivered.element.bseg(); break;
            case ElementKind::SIMG: acc.crops = delivered.element.subimages(); break;
        }
        result.stages.push_back(
            render_reference(acc, image.gt.width, image.gt.height, palette));
        result.stage_psnr.push_back(psnr(image.gt, result.stages.back()));
    }
    return result;
}

}  // namespace semcom
