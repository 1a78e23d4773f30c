#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "semcom/harness.hpp"

using namespace semcom;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

CorpusConfig small_config() {
    CorpusConfig c;
    c.n_images = 6;
    c.n_categories = 4;
    c.presence = 0.5;
    c.width = 64;
    c.height = 64;
    c.seed = 7;
    c.max_instances = 3;
    return c;
}

struct ScratchDir {
    fs::path path;
    explicit ScratchDir(const char* name) : path(name) { fs::remove_all(path); }
    ~ScratchDir() { fs::remove_all(path); }
};

ScenarioConfig perfect_scenario(uint32_t per_kind, double relevant_fraction) {
    ScenarioConfig cfg;
    cfg.tasks_per_kind = per_kind;
    cfg.relevant_fraction = relevant_fraction;
    cfg.seed = 11;
    return cfg;
}

}  // namespace

TEST_CASE("corpus generation is reproducible bit for bit") {
    ScratchDir a("harness_corpus_a"), b("harness_corpus_b");
    const CorpusConfig cfg = small_config();
    generate_corpus(cfg, a.path.string());
    generate_corpus(cfg, b.path.string());

    size_t files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(a.path)) {
        if (!entry.is_regular_file()) continue;
        ++files;
        const fs::path rel = fs::relative(entry.path(), a.path);
        CAPTURE(rel.string());
        REQUIRE(fs::exists(b.path / rel));
        CHECK(slurp(entry.path()) == slurp(b.path / rel));
    }
    // categories, embeddings, annotations, and five files per image.
    CHECK(files == 3 + 5 * cfg.n_images);
}

TEST_CASE("category presence is stratified exactly") {
    ScratchDir dir("harness_corpus_presence");
    const CorpusConfig cfg = small_config();
    generate_corpus(cfg, dir.path.string());
    const Corpus corpus = load_corpus(dir.path.string());

    REQUIRE(corpus.images.size() == cfg.n_images);
    std::map<uint8_t, int> hits;
    for (const auto& img : corpus.images) {
        CHECK(img.present.size() <= cfg.max_instances);
        for (uint8_t cat : img.present) ++hits[cat];
    }
    for (uint16_t cat = 0; cat < cfg.n_categories; ++cat) CHECK(hits[uint8_t(cat)] == 3);
}

TEST_CASE("every image holds each category at presence one") {
    ScratchDir dir("harness_corpus_full");
    CorpusConfig cfg;
    cfg.n_images = 4;
    cfg.n_categories = 2;
    cfg.presence = 1.0;
    cfg.width = 64;
    cfg.height = 64;
    cfg.max_instances = 2;
    generate_corpus(cfg, dir.path.string());
    const Corpus corpus = load_corpus(dir.path.string());
    for (const auto& img : corpus.images) CHECK(img.present.size() == 2);
}

TEST_CASE("corpus config validation") {
    ScratchDir dir("harness_corpus_invalid");
    CorpusConfig cfg = small_config();

    cfg.n_images = 0;
    CHECK_THROWS_AS(generate_corpus(cfg, dir.path.string()), ConfigInvalid);
    cfg = small_config();
    cfg.presence = 0.0;
    CHECK_THROWS_AS(generate_corpus(cfg, dir.path.string()), ConfigInvalid);
    cfg = small_config();
    cfg.presence = 1.5;
    CHECK_THROWS_AS(generate_corpus(cfg, dir.path.string()), ConfigInvalid);
    cfg = small_config();
    cfg.width = 32;
    CHECK_THROWS_AS(generate_corpus(cfg, dir.path.string()), ConfigInvalid);
    cfg = small_config();
    cfg.n_categories = 0;
    CHECK_THROWS_AS(generate_corpus(cfg, dir.path.string()), ConfigInvalid);
    // Four categories in every image cannot fit under a cap of three.
    cfg = small_config();
    cfg.presence = 1.0;
    CHECK_THROWS_AS(generate_corpus(cfg, dir.path.string()), ConfigInvalid);
}

TEST_CASE("annotations round trip through ingestion") {
    ScratchDir dir("harness_corpus_ingest");
    const CorpusConfig cfg = small_config();
    generate_corpus(cfg, dir.path.string());
    const Corpus corpus = load_corpus(dir.path.string());
    const AnnotationSet set = ingest_annotations((dir.path / "annotations.json").string());

    REQUIRE(set.categories == corpus.categories);
    REQUIRE(set.images.size() == corpus.images.size());
    for (size_t i = 0; i < set.images.size(); ++i) {
        const auto& ann = set.images[i];
        const auto& img = corpus.images[i];
        CHECK(ann.image_id == img.image_id);
        CHECK(ann.caption == img.caption);
        CHECK(ann.aseg.instances == img.bundle.aseg.instances);
        CHECK(ann.aseg.class_grid == img.bundle.aseg.class_grid);
        CHECK(ann.bseg.regions == img.bundle.bseg.regions);
    }
}

TEST_CASE("loaded bundles match the encoded element files") {
    ScratchDir dir("harness_corpus_elements");
    CorpusConfig cfg = small_config();
    cfg.n_images = 2;
    generate_corpus(cfg, dir.path.string());
    const Corpus corpus = load_corpus(dir.path.string());

    for (const auto& img : corpus.images) {
        char stem[16];
        std::snprintf(stem, sizeof stem, "img%05u", img.image_id);
        const auto check_element = [&](const char* ext, const SemanticElement& expected) {
            const std::string raw = slurp(dir.path / "semantics" / (std::string(stem) + ext));
            const std::vector<uint8_t> bytes(raw.begin(), raw.end());
            CHECK(bytes == encode_element(expected));
        };
        check_element(".text.bin", SemanticElement{img.bundle.text});
        check_element(".aseg.bin", SemanticElement{img.bundle.aseg});
        check_element(".bseg.bin", SemanticElement{img.bundle.bseg});
        check_element(".simg.bin", SemanticElement{img.bundle.subimages});
    }
}

TEST_CASE("schema violations name the offending field") {
    ScratchDir dir("harness_schema");
    fs::create_directories(dir.path);
    const auto write_and_ingest = [&](const std::string& text) {
        const fs::path file = dir.path / "annotations.json";
        std::ofstream(file) << text;
        return ingest_annotations(file.string());
    };
    const auto pointer_of = [&](const std::string& text) {
        try {
            write_and_ingest(text);
        } catch (const SchemaError& e) {
            const std::string what = e.what();
            return what.substr(0, what.find(':'));
        }
        return std::string("no error");
    };

    CHECK(pointer_of("not json") == "/");
    CHECK(pointer_of("[]") == "/");
    CHECK(pointer_of(R"({"images": []})") == "/categories");
    CHECK(pointer_of(R"({"categories": [], "images": []})") == "/categories");
    CHECK(pointer_of(R"({"categories": ["a", 3], "images": []})") == "/categories/1");
    CHECK(pointer_of(R"({"categories": ["a"]})") == "/images");
    CHECK(pointer_of(R"({"categories": ["a"], "images": [{}]})") == "/images/0/id");
    CHECK(pointer_of(R"({"categories": ["a"], "images": [
        {"id": 0, "width": 8, "height": 8, "caption": "x", "instances": [{}]}]})") ==
          "/images/0/instances/0/instance_id");
    CHECK(pointer_of(R"({"categories": ["a"], "images": [
        {"id": 0, "width": 8, "height": 8, "caption": "x",
         "instances": [{"instance_id": 1, "category_id": 0}]}]})") ==
          "/images/0/instances/0/bbox");
    CHECK(pointer_of(R"({"categories": ["a"], "images": [
        {"id": 0, "width": 8, "height": 8, "caption": "x",
         "instances": [{"instance_id": 1, "category_id": 2,
                        "bbox": [0, 0, 2, 2], "polygon": [0, 0, 2, 0, 2, 2]}]}]})") ==
          "/images/0/instances/0/category_id");
    CHECK(pointer_of(R"({"categories": ["a"], "images": [
        {"id": 0, "width": 8, "height": 8, "caption": "x",
         "instances": [{"instance_id": 1, "category_id": 0,
                        "bbox": [6, 0, 4, 2], "polygon": [0, 0, 2, 0, 2, 2]}]}]})") ==
          "/images/0/instances/0/bbox");
    CHECK(pointer_of(R"({"categories": ["a"], "images": [
        {"id": 0, "width": 8, "height": 8, "caption": "x",
         "instances": [{"instance_id": 1, "category_id": 0,
                        "bbox": [0, 0, 2, 2], "polygon": [0, 0, 2, 0]}]}]})") ==
          "/images/0/instances/0/polygon");
    CHECK(pointer_of(R"({"categories": ["a"], "images": [
        {"id": 0, "width": 8, "height": 8, "caption": "x", "instances": []},
        {"id": 0, "width": 8, "height": 8, "caption": "y", "instances": []}]})") ==
          "/images/1/id");
}

TEST_CASE("hand written annotations build usable semantics") {
    ScratchDir dir("harness_schema_hand");
    fs::create_directories(dir.path);
    const std::string text = R"({
      "categories": ["tree", "rock", "pond"],
      "images": [
        {"id": 10, "width": 16, "height": 12, "caption": "a tree by a pond",
         "instances": [
           {"instance_id": 1, "category_id": 0, "bbox": [1, 1, 5, 5],
            "polygon": [1, 1, 5, 1, 5, 5, 1, 5]},
           {"instance_id": 2, "category_id": 2, "bbox": [8, 4, 6, 6],
            "polygon": [8, 4, 13, 4, 13, 9, 8, 9]}]},
        {"id": 11, "width": 16, "height": 12, "caption": "bare rock",
         "instances": [
           {"instance_id": 1, "category_id": 1, "bbox": [2, 2, 4, 4],
            "polygon": [2, 2, 5, 2, 5, 5, 2, 5]}]},
        {"id": 12, "width": 16, "height": 12, "caption": "an empty scene",
         "instances": []}
      ]})";
    const fs::path file = dir.path / "annotations.json";
    std::ofstream(file) << text;

    const AnnotationSet set = ingest_annotations(file.string());
    REQUIRE(set.images.size() == 3);
    CHECK(set.categories == std::vector<std::string>{"tree", "rock", "pond"});
    const auto& first = set.images[0];
    CHECK(first.aseg.instances.size() == 2);
    CHECK(first.bseg.regions[1].polygon.size() == 4);
    // Pixel centers inside the square polygon take its category.
    CHECK(first.aseg.class_grid[2 * 16 + 2] == 0);
    CHECK(first.aseg.class_grid[5 * 16 + 9] == 2);
    CHECK(first.aseg.class_grid[0] == kBackgroundClass);
    CHECK(set.images[2].aseg.instances.empty());
}

TEST_CASE("scenario config parses and rejects unknown keys") {
    const ScenarioConfig defaults = scenario_from_json("{}");
    CHECK(defaults.tasks_per_kind == 160);
    CHECK(defaults.schemes.size() == 4);
    CHECK(defaults.measured == false);

    const ScenarioConfig cfg = scenario_from_json(R"({
      "schemes": ["multirate", "digital"],
      "tasks_per_kind": 12,
      "relevant_fraction": 0.25,
      "ladder": "progressive",
      "measured": true,
      "channel": {"mode": "awgn_ldpc", "ebn0_db": 3.5, "seed": 9},
      "seed": 4,
      "max_retries": 16,
      "size_model": {"istext": 150.0}
    })");
    CHECK(cfg.schemes == std::vector<Scheme>{Scheme::MULTIRATE, Scheme::DIGITAL});
    CHECK(cfg.tasks_per_kind == 12);
    CHECK(cfg.relevant_fraction == 0.25);
    CHECK(cfg.ladder == LadderPreset::PROGRESSIVE);
    CHECK(cfg.measured);
    CHECK(cfg.channel.mode == ChannelMode::AWGN_LDPC);
    CHECK(cfg.channel.ebn0_db == 3.5);
    CHECK(cfg.channel.seed == 9);
    CHECK(cfg.seed == 4);
    CHECK(cfg.max_retries == 16);
    CHECK(cfg.size_model.istext == 150.0);
    CHECK(cfg.size_model.aseg == SizeModel{}.aseg);

    CHECK_THROWS_AS(scenario_from_json("not json"), ConfigInvalid);
    CHECK_THROWS_AS(scenario_from_json("[]"), ConfigInvalid);
    CHECK_THROWS_AS(scenario_from_json(R"({"bogus": 1})"), ConfigInvalid);
    CHECK_THROWS_AS(scenario_from_json(R"({"schemes": ["warp"]})"), ConfigInvalid);
    CHECK_THROWS_AS(scenario_from_json(R"({"ladder": "spiral"})"), ConfigInvalid);
    CHECK_THROWS_AS(scenario_from_json(R"({"tasks_per_kind": "many"})"), ConfigInvalid);
    CHECK_THROWS_AS(scenario_from_json(R"({"relevant_fraction": 1.5})"), ConfigInvalid);
    CHECK_THROWS_AS(scenario_from_json(R"({"channel": {"mode": "smoke"}})"), ConfigInvalid);
}

TEST_CASE("task planning is balanced and exact") {
    ScratchDir dir("harness_plan");
    const CorpusConfig ccfg = small_config();
    generate_corpus(ccfg, dir.path.string());
    const Corpus corpus = load_corpus(dir.path.string());

    const ScenarioConfig cfg = perfect_scenario(8, 0.5);
    const auto tasks = plan_tasks(corpus, cfg);
    REQUIRE(tasks.size() == 24);

    std::map<TaskKind, int> relevant, per_kind;
    std::map<std::pair<TaskKind, uint8_t>, int> per_category;
    std::set<uint16_t> indices;
    for (const auto& t : tasks) {
        ++per_kind[t.kind];
        if (t.relevant) ++relevant[t.kind];
        ++per_category[{t.kind, t.category}];
        CHECK(indices.insert(t.task_index).second);
        const bool has = corpus.images[t.image_index].present.count(t.category) != 0;
        CHECK(has == t.relevant);
    }
    for (int k = 0; k < 3; ++k) {
        CHECK(per_kind[TaskKind(k)] == 8);
        CHECK(relevant[TaskKind(k)] == 4);
        // Eight tasks round-robin over four categories.
        for (uint8_t c = 0; c < 4; ++c) CHECK(per_category[{TaskKind(k), c}] == 2);
    }

    // Same seed, same plan; different seed, different order.
    const auto again = plan_tasks(corpus, cfg);
    CHECK(std::equal(tasks.begin(), tasks.end(), again.begin(), again.end(),
                     [](const ScenarioTask& a, const ScenarioTask& b) {
                         return a.kind == b.kind && a.category == b.category &&
                                a.image_index == b.image_index && a.relevant == b.relevant &&
                                a.task_index == b.task_index;
                     }));
}

TEST_CASE("task planning fails when no image can satisfy a task") {
    ScratchDir dir("harness_plan_impossible");
    CorpusConfig ccfg;
    ccfg.n_images = 4;
    ccfg.n_categories = 2;
    ccfg.presence = 1.0;
    ccfg.width = 64;
    ccfg.height = 64;
    ccfg.max_instances = 2;
    generate_corpus(ccfg, dir.path.string());
    const Corpus corpus = load_corpus(dir.path.string());

    // Every image holds every category, so an irrelevant task has no home.
    CHECK_THROWS_AS(plan_tasks(corpus, perfect_scenario(4, 0.0)), ConfigInvalid);
    const auto tasks = plan_tasks(corpus, perfect_scenario(4, 1.0));
    CHECK(tasks.size() == 12);
}

TEST_CASE("scenario runs are deterministic and scheme independent") {
    ScratchDir dir("harness_scenario");
    const CorpusConfig ccfg = small_config();
    generate_corpus(ccfg, dir.path.string());
    const Corpus corpus = load_corpus(dir.path.string());

    const ScenarioConfig cfg = perfect_scenario(8, 0.5);
    const ScenarioResult first = run_scenario(corpus, cfg);
    const ScenarioResult second = run_scenario(corpus, cfg);

    REQUIRE(first.configured.size() == 4 * 24);
    CHECK(first.configured == second.configured);
    CHECK(first.measured == second.measured);
    CHECK(first.configured_report.rows == second.configured_report.rows);
    REQUIRE(first.logs.size() == second.logs.size());
    for (size_t i = 0; i < first.logs.size(); ++i)
        CHECK(session_log_jsonl(first.logs[i]) == session_log_jsonl(second.logs[i]));

    // Dropping schemes leaves the remaining records untouched.
    ScenarioConfig subset = cfg;
    subset.schemes = {Scheme::MULTIRATE};
    const ScenarioResult alone = run_scenario(corpus, subset);
    std::vector<TaskRecord> from_full;
    for (const auto& r : first.configured)
        if (r.scheme == Scheme::MULTIRATE) from_full.push_back(r);
    CHECK(alone.configured == from_full);

    ScenarioConfig reversed = cfg;
    std::reverse(reversed.schemes.begin(), reversed.schemes.end());
    const ScenarioResult backwards = run_scenario(corpus, reversed);
    CHECK(backwards.configured_report.rows == first.configured_report.rows);

    ScenarioConfig doubled = cfg;
    doubled.schemes = {Scheme::MULTIRATE, Scheme::MULTIRATE};
    CHECK_THROWS_AS(run_scenario(corpus, doubled), ConfigInvalid);
}

TEST_CASE("configured accounting matches the size model exactly") {
    ScratchDir dir("harness_scenario_sizes");
    const CorpusConfig ccfg = small_config();
    generate_corpus(ccfg, dir.path.string());
    const Corpus corpus = load_corpus(dir.path.string());

    const SizeModel model;
    const ScenarioConfig cfg = perfect_scenario(8, 0.5);
    const ScenarioResult result = run_scenario(corpus, cfg);
    const ByteReport& report = result.configured_report;

    const auto mean = [&](Scheme s, TaskKind k) {
        const ReportRow* row = report.find(s, k);
        REQUIRE(row != nullptr);
        CHECK(row->count == 8);
        CHECK(row->completed == 8);
        return row->mean_semantic_bytes;
    };
    CHECK(mean(Scheme::DIGITAL, TaskKind::CAPTION) == doctest::Approx(model.jpeg_q30).epsilon(1e-12));
    CHECK(mean(Scheme::DIGITAL, TaskKind::RECONSTRUCTION) ==
          doctest::Approx(model.jpeg_q30).epsilon(1e-12));
    CHECK(mean(Scheme::DIGITAL_KNOWLEDGE, TaskKind::CAPTION) ==
          doctest::Approx(model.jpeg_q25).epsilon(1e-12));
    CHECK(mean(Scheme::DIGITAL_KNOWLEDGE, TaskKind::SEGMENTATION) ==
          doctest::Approx(model.jpeg_q30).epsilon(1e-12));
    CHECK(mean(Scheme::ISC_KNOWLEDGE, TaskKind::CAPTION) ==
          doctest::Approx(model.istext).epsilon(1e-12));
    CHECK(mean(Scheme::ISC_KNOWLEDGE, TaskKind::SEGMENTATION) ==
          doctest::Approx(model.aseg).epsilon(1e-12));
    CHECK(mean(Scheme::ISC_KNOWLEDGE, TaskKind::RECONSTRUCTION) ==
          doctest::Approx(model.istext + model.bseg).epsilon(1e-12));
    // Half the tasks stop at the caption, half escalate.
    CHECK(mean(Scheme::MULTIRATE, TaskKind::CAPTION) ==
          doctest::Approx(model.istext).epsilon(1e-12));
    CHECK(mean(Scheme::MULTIRATE, TaskKind::SEGMENTATION) ==
          doctest::Approx(model.istext + 0.5 * model.aseg).epsilon(1e-12));
    CHECK(mean(Scheme::MULTIRATE, TaskKind::RECONSTRUCTION) ==
          doctest::Approx(model.istext + 0.5 * model.bseg).epsilon(1e-12));

    // Measured accounting counts real encoded bytes instead.
    const ReportRow* digital = result.measured_report.find(Scheme::DIGITAL, TaskKind::CAPTION);
    REQUIRE(digital != nullptr);
    CHECK(digital->mean_semantic_bytes > 0.0);
    CHECK(digital->mean_semantic_bytes != doctest::Approx(model.jpeg_q30).epsilon(1e-6));
}

TEST_CASE("an empty task plan yields empty reports") {
    ScratchDir dir("harness_scenario_empty");
    CorpusConfig ccfg = small_config();
    ccfg.n_images = 2;
    generate_corpus(ccfg, dir.path.string());
    const Corpus corpus = load_corpus(dir.path.string());

    const ScenarioResult result = run_scenario(corpus, perfect_scenario(0, 0.0));
    CHECK(result.tasks.empty());
    CHECK(result.configured.empty());
    CHECK(result.configured_report.rows.empty());
    CHECK(result.logs.empty());
}

TEST_CASE("scenario outputs land on disk and parse back") {
    ScratchDir corpus_dir("harness_outputs_corpus"), out_dir("harness_outputs_run");
    const CorpusConfig ccfg = small_config();
    generate_corpus(ccfg, corpus_dir.path.string());
    const Corpus corpus = load_corpus(corpus_dir.path.string());

    const ScenarioConfig cfg = perfect_scenario(4, 0.5);
    const ScenarioResult result = run_scenario(corpus, cfg);
    write_scenario_outputs(result, cfg, out_dir.path.string());

    CHECK(slurp(out_dir.path / "report.csv").rfind("# report_v1", 0) == 0);
    CHECK(slurp(out_dir.path / "report.json") == slurp(out_dir.path / "report_configured.json"));
    const auto parsed = nlohmann::json::parse(slurp(out_dir.path / "report_measured.json"));
    CHECK(parsed.at("schema") == "report_v1");

    size_t lines = 0;
    std::istringstream sessions(slurp(out_dir.path / "sessions.jsonl"));
    std::string line;
    while (std::getline(sessions, line)) {
        const auto entry = nlohmann::json::parse(line);
        CHECK(entry.at("completed").get<bool>());
        ++lines;
    }
    CHECK(lines == result.logs.size());

    ScenarioConfig measured_cfg = cfg;
    measured_cfg.measured = true;
    write_scenario_outputs(result, measured_cfg, out_dir.path.string());
    CHECK(slurp(out_dir.path / "report.json") == slurp(out_dir.path / "report_measured.json"));
}

TEST_CASE("stage renders only ever get closer to the ground truth") {
    ScratchDir dir("harness_stage_mse");
    CorpusConfig ccfg = small_config();
    ccfg.width = 128;
    ccfg.height = 128;
    generate_corpus(ccfg, dir.path.string());
    const Corpus corpus = load_corpus(dir.path.string());

    const Palette palette = Palette::from_names(corpus.categories);
    for (const auto& image : corpus.images) {
        const auto errors = stage_mse(image, palette);
        REQUIRE(errors.size() == 4);
        CHECK(errors.front() > 0.0);
        for (size_t i = 1; i < errors.size(); ++i) CHECK(errors[i] <= errors[i - 1]);
        CHECK(errors.back() == 0.0);
    }
}

TEST_CASE("progressive delivery raises psnr stage by stage") {
    ScratchDir dir("harness_progressive");
    CorpusConfig ccfg = small_config();
    ccfg.width = 128;
    ccfg.height = 128;
    generate_corpus(ccfg, dir.path.string());
    const Corpus corpus = load_corpus(dir.path.string());

    // Pick an image and a category it actually holds.
    const uint32_t image_index = 0;
    REQUIRE(!corpus.images[image_index].present.empty());
    const uint8_t category = *corpus.images[image_index].present.begin();
    const TaskDescriptor task{TaskKind::RECONSTRUCTION, corpus.categories[category]};

    const ProgressiveResult result =
        run_progressive(corpus, image_index, task, perfect_scenario(1, 1.0));
    CHECK(result.log.completed);
    REQUIRE(result.stages.size() == 4);
    REQUIRE(result.stage_psnr.size() == 4);
    for (size_t i = 1; i < result.stage_psnr.size(); ++i)
        CHECK(result.stage_psnr[i] >= result.stage_psnr[i - 1]);
    CHECK(result.stage_psnr.front() < result.stage_psnr.back());
}
