#include "semcom/cli.hpp"

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "semcom/baseline.hpp"
#include "semcom/channel.hpp"
#include "semcom/errors.hpp"
#include "semcom/harness.hpp"
#include "semcom/metrics.hpp"
#include "semcom/reconstruct.hpp"

namespace semcom::cli {

namespace {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<uint8_t> read_bytes(const fs::path& path) {
    const std::string text = read_text(path);
    return std::vector<uint8_t>(text.begin(), text.end());
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path.string());
    out << content;
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty())
        std::fputs(content.c_str(), stdout);
    else
        write_text(out_path, content);
}

struct GenCorpusArgs {
    std::string out;
    CorpusConfig config;
};

int run_gen_corpus(const GenCorpusArgs& args) {
    generate_corpus(args.config, args.out);
    std::printf("generated %u images across %u categories in %s\n", args.config.n_images,
                args.config.n_categories, args.out.c_str());
    return 0;
}

struct RunArgs {
    std::string corpus;
    std::string config;
    std::string out;
    bool measured = false;
    std::string channel;  // empty keeps the config file's channel
    double ebn0 = 0.0;
    bool ebn0_set = false;
};

ChannelMode channel_shorthand(const std::string& name) {
    if (name == "perfect") return ChannelMode::PERFECT;
    if (name == "awgn") return ChannelMode::AWGN_UNCODED;
    if (name == "ldpc") return ChannelMode::AWGN_LDPC;
    throw ConfigInvalid("unknown channel '" + name + "', expected perfect, awgn, or ldpc");
}

int run_scenario_cmd(const RunArgs& args) {
    ScenarioConfig config =
        args.config.empty() ? ScenarioConfig{} : scenario_from_json(read_text(args.config));
    if (args.measured) config.measured = true;
    if (!args.channel.empty()) config.channel.mode = channel_shorthand(args.channel);
    if (args.ebn0_set) config.channel.ebn0_db = args.ebn0;

    const Corpus corpus = load_corpus(args.corpus);
    const ScenarioResult result = run_scenario(corpus, config);
    write_scenario_outputs(result, config, args.out);
    std::printf("ran %zu sessions (%zu tasks x %zu schemes); reports in %s\n", result.logs.size(),
                result.tasks.size(), config.schemes.size(), args.out.c_str());
    return 0;
}

struct BerSweepArgs {
    std::string mode;
    std::vector<double> ebn0_list;
    uint64_t bits = 1000000;
    uint64_t seed = 0;
    std::string out;
};

int run_ber_sweep(const BerSweepArgs& args) {
    ChannelMode mode;
    if (args.mode == "uncoded")
        mode = ChannelMode::AWGN_UNCODED;
    else if (args.mode == "ldpc")
        mode = ChannelMode::AWGN_LDPC;
    else
        throw ConfigInvalid("unknown mode '" + args.mode + "', expected uncoded or ldpc");
    if (args.ebn0_list.empty()) throw ConfigInvalid("ebn0 list is empty");
    if (args.bits == 0) throw ConfigInvalid("bit budget must be positive");

    std::string csv = "ebn0_db,mode,bits,errors,ber\n";
    for (double ebn0 : args.ebn0_list) {
        const BerPoint point = measure_ber(mode, ebn0, args.bits, args.seed);
        char line[128];
        std::snprintf(line, sizeof line, "%g,%s,%llu,%llu,%.9g\n", point.ebn0_db,
                      args.mode.c_str(), static_cast<unsigned long long>(point.bits),
                      static_cast<unsigned long long>(point.errors), point.ber);
        csv += line;
    }
    emit(args.out, csv);
    return 0;
}

struct CodecBenchArgs {
    std::string corpus;
    std::vector<int> qualities;
    std::string out;
};

int run_codec_bench(const CodecBenchArgs& args) {
    if (args.qualities.empty()) throw ConfigInvalid("quality list is empty");
    for (int q : args.qualities)
        if (q < 1 || q > 100) throw ConfigInvalid("quality must be in [1, 100]");

    const Corpus corpus = load_corpus(args.corpus);
    std::string csv = "image_id,q,bytes,psnr\n";
    for (const auto& image : corpus.images)
        for (int q : args.qualities) {
            const auto encoded = dct_codec_encode(image.gt, q);
            const double quality = psnr(image.gt, dct_codec_decode(encoded));
            char line[128];
            std::snprintf(line, sizeof line, "%u,%d,%zu,%.6f\n", image.image_id, q, encoded.size(),
                          quality);
            csv += line;
        }
    emit(args.out, csv);
    return 0;
}

struct ReportArgs {
    std::string in;
    std::string format = "csv";
};

ByteReport report_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("report is not valid json: ") + e.what());
    }
    if (!doc.is_object() || doc.value("schema", "") != std::string("report_v1"))
        throw ParseError("report is missing the report_v1 schema tag");

    ByteReport report;
    for (const auto& r : doc.at("rows")) {
        ReportRow row;
        row.scheme = parse_scheme(r.at("scheme").get<std::string>());
        const std::string kind = r.at("kind").get<std::string>();
        if (kind != "ALL") {
            const auto parsed = parse_task_kind(kind);
            if (!parsed) throw ParseError("unknown task kind " + kind);
            row.kind = *parsed;
        }
        row.count = r.at("count").get<uint64_t>();
        row.completed = r.at("completed").get<uint64_t>();
        row.mean_semantic_bytes = r.at("mean_semantic_bytes").get<double>();
        row.mean_wire_bytes = r.at("mean_wire_bytes").get<double>();
        row.mean_ticks = r.at("mean_ticks").get<double>();
        const auto optional_of = [&](const char* key) -> std::optional<double> {
            if (!r.contains(key) || r.at(key).is_null()) return std::nullopt;
            return r.at(key).get<double>();
        };
        row.reduction_vs_digital = optional_of("reduction_vs_digital");
        row.lpips = optional_of("lpips");
        row.fid = optional_of("fid");
        report.rows.push_back(std::move(row));
    }
    return report;
}

int run_report(const ReportArgs& args) {
    if (args.format != "csv" && args.format != "json")
        throw ConfigInvalid("unknown format '" + args.format + "', expected csv or json");
    const ByteReport report = report_from_json(read_text(fs::path(args.in) / "report.json"));
    std::fputs((args.format == "csv" ? report_csv(report) : report_json(report)).c_str(), stdout);
    return 0;
}

struct BridgeRenderArgs {
    std::string workdir;
    std::string categories;
};

// Answers a reconstruction bridge request: decodes the elements listed in
// request/manifest.json, renders them, and writes response/image.ppm.
int run_bridge_render(const BridgeRenderArgs& args) {
    const fs::path root(args.workdir);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_text(root / "request" / "manifest.json"));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed manifest: ") + e.what());
    }
    const uint16_t width = manifest.at("width").get<uint16_t>();
    const uint16_t height = manifest.at("height").get<uint16_t>();

    ReceivedSemantics received;
    for (const auto& entry : manifest.at("elements")) {
        const auto file = entry.at("file").get<std::string>();
        const SemanticElement element = decode_element(read_bytes(root / "request" / file));
        switch (element.kind()) {
            case ElementKind::TEXT: received.text = element.text(); break;
            case ElementKind::ASEG: received.aseg = element.aseg(); break;
            case ElementKind::BSEG: received.bseg = element.bseg(); break;
            case ElementKind::SIMG: received.crops = element.subimages(); break;
        }
    }

    std::vector<std::string> names;
    if (!args.categories.empty()) {
        std::istringstream in(read_text(args.categories));
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
            if (!line.empty()) names.push_back(line);
        }
        if (names.empty()) throw ConfigInvalid("category file lists no categories");
    } else {
        // Default names mirror generated corpora.
        for (int c = 0; c < 255; ++c) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "cat%02d", c);
            names.push_back(buf);
        }
    }

    const ImageRaster img = render_reference(received, width, height, Palette::from_names(names));
    fs::create_directories(root / "response");
    write_ppm(img, (root / "response" / "image.ppm").string());
    return 0;
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"semantic communication simulator"};
    app.require_subcommand(1);

    GenCorpusArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-corpus", "generate a synthetic corpus");
    gen_cmd->add_option("--out", gen.out, "output directory")->required();
    gen_cmd->add_option("--images", gen.config.n_images, "number of images")->required();
    gen_cmd->add_option("--categories", gen.config.n_categories, "number of categories");
    gen_cmd->add_option("--presence", gen.config.presence, "fraction of images per category");
    gen_cmd->add_option("--seed", gen.config.seed, "generation seed");
    gen_cmd->add_option("--width", gen.config.width, "image width");
    gen_cmd->add_option("--height", gen.config.height, "image height");
    gen_cmd->add_option("--max-instances", gen.config.max_instances, "instance cap per image");

    RunArgs scenario;
    auto* run_cmd = app.add_subcommand("run", "run a scenario over a corpus");
    run_cmd->add_option("--corpus", scenario.corpus, "corpus directory")->required();
    run_cmd->add_option("--config", scenario.config, "scenario config json");
    run_cmd->add_option("--out", scenario.out, "output directory")->required();
    run_cmd->add_flag("--measured", scenario.measured,
                      "report measured encoded bytes instead of configured sizes");
    run_cmd->add_option("--channel", scenario.channel, "channel override: perfect, awgn, or ldpc");
    auto* ebn0_opt = run_cmd->add_option("--ebn0", scenario.ebn0, "Eb/N0 override in dB");

    BerSweepArgs ber;
    auto* ber_cmd = app.add_subcommand("ber-sweep", "measure bit error rates");
    ber_cmd->add_option("--mode", ber.mode, "uncoded or ldpc")->required();
    ber_cmd->add_option("--ebn0-list", ber.ebn0_list, "Eb/N0 points in dB")
        ->required()
        ->delimiter(',');
    ber_cmd->add_option("--bits", ber.bits, "minimum bits per point");
    ber_cmd->add_option("--seed", ber.seed, "noise seed");
    ber_cmd->add_option("--out", ber.out, "output csv (stdout when omitted)");

    CodecBenchArgs bench;
    auto* bench_cmd = app.add_subcommand("codec-bench", "measure codec size and fidelity");
    bench_cmd->add_option("--corpus", bench.corpus, "corpus directory")->required();
    bench_cmd->add_option("--q", bench.qualities, "quality settings")->required()->delimiter(',');
    bench_cmd->add_option("--out", bench.out, "output csv (stdout when omitted)");

    ReportArgs report;
    auto* report_cmd = app.add_subcommand("report", "re-emit a stored report");
    report_cmd->add_option("--in", report.in, "scenario output directory")->required();
    report_cmd->add_option("--format", report.format, "csv or json");

    BridgeRenderArgs bridge;
    auto* bridge_cmd = app.add_subcommand("bridge-render", "answer a reconstruction bridge request");
    bridge_cmd->add_option("workdir", bridge.workdir, "bridge working directory")->required();
    bridge_cmd->add_option("--categories", bridge.categories, "category name file for the palette");

    try {
        app.parse(argc, argv);
        scenario.ebn0_set = ebn0_opt->count() > 0;
        if (gen_cmd->parsed()) return run_gen_corpus(gen);
        if (run_cmd->parsed()) return run_scenario_cmd(scenario);
        if (ber_cmd->parsed()) return run_ber_sweep(ber);
        if (bench_cmd->parsed()) return run_codec_bench(bench);
        if (report_cmd->parsed()) return run_report(report);
        if (bridge_cmd->parsed()) return run_bridge_render(bridge);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const ConfigInvalid& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const SchemaError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}

}  // namespace semcom::cli
