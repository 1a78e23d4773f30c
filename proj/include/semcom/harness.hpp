#pragma once

// Synthetic corpus generation and ingestion, plus scenario execution: runs
// every (scheme, task) pair through the protocol stack and aggregates the
// byte accounting into reports.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "semcom/baseline.hpp"
#include "semcom/channel.hpp"
#include "semcom/correlation.hpp"
#include "semcom/embeddings.hpp"
#include "semcom/metrics.hpp"
#include "semcom/policy.hpp"
#include "semcom/protocol.hpp"
#include "semcom/raster.hpp"
#include "semcom/reconstruct.hpp"
#include "semcom/semantics.hpp"
#include "semcom/task.hpp"

namespace semcom {

struct CorpusConfig {
    uint32_t n_images = 0;
    uint16_t n_categories = 80;
    // Fraction of images each category appears in; made exact per category
    // via stratified assignment.
    double presence = 0.10;
    uint16_t width = 128;
    uint16_t height = 128;
    uint64_t seed = 0;
    // Cap on distinct categories per image.
    uint16_t max_instances = 8;
};

// Generated directory layout:
//   categories.txt            one name per line (doubles as the gazetteer)
//   embeddings.txt            one-hot vectors in the embeddings file format
//   annotations.json          images, captions, instances
//   images/img%05d.ppm        ground truth renders
//   semantics/img%05d.*.bin   encoded elements (text, aseg, bseg, simg)
// Same config, same bytes: regeneration is reproducible bit for bit.
void generate_corpus(const CorpusConfig& config, const std::string& out_dir);

struct AnnotatedImage {
    uint32_t image_id = 0;
    uint16_t width = 0;
    uint16_t height = 0;
    std::string caption;
    AsegMap aseg;  // class grid rebuilt from the polygons
    BsegMap bseg;
};

struct AnnotationSet {
    std::vector<std::string> categories;
    std::vector<AnnotatedImage> images;
};

// Schema: {"categories": [name...], "images": [{"id", "width", "height",
// "caption", "instances": [{"instance_id", "category_id", "bbox": [x,y,w,h],
// "polygon": [x0,y0,...]}]}]}. Violations raise SchemaError whose message
// starts with the JSON pointer of the offending field.
AnnotationSet ingest_annotations(const std::string& annotations_path);

struct CorpusImage {
    uint32_t image_id = 0;
    std::string caption;
    std::set<uint8_t> present;  // categories with an instance in this image
    ImageRaster gt;
    SemanticBundle bundle;
};

struct Corpus {
    std::vector<std::string> categories;
    EmbeddingTable embeddings;
    ClassVocabulary vocab;
    std::set<std::string> gazetteer;
    std::vector<CorpusImage> images;
};

// Reads a generated (or hand-built, same layout) corpus directory back into
// memory; sub-image crops are re-extracted from the ground truth renders.
Corpus load_corpus(const std::string& dir);

struct ScenarioConfig {
    std::vector<Scheme> schemes{Scheme::DIGITAL, Scheme::DIGITAL_KNOWLEDGE,
                                Scheme::ISC_KNOWLEDGE, Scheme::MULTIRATE};
    uint32_t tasks_per_kind = 160;
    // Fraction of tasks per kind whose image actually holds the target
    // category; rounded to a count and made exact.
    double relevant_fraction = 0.10;
    LadderPreset ladder = LadderPreset::TABLE2;
    double threshold = kDefaultRelevanceThreshold;
    // Selects which accounting fills the primary report; both are always
    // computed.
    bool measured = false;
    SizeModel size_model;
    ChannelConfig channel;
    uint64_t seed = 0;
    int max_retries = 8;
    bool feedback_over_channel = false;
};

ScenarioConfig scenario_from_json(const std::string& text);

struct ScenarioTask {
    TaskKind kind = TaskKind::CAPTION;
    uint8_t category = 0;
    uint32_t image_index = 0;
    bool relevant = false;
    // kind * tasks_per_kind + position, stable across scheme sets and
    // execution order.
    uint16_t task_index = 0;
};

// Round-robin categories over each kind's tasks, exact relevant counts via a
// seeded shuffle, then a seeded global execution order.
std::vector<ScenarioTask> plan_tasks(const Corpus& corpus, const ScenarioConfig& config);

struct ScenarioResult {
    std::vector<ScenarioTask> tasks;      // execution order
    std::vector<TaskRecord> configured;   // size-model accounting
    std::vector<TaskRecord> measured;     // encoded-byte accounting
    ByteReport configured_report;
    ByteReport measured_report;
    std::vector<SessionLog> logs;         // execution order, all schemes
};

// Per-session channel noise streams key off the session id, which keys off
// the scheme value and task index, so every (scheme, task) outcome is
// independent of the scheme set and the execution order.
ScenarioResult run_scenario(const Corpus& corpus, const ScenarioConfig& config);

// report.csv / report.json for the configured accounting (or measured when
// selected), both accountings as report_configured.json / report_measured.json,
// and one summary line per session in sessions.jsonl.
void write_scenario_outputs(const ScenarioResult& result, const ScenarioConfig& config,
                            const std::string& out_dir);

// MSE of the cumulative stage renders (text, +aseg, +bseg, +crops) against
// the stored ground truth, no protocol involved.
std::vector<double> stage_mse(const CorpusImage& image, const Palette& palette);

struct ProgressiveResult {
    std::vector<ImageRaster> stages;  // render after each delivered element
    std::vector<double> stage_psnr;   // against the ground truth
    SessionLog log;
};

// Runs one task over the full text, coarse map, contour map, sub-image
// ladder and renders the canvas after every delivery.
ProgressiveResult run_progressive(const Corpus& corpus, uint32_t image_index,
                                  const TaskDescriptor& task, const ScenarioConfig& config);

}  // namespace semcom
