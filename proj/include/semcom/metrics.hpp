#pragma once

// Caption and reconstruction quality metrics plus byte accounting reports.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semcom/baseline.hpp"
#include "semcom/errors.hpp"
#include "semcom/raster.hpp"
#include "semcom/task.hpp"

namespace semcom {

std::vector<std::string> whitespace_tokens(const std::string& text);

// Geometric mean of clipped n-gram precisions with uniform weights, times the
// brevity penalty min(1, exp(1 - r/c)), r being the reference length closest
// to the candidate's (ties go to the shorter reference). Add-one smoothing,
// when enabled, applies to both numerator and denominator for orders >= 2.
// An empty candidate scores 0.
double bleu(const std::vector<std::string>& candidate,
            const std::vector<std::vector<std::string>>& references, int max_n = 4,
            bool smoothing = true);

// Pooled variant: n-gram hits and totals accumulate over all sentence pairs
// before the geometric mean, and the brevity penalty uses summed lengths.
double corpus_bleu(const std::vector<std::vector<std::string>>& candidates,
                   const std::vector<std::vector<std::vector<std::string>>>& references,
                   int max_n = 4, bool smoothing = true);

// 10*log10(255^2 / MSE) over every RGB sample, capped at 99 dB (also the
// sentinel for identical images).
double psnr(const ImageRaster& a, const ImageRaster& b);

// One transport session flattened for aggregation.
struct TaskRecord {
    Scheme scheme = Scheme::MULTIRATE;
    TaskKind kind = TaskKind::CAPTION;
    uint32_t session_id = 0;
    double semantic_bytes = 0.0;
    uint64_t wire_bytes = 0;
    uint64_t ticks = 0;
    bool completed = false;

    bool operator==(const TaskRecord&) const = default;
};

// kind == nullopt aggregates every task of the scheme. lpips and fid stay
// empty unless filled in from an external evaluator.
struct ReportRow {
    Scheme scheme = Scheme::MULTIRATE;
    std::optional<TaskKind> kind;
    uint64_t count = 0;
    uint64_t completed = 0;
    double mean_semantic_bytes = 0.0;
    double mean_wire_bytes = 0.0;
    double mean_ticks = 0.0;
    std::optional<double> reduction_vs_digital;
    std::optional<double> lpips;
    std::optional<double> fid;

    bool operator==(const ReportRow&) const = default;
};

struct ByteReport {
    std::vector<ReportRow> rows;

    const ReportRow* find(Scheme scheme, std::optional<TaskKind> kind) const;
};

// Sorts a copy of the records by (scheme, kind, session_id) before summing,
// so any input permutation produces a bitwise identical report. Rows come out
// ordered by scheme then kind, with the scheme-wide row last. Each non-digital
// row whose digital counterpart exists carries
// reduction_vs_digital = 1 - mean/digital_mean over semantic bytes.
ByteReport build_report(std::vector<TaskRecord> records);

// Tabular form, first line "# report_v1"; empty optional fields stay blank.
std::string report_csv(const ByteReport& report);
// Object form {"schema":"report_v1","metadata":{...},"rows":[...]}.
std::string report_json(const ByteReport& report);

}  // namespace semcom
