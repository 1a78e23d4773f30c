#include "semcom/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

#include <json.hpp>

namespace semcom {

namespace {

// Clipped n-gram matches pooled per order, plus the lengths the brevity
// penalty needs.
struct NgramStats {
    std::vector<uint64_t> hits;
    std::vector<uint64_t> totals;
    uint64_t candidate_len = 0;
    uint64_t reference_len = 0;

    explicit NgramStats(int max_n)
        : hits(size_t(max_n), 0), totals(size_t(max_n), 0) {}

    void add(const NgramStats& other) {
        for (size_t i = 0; i < hits.size(); ++i) {
            hits[i] += other.hits[i];
            totals[i] += other.totals[i];
        }
        candidate_len += other.candidate_len;
        reference_len += other.reference_len;
    }
};

using Ngram = std::vector<std::string>;

std::map<Ngram, uint64_t> ngram_counts(const std::vector<std::string>& tokens, int n) {
    std::map<Ngram, uint64_t> counts;
    if (tokens.size() < size_t(n)) return counts;
    for (size_t i = 0; i + size_t(n) <= tokens.size(); ++i)
        ++counts[Ngram(tokens.begin() + long(i), tokens.begin() + long(i) + n)];
    return counts;
}

NgramStats sentence_stats(const std::vector<std::string>& candidate,
                          const std::vector<std::vector<std::string>>& references, int max_n) {
    if (references.empty()) throw EmptyReference("caption has no references");
    NgramStats stats(max_n);
    stats.candidate_len = candidate.size();

    size_t closest = references.front().size();
    for (const auto& ref : references) {
        const auto diff = [&](size_t len) {
            return len > candidate.size() ? len - candidate.size() : candidate.size() - len;
        };
        if (diff(ref.size()) < diff(closest) || (diff(ref.size()) == diff(closest) && ref.size() < closest))
            closest = ref.size();
    }
    stats.reference_len = closest;

    for (int n = 1; n <= max_n; ++n) {
        const auto cand_counts = ngram_counts(candidate, n);
        std::map<Ngram, uint64_t> ref_max;
        for (const auto& ref : references)
            for (const auto& [gram, count] : ngram_counts(ref, n)) {
                auto& best = ref_max[gram];
                best = std::max(best, count);
            }
        uint64_t hits = 0, total = 0;
        for (const auto& [gram, count] : cand_counts) {
            total += count;
            auto it = ref_max.find(gram);
            if (it != ref_max.end()) hits += std::min(count, it->second);
        }
        stats.hits[size_t(n - 1)] = hits;
        stats.totals[size_t(n - 1)] = total;
    }
    return stats;
}

double score_from(const NgramStats& stats, int max_n, bool smoothing) {
    if (stats.candidate_len == 0) return 0.0;
    double log_sum = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        double num = double(stats.hits[size_t(n - 1)]);
        double den = double(stats.totals[size_t(n - 1)]);
        if (smoothing && n >= 2) {
            num += 1.0;
            den += 1.0;
        }
        if (num == 0.0 || den == 0.0) return 0.0;
        log_sum += std::log(num / den) / double(max_n);
    }
    const double c = double(stats.candidate_len);
    const double r = double(stats.reference_len);
    const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
    return bp * std::exp(log_sum);
}

}  // namespace

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(ch);
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

double bleu(const std::vector<std::string>& candidate,
            const std::vector<std::vector<std::string>>& references, int max_n, bool smoothing) {
    if (max_n < 1) throw InvariantViolation("bleu order must be at least 1");
    return score_from(sentence_stats(candidate, references, max_n), max_n, smoothing);
}

double corpus_bleu(const std::vector<std::vector<std::string>>& candidates,
                   const std::vector<std::vector<std::vector<std::string>>>& references,
                   int max_n, bool smoothing) {
    if (max_n < 1) throw InvariantViolation("bleu order must be at least 1");
    if (candidates.size() != references.size())
        throw DimMismatch("candidate and reference counts differ");
    NgramStats pooled(max_n);
    for (size_t i = 0; i < candidates.size(); ++i)
        pooled.add(sentence_stats(candidates[i], references[i], max_n));
    if (candidates.empty()) return 0.0;
    return score_from(pooled, max_n, smoothing);
}

double psnr(const ImageRaster& a, const ImageRaster& b) {
    if (!a.valid() || !b.valid()) throw InvariantViolation("psnr needs well-formed rasters");
    if (a.width != b.width || a.height != b.height)
        throw DimensionMismatch("psnr needs equal dimensions");
    double sum = 0.0;
    for (size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = double(a.pixels[i]) - double(b.pixels[i]);
        sum += d * d;
    }
    const double mse = sum / double(a.pixels.size());
    if (mse == 0.0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(255.0 * 255.0 / mse));
}

const ReportRow* ByteReport::find(Scheme scheme, std::optional<TaskKind> kind) const {
    for (const auto& row : rows)
        if (row.scheme == scheme && row.kind == kind) return &row;
    return nullptr;
}

ByteReport build_report(std::vector<TaskRecord> records) {
    std::sort(records.begin(), records.end(), [](const TaskRecord& a, const TaskRecord& b) {
        return std::tuple(int(a.scheme), int(a.kind), a.session_id) <
               std::tuple(int(b.scheme), int(b.kind), b.session_id);
    });

    struct Sums {
        uint64_t count = 0;
        uint64_t completed = 0;
        double semantic = 0.0;
        double wire = 0.0;
        double ticks = 0.0;

        void add(const TaskRecord& rec) {
            ++count;
            completed += rec.completed ? 1 : 0;
            semantic += rec.semantic_bytes;
            wire += double(rec.wire_bytes);
            ticks += double(rec.ticks);
        }
        ReportRow row(Scheme scheme, std::optional<TaskKind> kind) const {
            ReportRow r;
            r.scheme = scheme;
            r.kind = kind;
            r.count = count;
            r.completed = completed;
            r.mean_semantic_bytes = semantic / double(count);
            r.mean_wire_bytes = wire / double(count);
            r.mean_ticks = ticks / double(count);
            return r;
        }
    };

    ByteReport report;
    size_t i = 0;
    while (i < records.size()) {
        const Scheme scheme = records[i].scheme;
        Sums scheme_sums;
        while (i < records.size() && records[i].scheme == scheme) {
            const TaskKind kind = records[i].kind;
            Sums kind_sums;
            while (i < records.size() && records[i].scheme == scheme && records[i].kind == kind) {
                kind_sums.add(records[i]);
                scheme_sums.add(records[i]);
                ++i;
            }
            report.rows.push_back(kind_sums.row(scheme, kind));
        }
        report.rows.push_back(scheme_sums.row(scheme, std::nullopt));
    }

    for (auto& row : report.rows) {
        if (row.scheme == Scheme::DIGITAL) continue;
        const ReportRow* digital = report.find(Scheme::DIGITAL, row.kind);
        if (digital && digital->mean_semantic_bytes > 0.0)
            row.reduction_vs_digital = 1.0 - row.mean_semantic_bytes / digital->mean_semantic_bytes;
    }
    return report;
}

namespace {

std::string kind_name(std::optional<TaskKind> kind) {
    return kind ? to_string(*kind) : std::string("ALL");
}

std::string fixed6(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    return buf;
}

}  // namespace

std::string report_csv(const ByteReport& report) {
    std::string out = "# report_v1\n";
    out +=
        "scheme,kind,count,completed,mean_semantic_bytes,mean_wire_bytes,mean_ticks,"
        "reduction_vs_digital,lpips,fid\n";
    for (const auto& row : report.rows) {
        out += to_string(row.scheme);
        out += ',';
        out += kind_name(row.kind);
        out += ',' + std::to_string(row.count) + ',' + std::to_string(row.completed);
        out += ',' + fixed6(row.mean_semantic_bytes) + ',' + fixed6(row.mean_wire_bytes);
        out += ',' + fixed6(row.mean_ticks);
        out += ',';
        if (row.reduction_vs_digital) out += fixed6(*row.reduction_vs_digital);
        out += ',';
        if (row.lpips) out += fixed6(*row.lpips);
        out += ',';
        if (row.fid) out += fixed6(*row.fid);
        out += '\n';
    }
    return out;
}

std::string report_json(const ByteReport& report) {
    nlohmann::json j;
    j["schema"] = "report_v1";
    j["metadata"]["bleu_mode"] = "sentence-average BLEU-4, add-one smoothing, reported x100";
    j["rows"] = nlohmann::json::array();
    for (const auto& row : report.rows) {
        nlohmann::json r;
        r["scheme"] = to_string(row.scheme);
        r["kind"] = kind_name(row.kind);
        r["count"] = row.count;
        r["completed"] = row.completed;
        r["mean_semantic_bytes"] = row.mean_semantic_bytes;
        r["mean_wire_bytes"] = row.mean_wire_bytes;
        r["mean_ticks"] = row.mean_ticks;
        r["reduction_vs_digital"] =
            row.reduction_vs_digital ? nlohmann::json(*row.reduction_vs_digital) : nullptr;
        r["lpips"] = row.lpips ? nlohmann::json(*row.lpips) : nullptr;
        r["fid"] = row.fid ? nlohmann::json(*row.fid) : nullptr;
        j["rows"].push_back(std::move(r));
    }
    return j.dump(2) + "\n";
}

}  // namespace semcom
