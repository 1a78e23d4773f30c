#include "semcom/ldpc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include "semcom/rng.hpp"

namespace semcom {

namespace {

// Dense GF(2) rows as 64-bit words.
struct BitMatrix {
    int cols = 0;
    int words = 0;
    std::vector<std::vector<uint64_t>> rows;

    BitMatrix(int nrows, int ncols)
        : cols(ncols), words((ncols + 63) / 64),
          rows(nrows, std::vector<uint64_t>(size_t(words), 0)) {}

    bool get(int r, int c) const { return (rows[r][c / 64] >> (c % 64)) & 1; }
    void set(int r, int c) { rows[r][c / 64] |= uint64_t(1) << (c % 64); }
    void xor_rows(int dst, int src) {
        for (int w = 0; w < words; ++w) rows[dst][w] ^= rows[src][w];
    }
};

void build_col_rows(LdpcCode& code) {
    code.col_rows.assign(size_t(code.n), {});
    for (int r = 0; r < code.m; ++r)
        for (int c : code.row_cols[size_t(r)]) code.col_rows[size_t(c)].push_back(r);
}

// Reduced row echelon form of H over GF(2); fills the encoder tables.
// Throws SingularCode when H has dependent rows (rate would not be (n-m)/n).
void prepare_encoder(LdpcCode& code) {
    BitMatrix h(code.m, code.n);
    for (int r = 0; r < code.m; ++r)
        for (int c : code.row_cols[size_t(r)]) {
            if (c < 0 || c >= code.n) throw ParseError("check entry out of range");
            if (h.get(r, c))
                throw ParseError("duplicate entry in check row");
            h.set(r, c);
        }

    std::vector<int> pivot_of_row;
    std::vector<bool> is_pivot_col(size_t(code.n), false);
    int rank = 0;
    for (int col = 0; col < code.n && rank < code.m; ++col) {
        int pivot = -1;
        for (int r = rank; r < code.m; ++r)
            if (h.get(r, col)) {
                pivot = r;
                break;
            }
        if (pivot < 0) continue;
        std::swap(h.rows[size_t(pivot)], h.rows[size_t(rank)]);
        for (int r = 0; r < code.m; ++r)
            if (r != rank && h.get(r, col)) h.xor_rows(r, rank);
        pivot_of_row.push_back(col);
        is_pivot_col[size_t(col)] = true;
        ++rank;
    }
    if (rank < code.m) throw SingularCode("parity-check matrix has dependent rows");

    code.k = code.n - code.m;
    code.pivot_cols = pivot_of_row;
    code.free_cols.clear();
    for (int c = 0; c < code.n; ++c)
        if (!is_pivot_col[size_t(c)]) code.free_cols.push_back(c);

    code.row_frees.assign(size_t(code.m), {});
    for (int r = 0; r < code.m; ++r)
        for (int c : code.free_cols)
            if (h.get(r, c)) code.row_frees[size_t(r)].push_back(c);
}

struct PegBuild {
    LdpcCode code;
    bool ok = false;
};

PegBuild peg_attempt(int n, int m, int wc, int wr, uint64_t seed) {
    PegBuild out;
    out.code.n = n;
    out.code.m = m;
    out.code.row_cols.assign(size_t(m), {});
    std::vector<std::vector<int>> var_checks(static_cast<size_t>(n));
    std::vector<int> check_deg(size_t(m), 0);
    Rng rng(seed);

    for (int v = 0; v < n; ++v) {
        for (int e = 0; e < wc; ++e) {
            // BFS over the current Tanner graph from v; checks never reached,
            // or reached last, keep the girth large.
            std::vector<int> check_depth(size_t(m), -1);
            std::vector<bool> var_seen(size_t(n), false);
            std::vector<int> frontier{v};
            var_seen[size_t(v)] = true;
            int depth = 0;
            std::vector<int> last_layer;
            while (!frontier.empty()) {
                std::vector<int> next_checks;
                for (int fv : frontier)
                    for (int c : var_checks[size_t(fv)])
                        if (check_depth[size_t(c)] < 0) {
                            check_depth[size_t(c)] = depth;
                            next_checks.push_back(c);
                        }
                if (!next_checks.empty()) last_layer = next_checks;
                std::vector<int> next_vars;
                for (int c : next_checks)
                    for (int cv : out.code.row_cols[size_t(c)])
                        if (!var_seen[size_t(cv)]) {
                            var_seen[size_t(cv)] = true;
                            next_vars.push_back(cv);
                        }
                frontier = std::move(next_vars);
                ++depth;
            }

            std::vector<int> candidates;
            for (int c = 0; c < m; ++c)
                if (check_depth[size_t(c)] < 0 && check_deg[size_t(c)] < wr)
                    candidates.push_back(c);
            if (candidates.empty()) {
                for (int c : last_layer)
                    if (check_deg[size_t(c)] < wr) candidates.push_back(c);
            }
            if (candidates.empty()) {
                for (int c = 0; c < m; ++c)
                    if (check_deg[size_t(c)] < wr &&
                        std::find(var_checks[size_t(v)].begin(), var_checks[size_t(v)].end(),
                                  c) == var_checks[size_t(v)].end())
                        candidates.push_back(c);
            }
            candidates.erase(std::remove_if(candidates.begin(), candidates.end(),
                                            [&](int c) {
                                                return std::find(var_checks[size_t(v)].begin(),
                                                                 var_checks[size_t(v)].end(),
                                                                 c) !=
                                                       var_checks[size_t(v)].end();
                                            }),
                             candidates.end());
            if (candidates.empty()) return out;

            int best_deg = wr;
            for (int c : candidates) best_deg = std::min(best_deg, check_deg[size_t(c)]);
            std::vector<int> best;
            for (int c : candidates)
                if (check_deg[size_t(c)] == best_deg) best.push_back(c);
            int chosen = best[rng.uniform_int(0, best.size() - 1)];

            out.code.row_cols[size_t(chosen)].push_back(v);
            var_checks[size_t(v)].push_back(chosen);
            ++check_deg[size_t(chosen)];
        }
    }
    for (auto& row : out.code.row_cols) std::sort(row.begin(), row.end());
    out.ok = true;
    return out;
}

}  // namespace

LdpcCode peg_construct(int n, int wc, int wr, uint64_t seed) {
    if (n <= 0 || wc <= 0 || wr <= 0 || (int64_t(n) * wc) % wr != 0)
        throw SingularCode("degree profile does not balance");
    int m = int(int64_t(n) * wc / wr);
    if (m >= n) throw SingularCode("code has no information bits");
    for (int attempt = 0; attempt < 64; ++attempt) {
        auto built = peg_attempt(n, m, wc, wr, seed ^ splitmix64(uint64_t(attempt)));
        if (!built.ok) continue;
        try {
            build_col_rows(built.code);
            prepare_encoder(built.code);
            return built.code;
        } catch (const SingularCode&) {
        }
    }
    throw SingularCode("progressive edge growth failed to produce a full-rank code");
}

LdpcCode code_from_rows(int n, std::vector<std::vector<int>> row_cols) {
    LdpcCode code;
    code.n = n;
    code.m = int(row_cols.size());
    code.row_cols = std::move(row_cols);
    build_col_rows(code);
    prepare_encoder(code);
    return code;
}

LdpcCode load_alist(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open alist file " + path);
    int n = 0, m = 0, cmax = 0, rmax = 0;
    if (!(in >> n >> m >> cmax >> rmax) || n <= 0 || m <= 0)
        throw ParseError("bad alist header");
    std::vector<int> col_w(static_cast<size_t>(n));
    std::vector<int> row_w(static_cast<size_t>(m));
    for (auto& w : col_w)
        if (!(in >> w) || w < 0 || w > cmax) throw ParseError("bad alist column weight");
    for (auto& w : row_w)
        if (!(in >> w) || w < 0 || w > rmax) throw ParseError("bad alist row weight");

    std::vector<std::vector<int>> col_rows(static_cast<size_t>(n));
    for (int c = 0; c < n; ++c) {
        for (int i = 0; i < cmax; ++i) {
            int r = 0;
            if (!(in >> r)) throw ParseError("truncated alist column list");
            if (r == 0) continue;
            if (r < 1 || r > m) throw ParseError("alist row index out of range");
            col_rows[size_t(c)].push_back(r - 1);
        }
        if (int(col_rows[size_t(c)].size()) != col_w[size_t(c)])
            throw ParseError("alist column weight mismatch");
    }
    std::vector<std::vector<int>> row_cols(static_cast<size_t>(m));
    for (int r = 0; r < m; ++r) {
        for (int i = 0; i < rmax; ++i) {
            int c = 0;
            if (!(in >> c)) throw ParseError("truncated alist row list");
            if (c == 0) continue;
            if (c < 1 || c > n) throw ParseError("alist column index out of range");
            row_cols[size_t(r)].push_back(c - 1);
        }
        if (int(row_cols[size_t(r)].size()) != row_w[size_t(r)])
            throw ParseError("alist row weight mismatch");
    }
    for (int r = 0; r < m; ++r)
        for (int c : row_cols[size_t(r)]) {
            const auto& back = col_rows[size_t(c)];
            if (std::find(back.begin(), back.end(), r) == back.end())
                throw ParseError("alist row and column lists disagree");
        }
    return code_from_rows(n, std::move(row_cols));
}

void save_alist(const LdpcCode& code, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write alist file " + path);
    size_t cmax = 0, rmax = 0;
    for (const auto& rows : code.col_rows) cmax = std::max(cmax, rows.size());
    for (const auto& cols : code.row_cols) rmax = std::max(rmax, cols.size());
    out << code.n << " " << code.m << "\n" << cmax << " " << rmax << "\n";
    for (const auto& rows : code.col_rows) out << rows.size() << " ";
    out << "\n";
    for (const auto& cols : code.row_cols) out << cols.size() << " ";
    out << "\n";
    for (const auto& rows : code.col_rows) {
        for (size_t i = 0; i < cmax; ++i)
            out << (i < rows.size() ? rows[i] + 1 : 0) << " ";
        out << "\n";
    }
    for (const auto& cols : code.row_cols) {
        for (size_t i = 0; i < rmax; ++i)
            out << (i < cols.size() ? cols[i] + 1 : 0) << " ";
        out << "\n";
    }
}

std::vector<uint8_t> ldpc_encode(const std::vector<uint8_t>& info, const LdpcCode& code) {
    if (int(info.size()) != code.k) throw DimMismatch("info length differs from k");
    std::vector<uint8_t> cw(size_t(code.n), 0);
    for (int i = 0; i < code.k; ++i) cw[size_t(code.free_cols[size_t(i)])] = info[size_t(i)] & 1;
    for (int r = 0; r < code.m; ++r) {
        uint8_t parity = 0;
        for (int c : code.row_frees[size_t(r)]) parity ^= cw[size_t(c)];
        cw[size_t(code.pivot_cols[size_t(r)])] = parity;
    }
    return cw;
}

LdpcDecodeResult ldpc_decode(const std::vector<double>& llrs, const LdpcCode& code,
                             int max_iters) {
    if (int(llrs.size()) != code.n) throw DimMismatch("llr length differs from n");
    constexpr double kClamp = 30.0;

    // Messages live on edges, indexed by (row, position-in-row).
    std::vector<std::vector<double>> check_msg(size_t(code.m));
    for (int r = 0; r < code.m; ++r)
        check_msg[size_t(r)].assign(code.row_cols[size_t(r)].size(), 0.0);

    std::vector<double> posterior(llrs);
    std::vector<uint8_t> hard(size_t(code.n), 0);
    LdpcDecodeResult result;

    auto syndrome_clear = [&]() {
        for (int v = 0; v < code.n; ++v) hard[size_t(v)] = posterior[size_t(v)] < 0 ? 1 : 0;
        for (int r = 0; r < code.m; ++r) {
            uint8_t parity = 0;
            for (int c : code.row_cols[size_t(r)]) parity ^= hard[size_t(c)];
            if (parity) return false;
        }
        return true;
    };

    for (int iter = 1; iter <= max_iters; ++iter) {
        for (int r = 0; r < code.m; ++r) {
            const auto& cols = code.row_cols[size_t(r)];
            auto& msgs = check_msg[size_t(r)];
            // tanh-rule update using the product of all neighbors, divided out
            // per edge; zeros handled by counting.
            double prod = 1.0;
            int zeros = 0;
            std::vector<double> tanhs(cols.size());
            for (size_t i = 0; i < cols.size(); ++i) {
                double incoming = posterior[size_t(cols[i])] - msgs[i];
                incoming = std::clamp(incoming, -kClamp, kClamp);
                double t = std::tanh(incoming / 2.0);
                tanhs[i] = t;
                if (t == 0.0)
                    ++zeros;
                else
                    prod *= t;
            }
            for (size_t i = 0; i < cols.size(); ++i) {
                double others;
                if (zeros > 1 || (zeros == 1 && tanhs[i] != 0.0))
                    others = 0.0;
                else if (zeros == 1)
                    others = prod;
                else
                    others = prod / tanhs[i];
                others = std::clamp(others, -(1.0 - 1e-12), 1.0 - 1e-12);
                double updated = 2.0 * std::atanh(others);
                posterior[size_t(cols[i])] += updated - msgs[i];
                msgs[i] = updated;
            }
        }
        result.iterations = iter;
        if (syndrome_clear()) {
            result.converged = true;
            break;
        }
    }
    if (!result.converged) {
        for (int v = 0; v < code.n; ++v) hard[size_t(v)] = posterior[size_t(v)] < 0 ? 1 : 0;
    }
    result.info.resize(size_t(code.k));
    for (int i = 0; i < code.k; ++i) result.info[size_t(i)] = hard[size_t(code.free_cols[size_t(i)])];
    return result;
}

}  // namespace semcom
