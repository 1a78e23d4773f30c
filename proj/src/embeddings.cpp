#include "semcom/embeddings.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace semcom {

namespace {

std::vector<double> normalized(std::vector<double> v, const std::string& what) {
    double norm2 = 0.0;
    for (double c : v) norm2 += c * c;
    if (norm2 == 0.0) throw ZeroVector("zero vector for " + what);
    double inv = 1.0 / std::sqrt(norm2);
    for (double& c : v) c *= inv;
    return v;
}

}  // namespace

const std::vector<double>& EmbeddingTable::vec(const std::string& word) const {
    auto it = entries.find(word);
    if (it == entries.end()) throw UnknownWord("no embedding for '" + word + "'");
    return it->second;
}

std::vector<double> EmbeddingTable::embed(const std::string& name) const {
    std::istringstream ss(name);
    std::vector<std::string> words;
    std::string word;
    while (ss >> word) words.push_back(word);
    if (words.empty()) throw UnknownWord("empty name");
    if (words.size() == 1) return vec(words[0]);
    std::vector<double> sum(dim, 0.0);
    for (const auto& w : words) {
        const auto& v = vec(w);
        for (size_t i = 0; i < dim; ++i) sum[i] += v[i];
    }
    return normalized(std::move(sum), "'" + name + "'");
}

std::optional<uint8_t> ClassVocabulary::id_of(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<uint8_t>(i);
    return std::nullopt;
}

EmbeddingTable parse_embeddings(const std::string& text) {
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header)) throw ParseError("missing embedding header");
    std::istringstream hs(header);
    long long count = -1, dim = -1;
    if (!(hs >> count >> dim) || count < 0 || dim < 1)
        throw ParseError("bad embedding header '" + header + "'");
    std::string extra;
    if (hs >> extra) throw ParseError("trailing tokens in embedding header");

    EmbeddingTable table;
    table.dim = static_cast<size_t>(dim);
    std::string line;
    long long seen = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        std::vector<double> v(table.dim);
        for (auto& c : v) {
            if (!(ls >> c)) throw ParseError("short or non-numeric vector for '" + word + "'");
        }
        if (ls >> extra) throw ParseError("too many components for '" + word + "'");
        if (table.entries.count(word)) throw ParseError("duplicate word '" + word + "'");
        table.entries[word] = normalized(std::move(v), "'" + word + "'");
        ++seen;
    }
    if (seen != count) throw ParseError("header count does not match line count");
    return table;
}

EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open embedding file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_embeddings(buf.str());
}

double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size()) throw DimMismatch("vector dims differ");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) throw ZeroVector("cosine of zero vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

std::pair<std::string, double> nearest_category(const std::string& word,
                                                const EmbeddingTable& table,
                                                const ClassVocabulary& vocab) {
    const auto& q = table.vec(word);
    std::pair<std::string, double> best{"", -2.0};
    for (const auto& name : vocab.names) {
        double s = cosine_similarity(q, table.embed(name));
        if (s > best.second) best = {name, s};
    }
    if (best.first.empty()) throw UnknownWord("empty vocabulary");
    return best;
}

}  // namespace semcom
