#pragma once

// Shared vector database: word embeddings with unit L2 norm, plus the class
// vocabulary used to map entity words onto segmentation categories.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semcom/errors.hpp"

namespace semcom {

struct EmbeddingTable {
    size_t dim = 0;
    std::map<std::string, std::vector<double>> entries;

    bool contains(const std::string& word) const { return entries.count(word) != 0; }
    const std::vector<double>& vec(const std::string& word) const;

    // Embeds a possibly multi-word name as the renormalized mean of its word
    // vectors. Single words pass through unchanged.
    std::vector<double> embed(const std::string& name) const;

    bool operator==(const EmbeddingTable&) const = default;
};

// Ordered category names; the category id of a name is its index.
struct ClassVocabulary {
    std::vector<std::string> names;

    std::optional<uint8_t> id_of(const std::string& name) const;
    bool operator==(const ClassVocabulary&) const = default;
};

// File format: first line "count dim", then one line per word:
// "word c1 ... cdim" with space-separated decimal components.
EmbeddingTable load_embeddings(const std::string& path);
EmbeddingTable parse_embeddings(const std::string& text);

double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v);

// Argmax of cosine similarity between the word and every vocabulary category,
// ties broken by lowest category id.
std::pair<std::string, double> nearest_category(const std::string& word,
                                                const EmbeddingTable& table,
                                                const ClassVocabulary& vocab);

}  // namespace semcom
