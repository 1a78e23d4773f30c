#pragma once

// Receiver-side correlation analysis: pulls entity words out of the task
// description and the received caption, scores them against the vector
// database, and turns the outcome into protocol feedback.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "semcom/embeddings.hpp"
#include "semcom/feedback.hpp"
#include "semcom/semantics.hpp"
#include "semcom/task.hpp"

namespace semcom {

constexpr double kDefaultRelevanceThreshold = 0.5;

struct RelevanceDecision {
    bool relevant = false;
    std::vector<std::string> matched_categories;
    // Set to -1 when either side yields no entities or the task never needs
    // more data, so the relevance invariant holds at any threshold.
    double best_score = -1.0;
    bool operator==(const RelevanceDecision&) const = default;
};

// Entity extraction: lowercase, split on non-alphanumeric runs, strip plural
// suffixes ("es" then "s") when the stem is a lexicon word, keep tokens that
// appear in both the lexicon and the gazetteer. Order and duplicates survive.
std::vector<std::string> extract_entities(const std::string& text, const EmbeddingTable& lexicon,
                                          const std::set<std::string>& gazetteer);

// One lowercase noun per line.
std::set<std::string> load_gazetteer(const std::string& path);

RelevanceDecision assess_relevance(const TaskDescriptor& task, const IsText& istext,
                                   const EmbeddingTable& table, const ClassVocabulary& vocab,
                                   const std::set<std::string>& gazetteer,
                                   double threshold = kDefaultRelevanceThreshold);

// COMPLETE when the image is irrelevant or the ladder is exhausted, else a
// REQUEST for the next kind carrying the matched category ids.
FeedbackMessage make_feedback(const RelevanceDecision& decision,
                              std::optional<ElementKind> next_kind,
                              const ClassVocabulary& vocab);

}  // namespace semcom
