#include "semcom/correlation.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace semcom {

std::vector<std::string> extract_entities(const std::string& text, const EmbeddingTable& lexicon,
                                          const std::set<std::string>& gazetteer) {
    std::vector<std::string> out;
    std::string token;
    auto flush = [&] {
        if (token.empty()) return;
        std::string word = token;
        token.clear();
        if (word.size() > 2 && word.ends_with("es") &&
            lexicon.contains(word.substr(0, word.size() - 2))) {
            word = word.substr(0, word.size() - 2);
        } else if (word.size() > 1 && word.ends_with("s") &&
                   lexicon.contains(word.substr(0, word.size() - 1))) {
            word = word.substr(0, word.size() - 1);
        }
        if (lexicon.contains(word) && gazetteer.count(word)) out.push_back(word);
    };
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        else
            flush();
    }
    flush();
    return out;
}

std::set<std::string> load_gazetteer(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open gazetteer " + path);
    std::set<std::string> nouns;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) nouns.insert(line);
    }
    return nouns;
}

RelevanceDecision assess_relevance(const TaskDescriptor& task, const IsText& istext,
                                   const EmbeddingTable& table, const ClassVocabulary& vocab,
                                   const std::set<std::string>& gazetteer, double threshold) {
    RelevanceDecision decision;
    if (task.kind == TaskKind::CAPTION) return decision;

    auto task_entities = extract_entities(task.description, table, gazetteer);
    auto caption_entities = extract_entities(istext.text, table, gazetteer);
    if (task_entities.empty() || caption_entities.empty()) return decision;

    std::vector<double> caption_best(caption_entities.size(), -2.0);
    double best = -2.0;
    for (const auto& t : task_entities) {
        const auto& tv = table.vec(t);
        for (size_t i = 0; i < caption_entities.size(); ++i) {
            double s = cosine_similarity(tv, table.vec(caption_entities[i]));
            caption_best[i] = std::max(caption_best[i], s);
            best = std::max(best, s);
        }
    }
    decision.best_score = best;
    decision.relevant = best >= threshold;
    if (!decision.relevant) return decision;

    for (size_t i = 0; i < caption_entities.size(); ++i) {
        if (caption_best[i] < threshold) continue;
        auto [name, score] = nearest_category(caption_entities[i], table, vocab);
        (void)score;
        if (std::find(decision.matched_categories.begin(), decision.matched_categories.end(),
                      name) == decision.matched_categories.end())
            decision.matched_categories.push_back(name);
    }
    return decision;
}

FeedbackMessage make_feedback(const RelevanceDecision& decision,
                              std::optional<ElementKind> next_kind,
                              const ClassVocabulary& vocab) {
    FeedbackMessage msg;
    if (!decision.relevant || !next_kind) return msg;
    msg.type = FeedbackType::REQUEST;
    msg.kind = *next_kind;
    for (const auto& name : decision.matched_categories) {
        auto id = vocab.id_of(name);
        if (!id) throw UnknownWord("matched category '" + name + "' not in vocabulary");
        msg.category_ids.push_back(*id);
    }
    return msg;
}

}  // namespace semcom
