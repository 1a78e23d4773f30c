#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "semcom/embeddings.hpp"
#include "semcom/rng.hpp"

using namespace semcom;

namespace {

// Splits lines and fields by hand, independent of parse_embeddings.
size_t oracle_line_count(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    size_t n = 0;
    bool first = true;
    while (std::getline(in, line)) {
        if (first) {
            first = false;
            continue;
        }
        if (line.find_first_not_of(" \t\r") != std::string::npos) ++n;
    }
    return n;
}

std::string synthetic_vocab_file(size_t words, size_t dim, uint64_t seed) {
    Rng rng(seed);
    std::ostringstream out;
    out << words << " " << dim << "\n";
    for (size_t w = 0; w < words; ++w) {
        out << "word" << w;
        for (size_t d = 0; d < dim; ++d) out << " " << (rng.uniform() * 2.0 - 1.0);
        out << "\n";
    }
    return out.str();
}

}  // namespace

TEST_CASE("axis vectors normalize to unit axes") {
    auto table = parse_embeddings("2 3\ncat 1 0 0\ndog 0 2 0");
    CHECK(table.dim == 3);
    CHECK(table.vec("cat") == std::vector<double>{1, 0, 0});
    CHECK(table.vec("dog") == std::vector<double>{0, 1, 0});
}

TEST_CASE("header count must match line count") {
    CHECK_THROWS_AS(parse_embeddings("3 3\ncat 1 0 0\ndog 0 2 0"), ParseError);
    CHECK_THROWS_AS(parse_embeddings("1 3\ncat 1 0 0\ndog 0 2 0"), ParseError);
}

TEST_CASE("malformed embedding files are rejected") {
    CHECK_THROWS_AS(parse_embeddings(""), ParseError);
    CHECK_THROWS_AS(parse_embeddings("x y\n"), ParseError);
    CHECK_THROWS_AS(parse_embeddings("1 3\ncat 1 0"), ParseError);
    CHECK_THROWS_AS(parse_embeddings("1 3\ncat 1 0 zebra"), ParseError);
    CHECK_THROWS_AS(parse_embeddings("1 3\ncat 1 0 0 5"), ParseError);
    CHECK_THROWS_AS(parse_embeddings("2 2\ncat 1 0\ncat 0 1"), ParseError);
    CHECK_THROWS_AS(parse_embeddings("1 2\ncat 0 0"), ZeroVector);
}

TEST_CASE("an 80 word vocabulary loads at dim 50") {
    auto text = synthetic_vocab_file(80, 50, 11);
    CHECK(oracle_line_count(text) == 80);
    auto table = parse_embeddings(text);
    CHECK(table.entries.size() == 80);
    CHECK(table.dim == 50);
    for (const auto& [word, v] : table.entries) {
        double norm2 = 0;
        for (double c : v) norm2 += c * c;
        CHECK(std::abs(std::sqrt(norm2) - 1.0) < 1e-6);
    }
}

TEST_CASE("loading a file twice gives identical tables") {
    auto dir = std::filesystem::temp_directory_path() / "semcom_embed_test";
    std::filesystem::create_directories(dir);
    auto path = (dir / "emb.txt").string();
    std::ofstream(path) << synthetic_vocab_file(20, 8, 3);
    CHECK(load_embeddings(path) == load_embeddings(path));
    std::filesystem::remove_all(dir);
}

TEST_CASE("cosine similarity basics") {
    CHECK(cosine_similarity({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_similarity({1, 0}, {0, 1}) == doctest::Approx(0.0));
    CHECK(cosine_similarity({1, 1}, {1, 0}) == doctest::Approx(0.70710678).epsilon(1e-9));
    CHECK(cosine_similarity({1, 0}, {0.5, 0}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(cosine_similarity({1, 0}, {1, 0, 0}), DimMismatch);
    CHECK_THROWS_AS(cosine_similarity({0, 0}, {1, 0}), ZeroVector);
}

TEST_CASE("a vocabulary word maps to itself") {
    auto table = parse_embeddings("3 2\ncat 1 0\ndog 0 1\nfox 1 1");
    ClassVocabulary vocab{{"cat", "dog", "fox"}};
    auto [name, score] = nearest_category("dog", table, vocab);
    CHECK(name == "dog");
    CHECK(score == doctest::Approx(1.0));
}

TEST_CASE("people lands on person in a fixture table") {
    auto table = parse_embeddings(
        "4 3\n"
        "person 0.9 0.1 0\n"
        "people 0.8 0.2 0\n"
        "car 0 0 1\n"
        "dog 0 1 0.2");
    ClassVocabulary vocab{{"person", "car", "dog"}};
    auto [name, score] = nearest_category("people", table, vocab);
    CHECK(name == "person");
    CHECK(score > cosine_similarity(table.vec("people"), table.vec("car")));
    CHECK(score > cosine_similarity(table.vec("people"), table.vec("dog")));
}

TEST_CASE("ties break toward the lowest category id") {
    auto table = parse_embeddings("3 2\na 1 0\nb 1 0\nq 1 0");
    ClassVocabulary vocab{{"b", "a"}};
    CHECK(nearest_category("q", table, vocab).first == "b");
    CHECK_THROWS_AS(nearest_category("zebra", table, vocab), UnknownWord);
}

TEST_CASE("multi word names embed as renormalized means") {
    auto table = parse_embeddings("2 2\nbaseball 1 0\nbat 0 1");
    auto v = table.embed("baseball bat");
    CHECK(v[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(v[1] == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("nearest category matches a brute force scan") {
    auto text = synthetic_vocab_file(120, 16, 9);
    auto table = parse_embeddings(text);
    ClassVocabulary vocab;
    for (int i = 0; i < 80; ++i) vocab.names.push_back("word" + std::to_string(i));

    Rng rng(17);
    for (int q = 0; q < 1000; ++q) {
        std::string query = "word" + std::to_string(rng.uniform_int(80, 119));
        auto got = nearest_category(query, table, vocab);

        std::string best_name;
        double best = -2.0;
        for (const auto& name : vocab.names) {
            double s = cosine_similarity(table.vec(query), table.vec(name));
            if (s > best) {
                best = s;
                best_name = name;
            }
        }
        CHECK(got.first == best_name);
        CHECK(got.second == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("argmax ignores positive scaling of the query") {
    auto table = parse_embeddings(synthetic_vocab_file(40, 8, 21));
    ClassVocabulary vocab;
    for (int i = 0; i < 30; ++i) vocab.names.push_back("word" + std::to_string(i));

    for (double alpha : {0.1, 10.0}) {
        for (int q = 30; q < 40; ++q) {
            std::string query = "word" + std::to_string(q);
            auto base = nearest_category(query, table, vocab);
            std::vector<double> scaled = table.vec(query);
            for (auto& c : scaled) c *= alpha;
            std::string best_name;
            double best = -2.0;
            for (const auto& name : vocab.names) {
                double s = cosine_similarity(scaled, table.embed(name));
                if (s > best) {
                    best = s;
                    best_name = name;
                }
            }
            CHECK(best_name == base.first);
        }
    }
}
