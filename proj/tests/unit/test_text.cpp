#include <random>

#include "doctest.h"
#include "muse/common/error.hpp"
#include "muse/text/lsa.hpp"
#include "muse/text/metrics.hpp"
#include "support/text_oracles.hpp"

using namespace muse;
using namespace muse::text;

namespace {

std::string random_string(std::mt19937_64& rng, size_t max_len, const std::string& alphabet) {
    std::uniform_int_distribution<size_t> len(0, max_len), pick(0, alphabet.size() - 1);
    std::string s(len(rng), ' ');
    for (auto& c : s) c = alphabet[pick(rng)];
    return s;
}

Tokens chars(const std::string& s) {
    Tokens t;
    for (char c : s) t.emplace_back(1, c);
    return t;
}

}  // namespace

TEST_CASE("levenshtein: examples") {
    CHECK(levenshtein("abc", "abc") == 0);
    CHECK(levenshtein("", "abc") == 3);
    CHECK(levenshtein("kitten", "sitting") == 3);
    CHECK(levenshtein("café", "cafe") == 1);
    CHECK(levenshtein("日本語", "日本") == 1);
    CHECK(decode_utf8("a\xff") == std::u32string{U'a', U'�'});
}

TEST_CASE("levenshtein: exhaustive over {a,b,c} up to length 6") {
    const auto strings = testing::all_strings("abc", 6);
    REQUIRE(strings.size() == 1093);
    size_t mismatches = 0;
    for (const auto& a : strings)
        for (const auto& b : strings)
            if (levenshtein(a, b) != testing::recursive_levenshtein(a, b)) ++mismatches;
    CHECK(mismatches == 0);
}

TEST_CASE("levenshtein: metric axioms") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 3000; ++i) {
        const auto a = random_string(rng, 8, "abcd"), b = random_string(rng, 8, "abcd"), c = random_string(rng, 8, "abcd");
        CHECK(levenshtein(a, b) == levenshtein(b, a));
        CHECK((levenshtein(a, b) == 0) == (a == b));
        CHECK(levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c));
    }
}

TEST_CASE("lcs: examples and recursive oracle") {
    CHECK(lcs_length(chars("ABCBDAB"), chars("BDCABA")) == 4);
    std::mt19937_64 rng(21);
    for (int i = 0; i < 200; ++i) {
        const auto a = chars(random_string(rng, 10, "abc")), b = chars(random_string(rng, 10, "abc"));
        CHECK(lcs_length(a, b) == testing::recursive_lcs(a, b));
    }
}

TEST_CASE("tokenize") {
    CHECK(tokenize("The cat, sat!  On\tthe MAT.") == Tokens{"the", "cat", "sat", "on", "the", "mat"});
    CHECK(tokenize("C# ... major", {false, false}) == Tokens{"C#", "...", "major"});
    CHECK(tokenize(" -- ").empty());
}

TEST_CASE("rouge1") {
    const auto p = rouge1(tokenize("the cat sat"), tokenize("the cat"));
    CHECK(p.precision == 1.0);
    CHECK(p.recall == doctest::Approx(2.0 / 3.0));
    CHECK(p.f1 == doctest::Approx(0.8));
    CHECK(rouge1(tokenize("a b c"), tokenize("a b c")).f1 == 1.0);
    CHECK(rouge1(tokenize("a b c"), tokenize("d e")).f1 == 0.0);
    CHECK(rouge1({}, {}).f1 == 0.0);
    // Clipping: repeated hypothesis tokens count once per reference copy.
    CHECK(rouge1(tokenize("the cat"), tokenize("the the the")).precision == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("rougeL") {
    CHECK(rougeL(tokenize("a b c d"), tokenize("a b c d")).f1 == 1.0);
    CHECK(rougeL(tokenize("a b c d"), {}).f1 == 0.0);
    const auto p = rougeL(tokenize("a b c d e"), tokenize("a c e x"));
    CHECK(p.precision == doctest::Approx(0.75));
    CHECK(p.recall == doctest::Approx(0.6));
    std::mt19937_64 rng(2);
    for (int i = 0; i < 500; ++i) {
        const auto a = chars(random_string(rng, 5, "ab")), b = chars(random_string(rng, 5, "ab"));
        if (a.empty() || b.empty()) continue;
        CHECK((rougeL(a, b).f1 == 1.0) == (a == b));
    }
}

TEST_CASE("meteor_lite") {
    CHECK(meteor_lite(tokenize("a b c d"), tokenize("a b c d")) == 0.9921875);
    for (size_t n = 1; n < 8; ++n) {
        Tokens t;
        for (size_t i = 0; i < n; ++i) t.push_back("w" + std::to_string(i));
        CHECK(meteor_lite(t, t) == doctest::Approx(1.0 - 0.5 / std::pow(static_cast<double>(n), 3)));
    }
    CHECK(meteor_lite(tokenize("a b"), tokenize("c d")) == 0.0);
    CHECK(meteor_lite({}, {}) == 0.0);

    // Leftmost greedy links: on→3 the→0 mat→5 the→4 cat→1 sat→2, five chunks.
    const auto d = meteor_lite_detail(tokenize("the cat sat on the mat"), tokenize("on the mat the cat sat"));
    CHECK(d.matches == 6);
    CHECK(d.chunks == 5);
    CHECK(d.score == doctest::Approx(1.0 - 0.5 * std::pow(5.0 / 6.0, 3)));

    // P = 2/3, R = 1/2, one chunk of two.
    const auto e = meteor_lite_detail(tokenize("a b c d"), tokenize("a b x"));
    const double f = 10.0 * (2.0 / 3.0) * 0.5 / (2.0 / 3.0 + 9.0 * 0.5);
    CHECK(e.score == doctest::Approx(f * (1.0 - 0.5 / 8.0)));

    const SynonymMatcher syn = [](const std::string& a, const std::string& b) {
        return (a == "quick" && b == "fast") || (a == "fast" && b == "quick");
    };
    CHECK(meteor_lite(tokenize("a quick fox"), tokenize("a fast fox")) <
          meteor_lite(tokenize("a quick fox"), tokenize("a fast fox"), syn));
    CHECK(meteor_lite_detail(tokenize("a quick fox"), tokenize("a fast fox"), syn).chunks == 1);
}

TEST_CASE("lsa cosine") {
    const std::vector<std::string> corpus{"the sonata is in c major", "a minor key sounds sad",
                                          "the fugue has three voices", "play the scale in c major slowly",
                                          "voices enter one after another in a fugue"};
    LsaOptions plain;
    plain.use_svd = false;
    const auto tfidf = LsaVectorizer::fit(corpus, plain);
    const auto lsa = LsaVectorizer::fit(corpus);
    CHECK(lsa.dims() <= 5);
    CHECK(tfidf.similarity("c major sonata", "c major sonata") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lsa.similarity("c major sonata", "c major sonata") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tfidf.similarity("sonata major", "fugue voices") == 0.0);
    CHECK(tfidf.similarity("fugue voices", "fugue voices fugue voices") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tfidf.similarity("unknown words", "sonata") == 0.0);
    // With the full rank kept, the projection is an isometry on the span
    // of the corpus, so corpus documents keep their TF-IDF cosines.
    for (const auto& a : corpus)
        for (const auto& b : corpus) CHECK(lsa.similarity(a, b) == doctest::Approx(tfidf.similarity(a, b)).epsilon(1e-9));
    // Scaling a vector leaves the cosine unchanged.
    const auto u = lsa.transform(corpus[0]), v = lsa.transform(corpus[3]);
    CHECK(cosine(3.5 * u, v) == doctest::Approx(cosine(u, v)).epsilon(1e-12));

    try {
        LsaVectorizer::fit({"", "  ,, "});
        FAIL("expected EmptyVocabulary");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyVocabulary);
    }
}
