#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace muse::text {

using Tokens = std::vector<std::string>;

struct TokenizeOptions {
    bool lowercase = true;          // ASCII letters only
    bool strip_punctuation = true;  // ASCII punctuation
};

/// Whitespace split; empty tokens (after stripping) are dropped.
Tokens tokenize(std::string_view text, const TokenizeOptions& options = {});

/// Decodes UTF-8 into code points; invalid bytes map to U+FFFD.
std::u32string decode_utf8(std::string_view text);

/// Minimum number of single-character insertions, deletions and
/// substitutions turning `a` into `b`.
size_t levenshtein(std::u32string_view a, std::u32string_view b);
/// Character-level distance over the UTF-8 code points of both strings.
size_t levenshtein(std::string_view a, std::string_view b);

/// Length of the longest common subsequence.
size_t lcs_length(const Tokens& a, const Tokens& b);

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Clipped unigram overlap.
Prf rouge1(const Tokens& reference, const Tokens& hypothesis);
/// P = LCS/|hyp|, R = LCS/|ref|.
Prf rougeL(const Tokens& reference, const Tokens& hypothesis);

/// Optional second matching stage for tokens the exact stage left over.
using SynonymMatcher = std::function<bool(const std::string&, const std::string&)>;

struct MeteorDetail {
    double score = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f_mean = 0.0;
    double penalty = 0.0;
    size_t matches = 0;
    size_t chunks = 0;
};

/// Exact matching (each hypothesis token takes the leftmost free reference
/// token), F_mean = 10PR/(P+9R), penalty = 0.5·(chunks/matches)^3,
/// score = F_mean·(1 − penalty).
MeteorDetail meteor_lite_detail(const Tokens& reference, const Tokens& hypothesis,
                                const SynonymMatcher& synonyms = nullptr);
double meteor_lite(const Tokens& reference, const Tokens& hypothesis, const SynonymMatcher& synonyms = nullptr);

}  // namespace muse::text
