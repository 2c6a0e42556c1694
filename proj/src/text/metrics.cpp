#include "muse/text/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

namespace muse::text {

namespace {

Prf make_prf(double overlap, size_t ref_size, size_t hyp_size) {
    Prf p;
    p.precision = hyp_size ? overlap / static_cast<double>(hyp_size) : 0.0;
    p.recall = ref_size ? overlap / static_cast<double>(ref_size) : 0.0;
    const double sum = p.precision + p.recall;
    p.f1 = sum > 0.0 ? 2.0 * p.precision * p.recall / sum : 0.0;
    return p;
}

}  // namespace

Tokens tokenize(std::string_view text, const TokenizeOptions& options) {
    Tokens out;
    std::string current;
    const auto flush = [&] {
        if (!current.empty()) out.push_back(std::move(current));
        current.clear();
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            flush();
            continue;
        }
        if (options.strip_punctuation && c < 0x80 && std::ispunct(c)) continue;
        current += options.lowercase && c < 0x80 ? static_cast<char>(std::tolower(c)) : ch;
    }
    flush();
    return out;
}

std::u32string decode_utf8(std::string_view text) {
    std::u32string out;
    for (size_t i = 0; i < text.size();) {
        const auto c = static_cast<unsigned char>(text[i]);
        size_t extra = 0;
        char32_t cp = c;
        if ((c >> 5) == 0x6) {
            extra = 1;
            cp = c & 0x1F;
        } else if ((c >> 4) == 0xE) {
            extra = 2;
            cp = c & 0x0F;
        } else if ((c >> 3) == 0x1E) {
            extra = 3;
            cp = c & 0x07;
        } else if (c >= 0x80) {
            extra = text.size();  // stray continuation or invalid lead byte
        }
        bool ok = i + extra < text.size();
        for (size_t k = 1; ok && k <= extra; ++k) {
            const auto d = static_cast<unsigned char>(text[i + k]);
            ok = (d >> 6) == 0x2;
            cp = (cp << 6) | (d & 0x3F);
        }
        if (!ok) {
            out.push_back(U'\uFFFD');
            ++i;
            continue;
        }
        out.push_back(cp);
        i += extra + 1;
    }
    return out;
}

size_t levenshtein(std::u32string_view a, std::u32string_view b) {
    // Two rows of D, where D[i][j] is the distance between a[:i] and b[:j].
    std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= b.size(); ++j) {
            const size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

size_t levenshtein(std::string_view a, std::string_view b) { return levenshtein(decode_utf8(a), decode_utf8(b)); }

size_t lcs_length(const Tokens& a, const Tokens& b) {
    std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (size_t i = 1; i <= a.size(); ++i) {
        for (size_t j = 1; j <= b.size(); ++j)
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

Prf rouge1(const Tokens& reference, const Tokens& hypothesis) {
    std::map<std::string, size_t> counts;
    for (const auto& t : reference) ++counts[t];
    size_t overlap = 0;
    for (const auto& t : hypothesis)
        if (auto it = counts.find(t); it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    return make_prf(static_cast<double>(overlap), reference.size(), hypothesis.size());
}

Prf rougeL(const Tokens& reference, const Tokens& hypothesis) {
    return make_prf(static_cast<double>(lcs_length(reference, hypothesis)), reference.size(), hypothesis.size());
}

MeteorDetail meteor_lite_detail(const Tokens& reference, const Tokens& hypothesis, const SynonymMatcher& synonyms) {
    MeteorDetail d;
    // Reference position matched by each hypothesis token, or npos.
    constexpr size_t npos = static_cast<size_t>(-1);
    std::vector<size_t> link(hypothesis.size(), npos);
    std::vector<bool> used(reference.size(), false);
    const auto stage = [&](const auto& same) {
        for (size_t h = 0; h < hypothesis.size(); ++h) {
            if (link[h] != npos) continue;
            for (size_t r = 0; r < reference.size(); ++r)
                if (!used[r] && same(reference[r], hypothesis[h])) {
                    used[r] = true;
                    link[h] = r;
                    break;
                }
        }
    };
    stage([](const std::string& a, const std::string& b) { return a == b; });
    if (synonyms) stage(synonyms);

    size_t previous = npos;
    for (size_t h = 0; h < hypothesis.size(); ++h) {
        if (link[h] == npos) {
            previous = npos;
            continue;
        }
        ++d.matches;
        if (previous == npos || link[h] != previous + 1) ++d.chunks;
        previous = link[h];
    }
    if (d.matches == 0) return d;
    const auto m = static_cast<double>(d.matches);
    d.precision = m / static_cast<double>(hypothesis.size());
    d.recall = m / static_cast<double>(reference.size());
    d.f_mean = 10.0 * d.precision * d.recall / (d.precision + 9.0 * d.recall);
    d.penalty = 0.5 * std::pow(static_cast<double>(d.chunks) / m, 3.0);
    d.score = d.f_mean * (1.0 - d.penalty);
    return d;
}

double meteor_lite(const Tokens& reference, const Tokens& hypothesis, const SynonymMatcher& synonyms) {
    return meteor_lite_detail(reference, hypothesis, synonyms).score;
}

}  // namespace muse::text
