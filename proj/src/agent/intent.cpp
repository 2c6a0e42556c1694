#include "muse/agent/intent.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include "muse/pipeline/analysis.hpp"

namespace muse::agent {

namespace {

constexpr std::pair<IntentKind, std::string_view> kNames[] = {
    {IntentKind::Theory, "theory"},
    {IntentKind::ScoreAnalysis, "score_analysis"},
    {IntentKind::PerformanceAnalysis, "performance_analysis"},
    {IntentKind::RetrievalExplicit, "retrieval_explicit"},
    {IntentKind::RetrievalImplicit, "retrieval_implicit"},
    {IntentKind::Followup, "followup"},
};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::vector<std::string> word_list(const std::string& text) {
    std::vector<std::string> out;
    std::string w;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            w += c;
        } else if (!w.empty()) {
            out.push_back(w);
            w.clear();
        }
    }
    if (!w.empty()) out.push_back(w);
    return out;
}

bool has_phrase(const std::vector<std::string>& words, std::string_view phrase) {
    const auto parts = word_list(std::string(phrase));
    if (parts.empty() || parts.size() > words.size()) return false;
    for (size_t i = 0; i + parts.size() <= words.size(); ++i)
        if (std::equal(parts.begin(), parts.end(), words.begin() + static_cast<long>(i))) return true;
    return false;
}

bool any_phrase(const std::vector<std::string>& words, std::initializer_list<std::string_view> phrases) {
    return std::any_of(phrases.begin(), phrases.end(), [&](std::string_view p) { return has_phrase(words, p); });
}

const std::initializer_list<std::string_view> kRetrievalLexicon = {
    "give me", "find", "search", "look up", "fetch", "play me", "get me", "show me the score", "do you have",
};
const std::initializer_list<std::string_view> kSimilarLexicon = {
    "similar", "like this", "which piece", "what piece", "identify", "recognize", "find",
};
const std::initializer_list<std::string_view> kFollowupOpeners = {"and", "what about", "how about", "same for",
                                                                   "also", "then"};
const std::initializer_list<std::string_view> kTheoryLexicon = {
    "interval",  "chord",    "scale",  "mode",     "key",      "cadence", "harmony",  "harmonic", "triad",
    "inversion", "inverting", "invert", "diminished", "augmented", "major", "minor",   "fifth",    "fourth",
    "third",     "sixth",    "seventh", "octave",  "tonic",    "dominant", "subdominant", "counterpoint",
    "meter",     "rhythm",   "tempo",  "dorian",   "phrygian", "lydian",  "mixolydian", "aeolian", "locrian",
};

bool quoted_title(std::string_view message) {
    const auto first = message.find('"');
    if (first != std::string_view::npos && message.find('"', first + 2) != std::string_view::npos) return true;
    const auto open = message.find("\xE2\x80\x9C");  // left double quotation mark
    return open != std::string_view::npos && message.find("\xE2\x80\x9D", open) != std::string_view::npos;
}

}  // namespace

std::string_view to_string(IntentKind kind) {
    for (const auto& [k, name] : kNames)
        if (k == kind) return name;
    return "theory";
}

std::optional<IntentKind> intent_from_string(std::string_view name) {
    for (const auto& [k, n] : kNames)
        if (n == name) return k;
    return std::nullopt;
}

bool Intent::requires_module(std::string_view module) const {
    return std::find(modules.begin(), modules.end(), module) != modules.end();
}

std::optional<int> mentioned_measure(std::string_view message) {
    static const std::regex pattern(R"((?:measure|bar|m\.)\s*#?\s*(\d+))", std::regex::icase);
    std::match_results<std::string_view::const_iterator> m;
    if (std::regex_search(message.begin(), message.end(), m, pattern)) return std::stoi(m[1].str());
    return std::nullopt;
}

Intent route_intent(std::string_view message, const std::vector<Attachment>& attachments) {
    bool audio = false, score = false, performance = false;
    for (const auto& a : attachments) {
        switch (pipeline::kind_of(a.name)) {
            case pipeline::FileKind::Audio: audio = true; break;
            case pipeline::FileKind::Score: score = true; break;
            case pipeline::FileKind::Midi:
            case pipeline::FileKind::Notes: performance = true; break;
            default: break;
        }
    }
    const std::string text = lower(message);
    const auto words = word_list(text);

    Intent intent;
    if (audio || performance) {
        std::vector<std::string> modules;
        if (audio) modules.push_back(kAudioDsp);
        modules.push_back(kSymbolicIo);
        if (score) {
            intent.kind = IntentKind::PerformanceAnalysis;
            intent.confidence = 0.95;
        } else {
            // No score to align against: find it in the library first.
            intent.kind = IntentKind::RetrievalImplicit;
            intent.confidence = 0.8;
            modules.push_back(kRetrieval);
        }
        modules.push_back(kHmmAlign);
        modules.push_back(kPerfEval);
        intent.modules = std::move(modules);
        return intent;
    }
    if (score) {
        if (any_phrase(words, kSimilarLexicon)) {
            intent = {IntentKind::RetrievalImplicit, 0.8, {kSymbolicIo, kRetrieval}};
        } else {
            intent = {IntentKind::ScoreAnalysis, 0.9, {kSymbolicIo}};
        }
        return intent;
    }
    if (any_phrase(words, kRetrievalLexicon) || quoted_title(message)) return {IntentKind::RetrievalExplicit, 0.85, {kRetrieval}};
    const bool opener = std::any_of(kFollowupOpeners.begin(), kFollowupOpeners.end(), [&](std::string_view p) {
        const auto parts = word_list(std::string(p));
        return words.size() >= parts.size() && std::equal(parts.begin(), parts.end(), words.begin());
    });
    if (opener || mentioned_measure(message)) return {IntentKind::Followup, 0.7, {kMemory}};
    if (any_phrase(words, kTheoryLexicon)) return {IntentKind::Theory, 0.9, {}};
    return {IntentKind::Theory, 0.5, {}};
}

nlohmann::ordered_json to_json(const Intent& intent) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(intent.kind);
    j["confidence"] = intent.confidence;
    j["modules"] = intent.modules;
    return j;
}

}  // namespace muse::agent
