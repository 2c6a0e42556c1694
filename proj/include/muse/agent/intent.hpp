#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace muse::agent {

enum class IntentKind { Theory, ScoreAnalysis, PerformanceAnalysis, RetrievalExplicit, RetrievalImplicit, Followup };

std::string_view to_string(IntentKind kind);
std::optional<IntentKind> intent_from_string(std::string_view name);

// Module names as they appear in intents and traces.
inline constexpr const char* kSymbolicIo = "symbolic-io";
inline constexpr const char* kAudioDsp = "audio-dsp";
inline constexpr const char* kHmmAlign = "hmm-align";
inline constexpr const char* kPerfEval = "perf-eval";
inline constexpr const char* kRetrieval = "retrieval";
inline constexpr const char* kMemory = "memory";

struct Intent {
    IntentKind kind = IntentKind::Theory;
    double confidence = 0.5;
    std::vector<std::string> modules;

    bool requires_module(std::string_view module) const;
    bool operator==(const Intent&) const = default;
};

/// An uploaded file. Its type comes from the file name's extension.
struct Attachment {
    std::string name;
    std::string bytes;
};

/// Deterministic rule cascade: attachment types first, then the retrieval,
/// follow-up and theory lexicons; theory is the fallback.
Intent route_intent(std::string_view message, const std::vector<Attachment>& attachments);

/// "measure 8", "bar 8", "m. 8" in a message, if any.
std::optional<int> mentioned_measure(std::string_view message);

nlohmann::ordered_json to_json(const Intent& intent);

}  // namespace muse::agent
