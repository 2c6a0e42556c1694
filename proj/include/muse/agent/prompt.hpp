#pragma once

#include <string>
#include <vector>

#include "muse/agent/intent.hpp"

namespace muse::agent {

// Section labels, in the order they appear in a prompt.
inline constexpr const char* kSectionLabels[] = {"SCORE_ABC", "ALIGNMENT_JSON", "EVALUATION_JSON", "RETRIEVED",
                                                 "HISTORY"};

struct ContextPiece {
    std::string label;
    std::string content;
};

enum class Modality { Text, Image, Audio };

/// Audio when the intent uses audio-dsp, image (sheet music) when it reads a
/// score, text otherwise.
Modality modality_of(const Intent& intent);

std::string system_preamble(Modality modality, const std::string& measure_id = "");

struct PromptOptions {
    size_t budget_chars = 24000;  // rendered context sections only
};

/// Preamble, labelled sections, then the question. `context` is oldest
/// first; when the rendered sections exceed the budget the oldest pieces
/// are dropped and a marker takes their place. Unknown labels sort last.
std::string compose_prompt(const Intent& intent, const std::vector<ContextPiece>& context,
                           const std::string& question, const PromptOptions& options = {});

/// "[LABEL]\ncontent\n[/LABEL]\n"
std::string render_section(const ContextPiece& piece);

}  // namespace muse::agent
