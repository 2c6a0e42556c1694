#include "muse/agent/prompt.hpp"

#include <algorithm>
#include <iterator>

namespace muse::agent {

namespace {

constexpr const char* kTextPrompt =
    "You are a music expert. Please read the following question carefully and provide the correct answer based "
    "on your knowledge of music theory and practice.";
constexpr const char* kImagePrompt =
    "You are a music expert. Please analyze the given sheet music image and select the correct answer to the "
    "question based on its notated content.";
constexpr const char* kAudioPrompt =
    "You are a music expert. Please carefully listen to the <measure_id> section of the provided audio excerpt "
    "and answer the question based on your auditory analysis.";

size_t label_rank(const std::string& label) {
    const auto begin = std::begin(kSectionLabels), end = std::end(kSectionLabels);
    return static_cast<size_t>(std::find(begin, end, label) - begin);
}

}  // namespace

Modality modality_of(const Intent& intent) {
    if (intent.requires_module(kAudioDsp)) return Modality::Audio;
    if (intent.requires_module(kSymbolicIo)) return Modality::Image;
    return Modality::Text;
}

std::string system_preamble(Modality modality, const std::string& measure_id) {
    switch (modality) {
        case Modality::Audio:
            return std::string(kAudioPrompt) + "\n<measure_id> = " + (measure_id.empty() ? "all measures" : measure_id);
        case Modality::Image: return kImagePrompt;
        default: return kTextPrompt;
    }
}

std::string render_section(const ContextPiece& piece) {
    return "[" + piece.label + "]\n" + piece.content + (piece.content.empty() || piece.content.back() == '\n' ? "" : "\n") +
           "[/" + piece.label + "]\n";
}

std::string compose_prompt(const Intent& intent, const std::vector<ContextPiece>& context,
                           const std::string& question, const PromptOptions& options) {
    std::vector<std::string> rendered;
    size_t total = 0;
    for (const auto& piece : context) {
        rendered.push_back(render_section(piece));
        total += rendered.back().size();
    }
    size_t dropped = 0;
    while (dropped < context.size() && total > options.budget_chars) total -= rendered[dropped++].size();

    std::vector<size_t> kept;
    for (size_t i = dropped; i < context.size(); ++i) kept.push_back(i);
    std::stable_sort(kept.begin(), kept.end(),
                     [&](size_t a, size_t b) { return label_rank(context[a].label) < label_rank(context[b].label); });

    const auto measure = mentioned_measure(question);
    std::string out = system_preamble(modality_of(intent), measure ? "measure " + std::to_string(*measure) : "");
    out += "\n\n";
    if (dropped > 0) out += "[TRUNCATED: " + std::to_string(dropped) + " earlier context section(s) omitted]\n";
    for (size_t i : kept) out += rendered[i];
    if (dropped > 0 || !kept.empty()) out += "\n";
    out += "Question: " + question + "\n";
    return out;
}

}  // namespace muse::agent
