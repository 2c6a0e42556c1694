#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "muse/align/audio.hpp"
#include "muse/align/symbolic.hpp"
#include "muse/dsp/audio.hpp"
#include "muse/eval/evaluation.hpp"
#include "muse/io/reference.hpp"
#include "muse/symbolic/score.hpp"

namespace muse::pipeline {

enum class FileKind { Audio, Score, Midi, Notes, Unknown };

/// By extension: .wav, .abc/.xml/.musicxml/.mxl, .mid/.midi, .json.
FileKind kind_of(std::string_view file_name);
const char* kind_name(FileKind kind);

/// Parses ABC, MusicXML or compressed MusicXML chosen by the file name.
Score parse_score(std::string_view bytes, std::string_view file_name, Warnings* warnings = nullptr);

/// MIDI or a notes JSON array.
PerformanceNotes parse_performance(std::string_view bytes, std::string_view file_name,
                                   Warnings* warnings = nullptr);

nlohmann::json notes_to_json(const PerformanceNotes& notes);
PerformanceNotes notes_from_json(const nlohmann::json& j);

struct AnalysisOptions {
    double tempo_bpm = 120.0;  // nominal tempo of the score
    align::SymbolicAlignOptions symbolic;
    align::AudioAlignOptions audio;
    align::BankOptions bank;
    dsp::TranscriberOptions transcriber;
};

/// Transcribes the recording, trains the observation bank on the synthesized
/// reference plus the recording's own energy-labelled frames, and aligns.
struct AudioAnalysis {
    dsp::Transcription transcription;
    align::AlignmentResult alignment;
};
AudioAnalysis analyze_audio(const ReferenceEvents& reference, const dsp::AudioBuffer& audio,
                            const AnalysisOptions& options = {}, Warnings* warnings = nullptr);

/// A performance file: audio goes through transcription and the audio
/// aligner; MIDI and notes JSON through the symbolic aligner.
align::AlignmentResult align_file(const ReferenceEvents& reference, std::string_view bytes,
                                  std::string_view file_name, const AnalysisOptions& options = {},
                                  Warnings* warnings = nullptr);

}  // namespace muse::pipeline
