#include "muse/pipeline/analysis.hpp"

#include <algorithm>
#include <cctype>

#include "muse/common/error.hpp"
#include "muse/io/midi.hpp"
#include "muse/io/musicxml.hpp"
#include "muse/symbolic/abc.hpp"

namespace muse::pipeline {

namespace {

std::string extension(std::string_view name) {
    const auto dot = name.rfind('.');
    if (dot == std::string_view::npos) return "";
    std::string ext(name.substr(dot));
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

}  // namespace

FileKind kind_of(std::string_view file_name) {
    const std::string ext = extension(file_name);
    if (ext == ".wav") return FileKind::Audio;
    if (ext == ".abc" || ext == ".xml" || ext == ".musicxml" || ext == ".mxl") return FileKind::Score;
    if (ext == ".mid" || ext == ".midi") return FileKind::Midi;
    if (ext == ".json") return FileKind::Notes;
    return FileKind::Unknown;
}

const char* kind_name(FileKind kind) {
    switch (kind) {
        case FileKind::Audio: return "audio";
        case FileKind::Score: return "score";
        case FileKind::Midi: return "midi";
        case FileKind::Notes: return "notes";
        default: return "unknown";
    }
}

Score parse_score(std::string_view bytes, std::string_view file_name, Warnings* warnings) {
    const std::string ext = extension(file_name);
    if (ext == ".abc") return abc::parse(bytes);
    if (ext == ".mxl") return io::parse_musicxml(io::extract_mxl(bytes), warnings);
    if (ext == ".xml" || ext == ".musicxml") return io::parse_musicxml(bytes, warnings);
    throw Error(ErrorCode::InvalidArgument, "not a score file: " + std::string(file_name));
}

PerformanceNotes parse_performance(std::string_view bytes, std::string_view file_name, Warnings* warnings) {
    switch (kind_of(file_name)) {
        case FileKind::Midi: return io::parse_midi(bytes, warnings);
        case FileKind::Notes:
            try {
                return notes_from_json(nlohmann::json::parse(bytes));
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorCode::InvalidArgument, std::string("malformed notes JSON: ") + e.what());
            }
        default: throw Error(ErrorCode::InvalidArgument, "not a performance file: " + std::string(file_name));
    }
}

nlohmann::json notes_to_json(const PerformanceNotes& notes) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& n : notes)
        j.push_back({{"pitch", n.pitch}, {"onset_sec", n.onset_sec}, {"offset_sec", n.offset_sec}, {"velocity", n.velocity}});
    return j;
}

PerformanceNotes notes_from_json(const nlohmann::json& j) {
    const nlohmann::json& arr = j.is_object() && j.contains("notes") ? j["notes"] : j;
    if (!arr.is_array()) throw Error(ErrorCode::InvalidArgument, "notes JSON must be an array");
    PerformanceNotes notes;
    try {
        for (const auto& n : arr) {
            PerformanceNote p{n.at("pitch"), n.at("onset_sec"), n.at("offset_sec"), n.value("velocity", 80)};
            if (p.pitch < 0 || p.pitch > 127 || p.offset_sec < p.onset_sec)
                throw Error(ErrorCode::InvalidArgument, "note out of range");
            notes.push_back(p);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed note: ") + e.what());
    }
    sort_notes(notes);
    return notes;
}

AudioAnalysis analyze_audio(const ReferenceEvents& reference, const dsp::AudioBuffer& audio,
                            const AnalysisOptions& options, Warnings* warnings) {
    AudioAnalysis out;
    out.transcription = dsp::baseline_transcribe(audio, options.transcriber, {}, warnings);
    const auto bank = align::train_gmm_bank(
        {align::reference_frames(reference), align::energy_frames(out.transcription.features)}, options.bank,
        warnings);
    out.alignment = align::align_audio(out.transcription.features, reference, bank, options.audio, &out.transcription);
    return out;
}

align::AlignmentResult align_file(const ReferenceEvents& reference, std::string_view bytes,
                                  std::string_view file_name, const AnalysisOptions& options, Warnings* warnings) {
    if (kind_of(file_name) == FileKind::Audio)
        return analyze_audio(reference, dsp::load_wav(bytes), options, warnings).alignment;
    return align::align_symbolic(parse_performance(bytes, file_name, warnings), reference, options.symbolic);
}

}  // namespace muse::pipeline
