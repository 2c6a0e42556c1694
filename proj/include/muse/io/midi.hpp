#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "muse/common/error.hpp"
#include "muse/io/performance.hpp"

namespace muse::io {

/// Decodes a format 0 or 1 Standard MIDI File. Note-ons are paired with
/// note-offs first in, first out per channel and pitch; the tempo map is
/// applied to produce seconds. Channel 10 (percussion) is skipped. Notes
/// still sounding at the end of their track are closed there with a warning.
/// Errors: TruncatedFile, UnsupportedLayout (format 2 or not an SMF).
PerformanceNotes parse_midi(std::string_view bytes, Warnings* warnings = nullptr);

/// Writes a format 0 file with a single tempo. Onsets and offsets are
/// quantized to the nearest tick; a note never becomes shorter than a tick.
std::string export_midi(const PerformanceNotes& notes, int ppq = 480, double tempo_bpm = 120.0);

PerformanceNotes load_midi(const std::filesystem::path& path, Warnings* warnings = nullptr);

}  // namespace muse::io
