#pragma once

#include <vector>

namespace muse {

/// A played note in seconds, from MIDI or transcription.
struct PerformanceNote {
    int pitch = 60;
    double onset_sec = 0.0;
    double offset_sec = 0.0;
    int velocity = 80;
};

using PerformanceNotes = std::vector<PerformanceNote>;

/// Orders by onset, then pitch.
void sort_notes(PerformanceNotes& notes);

}  // namespace muse
