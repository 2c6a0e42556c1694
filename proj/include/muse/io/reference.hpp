#pragma once

#include <vector>

#include "muse/io/performance.hpp"
#include "muse/symbolic/score.hpp"

namespace muse {

/// One score position: every note struck at the same instant, across voices.
struct ReferenceEvent {
    int score_index = 0;
    int measure_index = 0;
    double onset_beats = 0.0;  // quarter-note beats from the start
    double onset_sec = 0.0;    // at the nominal tempo
    std::vector<int> pitches;  // ascending, distinct
    std::vector<double> durations_beats;  // parallel to pitches
};

struct ReferenceEvents {
    double tempo_bpm = 120.0;
    int measure_count = 0;
    std::vector<ReferenceEvent> events;

    double seconds_per_beat() const { return 60.0 / tempo_bpm; }
};

/// Unrolls repeats, merges ties and groups simultaneous notes into events.
/// Throws InvalidArgument for a non-positive tempo.
ReferenceEvents score_to_reference(const Score& score, double tempo_bpm);

/// Plays the reference back at its nominal tempo (velocity 80).
PerformanceNotes render(const ReferenceEvents& reference);

}  // namespace muse
