#pragma once

#include <map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "muse/io/performance.hpp"
#include "muse/io/reference.hpp"

namespace muse::align {

/// Partition of performed notes and score events. Every performance index
/// is in exactly one of matched/extra and every score index in exactly one
/// of matched/missing. A chord event counts as matched when at least half
/// (rounded up) of its pitches were played.
struct Correspondences {
    std::vector<std::pair<int, int>> matched;  // (performance index, score index), by score index
    std::vector<int> missing;                  // score indices
    std::vector<int> extra;                    // performance indices
    std::map<int, std::vector<int>> absent_pitches;  // matched chords played incompletely
};

struct AlignmentResult {
    std::vector<int> path;  // state per frame (audio) or per performed note (symbolic)
    Correspondences correspondences;
    std::map<int, double> onsets_sec;  // aligned onset per reached score event
    double log_prob = 0.0;
    PerformanceNotes performance;  // the notes performance indices refer to
};

/// Where the decoder placed one performed note: a score event, or an
/// insertion (score_index < 0).
struct NoteAssignment {
    int score_index = -1;
};

/// Builds the correspondence partition from per-note assignments. A note
/// assigned to an event whose pitch set lacks it, or duplicating a pitch
/// already matched there, becomes extra; notes of events that end up below
/// the chord threshold become extra as well.
Correspondences extract_correspondences(const std::vector<NoteAssignment>& assignments,
                                        const PerformanceNotes& performance, const ReferenceEvents& reference);

nlohmann::json to_json(const AlignmentResult& result);
AlignmentResult alignment_from_json(const nlohmann::json& j);

}  // namespace muse::align
