#pragma once

#include "muse/align/hmm.hpp"
#include "muse/align/result.hpp"
#include "muse/align/viterbi.hpp"

namespace muse::align {

struct SymbolicAlignOptions {
    TransitionParams transitions;
    double extra_prob = 0.05;    // chance that the next performed note is an insertion
    double mismatch_eps = 1e-3;  // emission of a pitch outside the event's set
    double extra_eps = 1e-2;     // emission of an inserted note
    double absent_prob = 0.2;    // per event pitch missing from the observed group
    double chord_window_sec = 0.035;  // onsets this close form one observation
};

/// Note-clocked alignment of a performance against the reference. Notes
/// struck together (within the chord window) form one observation, emitted
/// either by a score event or by an insertion state attached to the last
/// visited position. State s < N is event s; state N + p is the insertion
/// state after p events. Returning to the current event can only add
/// extra notes, so the self-loop mass of A feeds the insertion state.
/// The result path has one state per performed note.
/// Errors: InvalidArgument (empty reference).
AlignmentResult align_symbolic(const PerformanceNotes& performance, const ReferenceEvents& reference,
                               const SymbolicAlignOptions& options = {});

/// The same model as dense matrices (one row per note group), for
/// cross-checking the decoder.
DenseModel symbolic_dense_model(const PerformanceNotes& performance, const ReferenceEvents& reference,
                                const SymbolicAlignOptions& options = {});

}  // namespace muse::align
