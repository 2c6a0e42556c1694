#pragma once

#include "muse/dsp/cqt.hpp"
#include "muse/io/performance.hpp"

namespace muse::dsp {

inline constexpr int kLowestPitch = 21;  // MIDI number of bin 0

/// Notes from onset and frame activations (T × 88, values in [0,1]). A note
/// starts at an onset frame at or above threshold that is a local maximum
/// over ±1 frame, lasts while frames stay at or above threshold and ends at
/// the first inactive frame or the next onset of the same pitch.
/// Errors: ShapeMismatch.
PerformanceNotes activations_to_notes(const Matrix& onsets, const Matrix& frames, double threshold = 0.5,
                                      double frame_period = 0.032);

struct TranscriberOptions {
    double threshold = 0.5;
    double delta = 0.05;            // flux peak offset above the local mean
    double mean_window_sec = 0.5;   // centered local-mean window
    double min_ioi_sec = 0.05;      // per pitch
    double dynamic_range = 2.0;     // log10 units below the loudest bin mapped to [0,1]
    double peak_range = 1.0;        // bins further below their frame peak are masked
    double silence_level = -4.0;    // log10 magnitude below which a bin is silent
    double rearticulation_dip = 0.02;  // log10 dip marking a repeated note
};

struct Transcription {
    FeatureMatrix features;
    Matrix onsets;
    Matrix frames;
    PerformanceNotes notes;
};

/// Deterministic DSP transcriber behind the onset/frame activation contract.
Transcription baseline_transcribe(const AudioBuffer& audio, const TranscriberOptions& options = {},
                                  const CqtConfig& config = {}, Warnings* warnings = nullptr);

}  // namespace muse::dsp
