#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "muse/align/gmm.hpp"
#include "muse/align/hmm.hpp"
#include "muse/align/result.hpp"
#include "muse/align/viterbi.hpp"
#include "muse/dsp/pca.hpp"
#include "muse/dsp/transcribe.hpp"

namespace muse::align {

/// Observation model of the audio aligner: a PCA projection of log-CQT
/// frames and one mixture per coarse class (sounding, silent).
struct GmmBank {
    dsp::PcaModel pca;
    GmmParams sound;
    GmmParams silence;
};

/// Log-CQT frames with a sounding/silent label per frame.
struct LabeledFrames {
    Matrix cqt;
    std::vector<bool> sounding;
};

struct BankOptions {
    int pca_dims = 30;
    int components = 8;
    double variance_floor = 1e-2;
    std::uint64_t seed = 0;
};

/// Fits the PCA on every frame, then one GMM per class. A class with fewer
/// frames than components gets fewer components (warned).
/// Errors: InvalidArgument (a class without frames).
GmmBank train_gmm_bank(const std::vector<LabeledFrames>& data, const BankOptions& options = {},
                       Warnings* warnings = nullptr);

/// Synthesizes the reference (after `lead_sec` of silence) and labels each
/// frame by whether a note sounds at its centre.
LabeledFrames reference_frames(const ReferenceEvents& reference, const dsp::CqtConfig& config = {},
                               double lead_sec = 0.5);

/// Labels frames whose loudest bin is within `range` (log10) of the
/// recording's loudest bin as sounding.
LabeledFrames energy_frames(const dsp::FeatureMatrix& features, double range = 2.0);

nlohmann::json to_json(const GmmBank& bank);
GmmBank gmm_bank_from_json(const nlohmann::json& j);

struct AudioAlignOptions {
    TransitionParams transitions;
    double silence_prob = 0.02;      // leaving a sustain into silence
    double silence_self = 0.98;
    double sustain_sound_prob = 0.8;  // sustain frames may decay into silence
    double template_weight = 10.0;
    double onset_weight = 1.0;       // only with a transcription
    double onset_floor = 0.05;
    double match_tolerance_sec = 0.1;
};

/// Frame-level Viterbi over the flattened two-layer model. State 2j is the
/// onset of event j, 2j+1 its sustain, 2N the shared silence. The onset
/// state lasts one frame; the sustain dwell follows the event's nominal
/// inter-onset interval. Sounding states score the frame with the sound
/// GMM plus a harmonic-template match against the event's pitches.
///
/// With a transcription, its onset activations sharpen onset states and its
/// notes become the performance: each note is matched to a visited event of
/// the same pitch within the tolerance. Without one, the decoded segments
/// themselves are the performance. Errors: InvalidArgument (empty
/// reference), DimensionMismatch, ShapeMismatch.
AlignmentResult align_audio(const dsp::FeatureMatrix& features, const ReferenceEvents& reference,
                            const GmmBank& bank, const AudioAlignOptions& options = {},
                            const dsp::Transcription* transcription = nullptr);

DenseModel audio_dense_model(const dsp::FeatureMatrix& features, const ReferenceEvents& reference,
                             const GmmBank& bank, const AudioAlignOptions& options = {},
                             const dsp::Transcription* transcription = nullptr);

}  // namespace muse::align
