#pragma once

#include "muse/common/error.hpp"
#include "muse/dsp/audio.hpp"
#include "muse/dsp/matrix.hpp"

namespace muse::dsp {

struct CqtConfig {
    double sample_rate = kAnalysisRate;
    int hop = 512;
    int bins = 88;
    int bins_per_octave = 12;
    double f_min = 27.5;  // A0
    double floor = 1e-5;  // applied before log10

    double frequency(int bin) const;
    double q() const;
    int kernel_length(int bin) const;
    double frame_period() const { return hop / sample_rate; }
};

/// Log-magnitude constant-Q spectrogram, T × bins with T = floor(len/hop)+1.
struct FeatureMatrix {
    Matrix values;
    double frame_period = 0.032;

    Eigen::Index frames() const { return values.rows(); }
};

/// Complex magnitudes before log compression; frame t is centered on sample
/// t·hop and bin k uses a Hann window of Q·fs/f_k samples scaled by 1/N_k.
/// Audio shorter than the longest kernel is zero-padded with a warning.
/// Errors: EmptyAudio, InvalidArgument (sample rate differs from config).
Matrix cqt_magnitude(const AudioBuffer& audio, const CqtConfig& config = {}, Warnings* warnings = nullptr);

/// log10(max(|X|, floor)).
FeatureMatrix compute_cqt(const AudioBuffer& audio, const CqtConfig& config = {}, Warnings* warnings = nullptr);

}  // namespace muse::dsp
