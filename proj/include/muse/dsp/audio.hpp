#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "muse/common/error.hpp"
#include "muse/io/performance.hpp"

namespace muse::dsp {

inline constexpr double kAnalysisRate = 16000.0;

struct AudioBuffer {
    std::vector<double> samples;  // mono, in [-1, 1]
    double sample_rate = kAnalysisRate;

    double duration() const { return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0; }
};

/// Decodes RIFF/WAVE (PCM 8/16/24/32-bit or IEEE float 32/64, any channel
/// count) and averages channels, keeping the file's sample rate.
/// Errors: UnsupportedCodec, EmptyAudio.
AudioBuffer decode_wav(std::string_view bytes);

/// decode_wav followed by resampling to 16 kHz.
AudioBuffer load_wav(std::string_view bytes);
AudioBuffer load_wav_file(const std::filesystem::path& path);

/// 16-bit PCM mono WAV.
std::string encode_wav(const AudioBuffer& audio);

/// Band-limited (Hann-windowed sinc) resampling; output clipped to [-1, 1].
AudioBuffer resample(const AudioBuffer& audio, double target_rate);

struct SynthOptions {
    double sample_rate = kAnalysisRate;
    double amplitude = 0.25;   // per note at velocity 127
    double ramp_sec = 0.01;    // raised-cosine attack and release
    int harmonics = 1;         // 1 = pure sine; k-th partial has amplitude 1/k
    double tail_sec = 0.25;    // silence appended after the last offset
};

/// Additive sine rendering of performance notes.
AudioBuffer synthesize(const PerformanceNotes& notes, const SynthOptions& options = {});

}  // namespace muse::dsp
