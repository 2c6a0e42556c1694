#include "muse/dsp/cqt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace muse::dsp {

double CqtConfig::frequency(int bin) const {
    return f_min * std::pow(2.0, static_cast<double>(bin) / bins_per_octave);
}

double CqtConfig::q() const { return 1.0 / (std::pow(2.0, 1.0 / bins_per_octave) - 1.0); }

int CqtConfig::kernel_length(int bin) const {
    return static_cast<int>(std::ceil(q() * sample_rate / frequency(bin)));
}

namespace {

struct Kernel {
    std::vector<double> re;
    std::vector<double> im;
};

std::vector<Kernel> make_kernels(const CqtConfig& config) {
    std::vector<Kernel> kernels(static_cast<size_t>(config.bins));
    for (int k = 0; k < config.bins; ++k) {
        const int n_k = config.kernel_length(k);
        const double f = config.frequency(k);
        Kernel& kern = kernels[static_cast<size_t>(k)];
        kern.re.resize(static_cast<size_t>(n_k));
        kern.im.resize(static_cast<size_t>(n_k));
        const double center = (n_k - 1) / 2.0;
        for (int n = 0; n < n_k; ++n) {
            const double w = n_k > 1 ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / (n_k - 1)) : 1.0;
            const double phase = -2.0 * std::numbers::pi * f * (n - center) / config.sample_rate;
            kern.re[static_cast<size_t>(n)] = w * std::cos(phase) / n_k;
            kern.im[static_cast<size_t>(n)] = w * std::sin(phase) / n_k;
        }
    }
    return kernels;
}

}  // namespace

Matrix cqt_magnitude(const AudioBuffer& audio, const CqtConfig& config, Warnings* warnings) {
    if (audio.samples.empty()) throw Error(ErrorCode::EmptyAudio, "no samples to analyse");
    if (std::abs(audio.sample_rate - config.sample_rate) > 1e-9)
        throw Error(ErrorCode::InvalidArgument, "audio at " + std::to_string(audio.sample_rate) +
                                                    " Hz; resample to " + std::to_string(config.sample_rate) +
                                                    " Hz first");
    if (config.frequency(config.bins - 1) >= config.sample_rate / 2)
        throw Error(ErrorCode::InvalidArgument, "highest CQT bin is above the Nyquist frequency");
    const int longest = config.kernel_length(0);
    if (static_cast<long long>(audio.samples.size()) < longest)
        warn(warnings, "audio shorter than the longest CQT kernel (" + std::to_string(longest) +
                           " samples); zero-padded");

    const auto kernels = make_kernels(config);
    const auto len = static_cast<long long>(audio.samples.size());
    const long long frames = len / config.hop + 1;
    Matrix out(frames, config.bins);
    const double* x = audio.samples.data();
    for (long long t = 0; t < frames; ++t) {
        const long long center = t * config.hop;
        for (int k = 0; k < config.bins; ++k) {
            const Kernel& kern = kernels[static_cast<size_t>(k)];
            const auto n_k = static_cast<long long>(kern.re.size());
            const long long start = center - (n_k - 1) / 2;
            // Only the part of the kernel overlapping the signal contributes.
            const long long lo = std::max<long long>(0, -start);
            const long long hi = std::min<long long>(n_k, len - start);
            double re = 0.0, im = 0.0;
            for (long long n = lo; n < hi; ++n) {
                const double v = x[start + n];
                re += v * kern.re[static_cast<size_t>(n)];
                im += v * kern.im[static_cast<size_t>(n)];
            }
            out(t, k) = std::hypot(re, im);
        }
    }
    return out;
}

FeatureMatrix compute_cqt(const AudioBuffer& audio, const CqtConfig& config, Warnings* warnings) {
    FeatureMatrix f;
    f.values = cqt_magnitude(audio, config, warnings).unaryExpr([&](double m) {
        return std::log10(std::max(m, config.floor));
    });
    f.frame_period = config.frame_period();
    return f;
}

}  // namespace muse::dsp
