#include "muse/dsp/transcribe.hpp"

#include <algorithm>
#include <cmath>

namespace muse::dsp {

PerformanceNotes activations_to_notes(const Matrix& onsets, const Matrix& frames, double threshold,
                                      double frame_period) {
    if (onsets.rows() != frames.rows() || onsets.cols() != frames.cols())
        throw Error(ErrorCode::ShapeMismatch, "onset matrix is " + std::to_string(onsets.rows()) + "x" +
                                                  std::to_string(onsets.cols()) + ", frame matrix is " +
                                                  std::to_string(frames.rows()) + "x" + std::to_string(frames.cols()));
    const Eigen::Index T = onsets.rows();
    PerformanceNotes notes;
    for (Eigen::Index k = 0; k < onsets.cols(); ++k) {
        // Accepted onset frames for this pitch, in time order.
        std::vector<Eigen::Index> starts;
        for (Eigen::Index t = 0; t < T; ++t) {
            const double o = onsets(t, k);
            if (o < threshold) continue;
            // On a plateau only the first frame counts.
            if (t > 0 && onsets(t - 1, k) >= o) continue;
            if (t + 1 < T && onsets(t + 1, k) > o) continue;
            starts.push_back(t);
        }
        for (size_t i = 0; i < starts.size(); ++i) {
            const Eigen::Index begin = starts[i];
            const Eigen::Index limit = i + 1 < starts.size() ? starts[i + 1] : T;
            Eigen::Index end = begin + 1;
            while (end < limit && frames(end, k) >= threshold) ++end;
            notes.push_back({kLowestPitch + static_cast<int>(k), static_cast<double>(begin) * frame_period,
                             static_cast<double>(end) * frame_period, 80});
        }
    }
    sort_notes(notes);
    return notes;
}

namespace {

// Loudness relative to the recording's loudest bin, mapped to [0,1], kept
// only where the bin is a spectral peak close to its frame's strongest bin.
// Masking keeps window leakage and neighbouring-bin smear from becoming notes.
Matrix frame_activations(const Matrix& log_mag, const TranscriberOptions& opt) {
    const double global_max = log_mag.maxCoeff();
    const double floor = global_max - opt.dynamic_range;
    Matrix act = Matrix::Zero(log_mag.rows(), log_mag.cols());
    for (Eigen::Index t = 0; t < log_mag.rows(); ++t) {
        const double frame_max = log_mag.row(t).maxCoeff();
        for (Eigen::Index k = 0; k < log_mag.cols(); ++k) {
            const double v = log_mag(t, k);
            if (v <= opt.silence_level || v < frame_max - opt.peak_range) continue;
            if (k > 0 && log_mag(t, k - 1) > v) continue;
            if (k + 1 < log_mag.cols() && log_mag(t, k + 1) > v) continue;
            act(t, k) = std::clamp((v - floor) / opt.dynamic_range, 0.0, 1.0);
        }
    }
    // A three-frame median drops one-frame blips at note boundaries, where
    // truncated windows smear energy across bins; steps pass unchanged.
    Matrix smooth = act;
    for (Eigen::Index t = 1; t + 1 < act.rows(); ++t)
        for (Eigen::Index k = 0; k < act.cols(); ++k) {
            double a = act(t - 1, k), b = act(t, k), c = act(t + 1, k);
            smooth(t, k) = std::max(std::min(a, b), std::min(std::max(a, b), c));
        }
    return smooth;
}

Matrix onset_activations(const Matrix& act, double frame_period, const TranscriberOptions& opt) {
    const Eigen::Index T = act.rows(), K = act.cols();
    Matrix flux = Matrix::Zero(T, K);
    for (Eigen::Index t = 0; t < T; ++t)
        for (Eigen::Index k = 0; k < K; ++k) {
            const double prev = t > 0 ? act(t - 1, k) : 0.0;
            flux(t, k) = std::max(0.0, act(t, k) - prev);
        }
    const double peak = flux.size() ? flux.maxCoeff() : 0.0;
    if (peak <= 0.0) return Matrix::Zero(T, K);
    flux /= peak;

    const auto half = static_cast<Eigen::Index>(std::lround(opt.mean_window_sec / frame_period / 2.0));
    const auto min_gap = static_cast<Eigen::Index>(std::ceil(opt.min_ioi_sec / frame_period));
    // Non-peaks stay strictly below the threshold, picked peaks land at or above it.
    Matrix onsets = flux * (opt.threshold * 0.98);
    for (Eigen::Index k = 0; k < K; ++k) {
        Eigen::Index last = -min_gap - 1;
        for (Eigen::Index t = 0; t < T; ++t) {
            const double v = flux(t, k);
            if (v <= 0.0) continue;
            if (t > 0 && flux(t - 1, k) >= v) continue;
            if (t + 1 < T && flux(t + 1, k) > v) continue;
            const Eigen::Index lo = std::max<Eigen::Index>(0, t - half);
            const Eigen::Index hi = std::min<Eigen::Index>(T - 1, t + half);
            const double local_mean = flux.col(k).segment(lo, hi - lo + 1).mean();
            if (v < local_mean + opt.delta) continue;
            if (t - last < min_gap) continue;
            onsets(t, k) = opt.threshold + (1.0 - opt.threshold) * v;
            last = t;
        }
    }
    return onsets;
}

// A one-frame dip inside a sounding pitch is a re-attack of the same pitch,
// which the flux (taken after median smoothing) cannot see. Dips must stand
// out against the bin's typical frame-to-frame jitter while active.
void add_rearticulations(const Matrix& log_mag, const Matrix& frames, double frame_period,
                         const TranscriberOptions& opt, Matrix& onsets) {
    const Eigen::Index T = log_mag.rows(), K = log_mag.cols();
    const auto min_gap = static_cast<Eigen::Index>(std::ceil(opt.min_ioi_sec / frame_period));
    for (Eigen::Index k = 0; k < K; ++k) {
        std::vector<double> jitter;
        for (Eigen::Index t = 1; t < T; ++t)
            if (frames(t, k) >= opt.threshold && frames(t - 1, k) >= opt.threshold)
                jitter.push_back(std::abs(log_mag(t, k) - log_mag(t - 1, k)));
        if (jitter.empty()) continue;
        std::nth_element(jitter.begin(), jitter.begin() + static_cast<std::ptrdiff_t>(jitter.size() / 2), jitter.end());
        const double required = std::max(opt.rearticulation_dip, 5.0 * jitter[jitter.size() / 2]);
        for (Eigen::Index t = 1; t + 1 < T; ++t) {
            if (frames(t - 1, k) < opt.threshold || frames(t + 1, k) < opt.threshold) continue;
            const double depth = std::min(log_mag(t - 1, k), log_mag(t + 1, k)) - log_mag(t, k);
            if (depth < required) continue;
            const Eigen::Index lo = std::max<Eigen::Index>(0, t - min_gap + 1);
            const Eigen::Index hi = std::min<Eigen::Index>(T - 1, t + min_gap - 1);
            if (onsets.col(k).segment(lo, hi - lo + 1).maxCoeff() >= opt.threshold) continue;
            onsets(t, k) = opt.threshold + (1.0 - opt.threshold) * std::min(1.0, depth / (2.5 * opt.rearticulation_dip));
        }
    }
}

}  // namespace

Transcription baseline_transcribe(const AudioBuffer& audio, const TranscriberOptions& options,
                                  const CqtConfig& config, Warnings* warnings) {
    Transcription out;
    out.features = compute_cqt(audio, config, warnings);
    out.frames = frame_activations(out.features.values, options);
    out.onsets = onset_activations(out.frames, out.features.frame_period, options);
    add_rearticulations(out.features.values, out.frames, out.features.frame_period, options, out.onsets);
    out.notes = activations_to_notes(out.onsets, out.frames, options.threshold, out.features.frame_period);
    return out;
}

}  // namespace muse::dsp
