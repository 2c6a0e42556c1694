#pragma once

#include <vector>

#include "muse/dsp/matrix.hpp"
#include "muse/io/reference.hpp"

namespace muse::align {

/// Unnormalised top-layer transition weights between score positions.
struct TransitionParams {
    double forward = 0.85;   // i -> i+1
    double self = 0.05;      // i -> i
    double skip = 0.07;      // total for i -> i+d, d >= 2
    double backward = 0.03;  // total for i -> i-d, d >= 1
    double ratio = 0.5;      // geometric decay per extra step
};

/// Top layer of the alignment model over N score events. Rows are
/// renormalised where the sequence ends cut options off. Position -1 is
/// the virtual start: forward into event 0 or skip further in.
class HmmModel {
public:
    HmmModel(int events, TransitionParams params);

    int events() const { return n_; }
    const TransitionParams& params() const { return params_; }

    /// log A(from, to) for from in [-1, N), to in [0, N).
    double log_transition(int from, int to) const;
    /// log of the row normaliser of `from`; log A = log weight - this.
    double log_normalizer(int from) const { return log_z_[static_cast<size_t>(from + 1)]; }
    double log_weight(int from, int to) const;

    /// Dense N × N matrix of probabilities (rows from, columns to).
    dsp::Matrix dense() const;

private:
    int n_;
    TransitionParams params_;
    std::vector<double> log_z_;
};

HmmModel build_hmm(const ReferenceEvents& reference, const TransitionParams& params = {});

}  // namespace muse::align
