#pragma once

#include <vector>

#include "muse/dsp/matrix.hpp"

namespace muse::align {

struct ViterbiResult {
    std::vector<int> path;
    double log_prob = 0.0;
};

/// Most probable state sequence of a dense HMM given per-frame observation
/// log-likelihoods (T × S), initial log-probabilities (S) and transition
/// log-probabilities (S × S, row = from). Ties go to the smaller state index
/// at every backtrack step. Errors: DimensionMismatch, NoFeasiblePath.
ViterbiResult viterbi(const dsp::Matrix& log_obs, const dsp::Vector& log_init, const dsp::Matrix& log_trans);

/// A model spelled out as dense matrices, used to cross-check the
/// structured decoders on small inputs.
struct DenseModel {
    dsp::Matrix log_obs;
    dsp::Vector log_init;
    dsp::Matrix log_trans;
};

}  // namespace muse::align
