#pragma once

#include <cstdint>
#include <vector>

#include "muse/common/error.hpp"
#include "muse/dsp/matrix.hpp"

namespace muse::align {

using dsp::Matrix;
using dsp::Vector;

/// Diagonal-covariance Gaussian mixture.
struct GmmParams {
    Vector weights;     // K, sums to 1
    Matrix means;       // K × D
    Matrix variances;   // K × D, at or above the floor

    int components() const { return static_cast<int>(weights.size()); }
    int dims() const { return static_cast<int>(means.cols()); }
};

/// log Σ_k w_k Π_d N(x_d; μ_kd, σ²_kd), evaluated with log-sum-exp.
/// Errors: DimensionMismatch.
double gmm_log_density(const GmmParams& params, const Vector& x);

/// Row-wise log densities of a T × D matrix.
Vector gmm_log_density(const GmmParams& params, const Matrix& frames);

struct GmmOptions {
    int components = 8;
    int max_iterations = 100;
    double tolerance = 1e-6;       // relative change of the total log-likelihood
    double variance_floor = 1e-6;
    std::uint64_t seed = 0;
};

struct GmmFit {
    GmmParams params;
    // Total log-likelihood of the data after initialisation and after each
    // EM iteration.
    std::vector<double> log_likelihood;
    int iterations = 0;
    bool converged = false;
};

/// EM from a seeded k-means++ initialisation. Identical frames (or fewer
/// distinct frames than components) fall back to fewer components with a
/// warning. Errors: InvalidArgument (fewer frames than components).
GmmFit fit_gmm(const Matrix& frames, const GmmOptions& options = {}, Warnings* warnings = nullptr);

}  // namespace muse::align
