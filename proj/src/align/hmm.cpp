#include "muse/align/hmm.hpp"

#include <cmath>
#include <limits>

#include "muse/common/error.hpp"

namespace muse::align {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Σ_{d=1..n} r^(d-1)
double geometric_sum(double r, int n) {
    if (n <= 0) return 0.0;
    if (r == 1.0) return n;
    return (1.0 - std::pow(r, n)) / (1.0 - r);
}

}  // namespace

HmmModel::HmmModel(int events, TransitionParams params) : n_(events), params_(params) {
    if (events < 1) throw Error(ErrorCode::InvalidArgument, "the alignment model needs at least one score event");
    const double r = params.ratio;
    if (!(r > 0.0 && r < 1.0)) throw Error(ErrorCode::InvalidArgument, "transition ratio must be in (0, 1)");
    log_z_.resize(static_cast<size_t>(n_ + 1));
    for (int i = -1; i < n_; ++i) {
        double z = 0.0;
        if (i >= 0) z += params.self;
        if (i + 1 < n_) z += params.forward;
        // skips reach i+2 .. N-1, backward jumps reach 0 .. i-1
        z += params.skip * (1.0 - r) * geometric_sum(r, n_ - 1 - (i + 1));
        if (i >= 0) z += params.backward * (1.0 - r) * geometric_sum(r, i);
        log_z_[static_cast<size_t>(i + 1)] = z > 0.0 ? std::log(z) : 0.0;
    }
}

double HmmModel::log_weight(int from, int to) const {
    const int d = to - from;
    const double r = params_.ratio;
    double w;
    if (d == 0) w = from >= 0 ? params_.self : 0.0;
    else if (d == 1) w = params_.forward;
    else if (d >= 2) w = params_.skip * (1.0 - r) * std::pow(r, d - 2);
    else w = from >= 0 ? params_.backward * (1.0 - r) * std::pow(r, -d - 1) : 0.0;
    return w > 0.0 ? std::log(w) : kNegInf;
}

double HmmModel::log_transition(int from, int to) const {
    if (from < -1 || from >= n_ || to < 0 || to >= n_)
        throw Error(ErrorCode::InvalidArgument, "transition index out of range");
    return log_weight(from, to) - log_normalizer(from);
}

dsp::Matrix HmmModel::dense() const {
    dsp::Matrix a(n_, n_);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) a(i, j) = std::exp(log_transition(i, j));
    return a;
}

HmmModel build_hmm(const ReferenceEvents& reference, const TransitionParams& params) {
    return HmmModel(static_cast<int>(reference.events.size()), params);
}

}  // namespace muse::align
