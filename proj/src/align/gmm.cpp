#include "muse/align/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace muse::align {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const Vector& v) {
    const double m = v.maxCoeff();
    if (m == kNegInf) return kNegInf;
    return m + std::log((v.array() - m).exp().sum());
}

// Per-component log(w_k) + log N(x; μ_k, σ²_k) for every row, T × K.
Matrix component_log_terms(const GmmParams& p, const Matrix& x) {
    const Eigen::Index K = p.weights.size();
    Matrix out(x.rows(), K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const Eigen::RowVectorXd var = p.variances.row(k);
        const double log_norm = -0.5 * (var.array() * 2.0 * std::numbers::pi).log().sum();
        const double log_w = p.weights(k) > 0 ? std::log(p.weights(k)) : kNegInf;
        const Eigen::RowVectorXd inv = var.cwiseInverse();
        for (Eigen::Index t = 0; t < x.rows(); ++t) {
            const double maha = ((x.row(t) - p.means.row(k)).array().square() * inv.array()).sum();
            out(t, k) = log_w + log_norm - 0.5 * maha;
        }
    }
    return out;
}

}  // namespace

double gmm_log_density(const GmmParams& params, const Vector& x) {
    if (x.size() != params.means.cols())
        throw Error(ErrorCode::DimensionMismatch, "vector has " + std::to_string(x.size()) + " dims, mixture has " +
                                                      std::to_string(params.means.cols()));
    const Matrix row = x.transpose();
    return log_sum_exp(component_log_terms(params, row).row(0).transpose());
}

Vector gmm_log_density(const GmmParams& params, const Matrix& frames) {
    if (frames.cols() != params.means.cols())
        throw Error(ErrorCode::DimensionMismatch, "frames have " + std::to_string(frames.cols()) +
                                                      " dims, mixture has " + std::to_string(params.means.cols()));
    const Matrix terms = component_log_terms(params, frames);
    Vector out(frames.rows());
    for (Eigen::Index t = 0; t < frames.rows(); ++t) out(t) = log_sum_exp(terms.row(t).transpose());
    return out;
}

GmmFit fit_gmm(const Matrix& x, const GmmOptions& opt, Warnings* warnings) {
    const Eigen::Index T = x.rows(), D = x.cols();
    if (opt.components <= 0) throw Error(ErrorCode::InvalidArgument, "need at least one component");
    if (T < opt.components)
        throw Error(ErrorCode::InvalidArgument, std::to_string(T) + " frames cannot support " +
                                                    std::to_string(opt.components) + " components");

    // k-means++ seeding. Seeds stop early when every remaining frame
    // coincides with an existing seed.
    std::mt19937_64 rng(opt.seed);
    std::vector<Eigen::Index> seeds{std::uniform_int_distribution<Eigen::Index>(0, T - 1)(rng)};
    Vector nearest = (x.rowwise() - x.row(seeds[0])).rowwise().squaredNorm();
    while (static_cast<int>(seeds.size()) < opt.components) {
        const double total = nearest.sum();
        if (!(total > 0.0)) break;
        double r = std::uniform_real_distribution<double>(0.0, total)(rng);
        Eigen::Index pick = T - 1;
        for (Eigen::Index t = 0; t < T; ++t) {
            r -= nearest(t);
            if (r < 0.0 && nearest(t) > 0.0) {
                pick = t;
                break;
            }
        }
        seeds.push_back(pick);
        nearest = nearest.cwiseMin((x.rowwise() - x.row(pick)).rowwise().squaredNorm());
    }
    const auto K = static_cast<Eigen::Index>(seeds.size());
    if (K < opt.components)
        warn(warnings, "only " + std::to_string(K) + " distinct frame(s); mixture reduced from " +
                           std::to_string(opt.components) + " to " + std::to_string(K) + " component(s)");

    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::RowVectorXd var =
        ((x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(T)).matrix().cwiseMax(opt.variance_floor);

    GmmFit fit;
    GmmParams& p = fit.params;
    p.weights = Vector::Constant(K, 1.0 / static_cast<double>(K));
    p.means.resize(K, D);
    p.variances.resize(K, D);
    for (Eigen::Index k = 0; k < K; ++k) {
        p.means.row(k) = x.row(seeds[static_cast<size_t>(k)]);
        p.variances.row(k) = var;
    }

    Matrix resp(T, K);
    const auto e_step = [&]() {
        const Matrix terms = component_log_terms(p, x);
        double ll = 0.0;
        for (Eigen::Index t = 0; t < T; ++t) {
            const double norm = log_sum_exp(terms.row(t).transpose());
            ll += norm;
            resp.row(t) = (terms.row(t).array() - norm).exp();
        }
        return ll;
    };

    double ll = e_step();
    fit.log_likelihood.push_back(ll);
    for (int it = 0; it < opt.max_iterations; ++it) {
        // M-step; an emptied component keeps its mean and variance with zero weight.
        const Vector nk = resp.colwise().sum().transpose();
        for (Eigen::Index k = 0; k < K; ++k) {
            p.weights(k) = nk(k) / static_cast<double>(T);
            if (nk(k) <= 1e-300) continue;
            const Eigen::RowVectorXd mu = (resp.col(k).transpose() * x) / nk(k);
            const Eigen::RowVectorXd v =
                (resp.col(k).transpose() * (x.rowwise() - mu).array().square().matrix()) / nk(k);
            p.means.row(k) = mu;
            p.variances.row(k) = v.cwiseMax(opt.variance_floor);
        }
        p.weights /= p.weights.sum();
        const double next = e_step();
        fit.log_likelihood.push_back(next);
        fit.iterations = it + 1;
        const double change = std::abs(next - ll) / std::max(std::abs(ll), 1e-300);
        ll = next;
        if (change < opt.tolerance) {
            fit.converged = true;
            break;
        }
    }
    return fit;
}

}  // namespace muse::align
