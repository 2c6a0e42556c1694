#include <numbers>
#include <random>

#include "doctest.h"
#include "muse/align/gmm.hpp"

using namespace muse;
using namespace muse::align;

namespace {

GmmParams single(const Vector& mean, const Vector& var) {
    GmmParams p;
    p.weights = Vector::Ones(1);
    p.means = mean.transpose();
    p.variances = var.transpose();
    return p;
}

}  // namespace

TEST_CASE("gmm density: Gaussian at its mean") {
    Vector mu(3), var(3);
    mu << 1.0, -2.0, 0.5;
    var << 0.5, 2.0, 1e-3;
    double expected = 0.0;
    for (int d = 0; d < 3; ++d) expected += -0.5 * std::log(2 * std::numbers::pi * var(d));
    CHECK(gmm_log_density(single(mu, var), mu) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gmm density: duplicated component equals one") {
    Vector mu(2), var(2), x(2);
    mu << 0.3, 0.1;
    var << 0.7, 1.3;
    x << 1.0, -1.0;
    const GmmParams one = single(mu, var);
    GmmParams two;
    two.weights = Vector::Constant(2, 0.5);
    two.means = Matrix(2, 2);
    two.means << mu.transpose(), mu.transpose();
    two.variances = Matrix(2, 2);
    two.variances << var.transpose(), var.transpose();
    CHECK(gmm_log_density(two, x) == doctest::Approx(gmm_log_density(one, x)).epsilon(1e-12));
}

TEST_CASE("gmm density: agrees with naive summation") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2, 2), v(0.2, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        GmmParams p;
        p.weights = Vector(3);
        p.weights << 0.2, 0.5, 0.3;
        p.means = Matrix(3, 2);
        p.variances = Matrix(3, 2);
        for (int k = 0; k < 3; ++k)
            for (int d = 0; d < 2; ++d) {
                p.means(k, d) = u(rng);
                p.variances(k, d) = v(rng);
            }
        Vector x(2);
        x << u(rng), u(rng);
        double sum = 0.0;
        for (int k = 0; k < 3; ++k) {
            double prod = p.weights(k);
            for (int d = 0; d < 2; ++d)
                prod *= std::exp(-0.5 * std::pow(x(d) - p.means(k, d), 2) / p.variances(k, d)) /
                        std::sqrt(2 * std::numbers::pi * p.variances(k, d));
            sum += prod;
        }
        CHECK(gmm_log_density(p, x) == doctest::Approx(std::log(sum)).epsilon(1e-9));
        const Matrix rows = x.transpose();
        CHECK(gmm_log_density(p, rows)(0) == doctest::Approx(std::log(sum)).epsilon(1e-9));
    }
}

TEST_CASE("gmm density: dimension mismatch") {
    const GmmParams p = single(Vector::Zero(3), Vector::Ones(3));
    try {
        gmm_log_density(p, Vector(Vector::Zero(2)));
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
}

TEST_CASE("fit: one tight spherical Gaussian") {
    // Spread 0.05 per coordinate; every component must settle near the mean.
    std::mt19937_64 rng(42);
    std::normal_distribution<double> g(0.0, 0.05);
    Matrix x(2000, 30);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index d = 0; d < 30; ++d) x(i, d) = 1.0 + g(rng);
    const auto fit = fit_gmm(x, {});
    const Eigen::RowVectorXd mean = x.colwise().mean();
    CHECK(fit.params.components() == 8);
    for (int k = 0; k < 8; ++k) CHECK((fit.params.means.row(k) - mean).cwiseAbs().maxCoeff() < 0.1);
    CHECK(fit.params.weights.sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fit: log-likelihood never decreases") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g;
        const int clusters = 1 + static_cast<int>(seed % 4);
        Matrix x(400, 5);
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            for (Eigen::Index d = 0; d < 5; ++d) x(i, d) = 3.0 * static_cast<double>(i % clusters) + g(rng);
        GmmOptions opt;
        opt.seed = seed;
        const auto fit = fit_gmm(x, opt);
        CAPTURE(seed);
        for (size_t i = 1; i < fit.log_likelihood.size(); ++i)
            CHECK(fit.log_likelihood[i] >= fit.log_likelihood[i - 1] - 1e-9);
        CHECK(fit.params.variances.minCoeff() >= 1e-6);
    }
}

TEST_CASE("fit: two separated clusters") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 0.5);
    Matrix x(1000, 2);
    const double truth[2][2] = {{-4.0, 1.0}, {5.0, -3.0}};
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (int d = 0; d < 2; ++d) x(i, d) = truth[i % 2][d] + g(rng);
    GmmOptions opt;
    opt.components = 2;
    opt.seed = 3;
    const auto fit = fit_gmm(x, opt);
    for (const auto& t : truth) {
        double best = 1e9;
        for (int k = 0; k < 2; ++k)
            best = std::min(best, std::max(std::abs(fit.params.means(k, 0) - t[0]), std::abs(fit.params.means(k, 1) - t[1])));
        CHECK(best < 0.1);
    }
}

TEST_CASE("fit: identical frames fall back to one component") {
    Warnings w;
    const auto fit = fit_gmm(Matrix::Constant(50, 4, 2.5), {}, &w);
    CHECK(fit.params.components() == 1);
    CHECK(w.size() == 1);
    CHECK(fit.params.variances.minCoeff() == 1e-6);
    CHECK_THROWS_AS(fit_gmm(Matrix::Zero(3, 4), {}), Error);
}
