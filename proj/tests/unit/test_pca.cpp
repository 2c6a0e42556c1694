#include <random>

#include "doctest.h"
#include "muse/dsp/pca.hpp"

using namespace muse;
using namespace muse::dsp;

namespace {

Matrix gaussian_data(int n, int d, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    // Correlated features with decaying scales.
    Matrix mix(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) mix(i, j) = g(rng) / (1.0 + i);
    Matrix z(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) z(i, j) = g(rng);
    Matrix x = z * mix;
    x.rowwise() += Eigen::RowVectorXd::LinSpaced(d, -1.0, 3.0);
    return x;
}

double reconstruction_error(const Matrix& x, const std::vector<Matrix>& sets, int dims) {
    const auto model = pca_fit(sets, dims);
    const Matrix y = pca_transform(model, x);
    const Matrix back = (y * model.components).rowwise() + model.mean.transpose();
    return (back - x).squaredNorm();
}

}  // namespace

TEST_CASE("pca: points on a line") {
    Matrix x(200, 5);
    const Eigen::RowVectorXd dir = (Eigen::RowVectorXd(5) << 1, -2, 0.5, 3, 1).finished().normalized();
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int i = 0; i < 200; ++i) x.row(i) = g(rng) * dir;
    Warnings w;
    const auto model = pca_fit({x}, 3, &w);
    const Matrix centered = x.rowwise() - x.colwise().mean();
    const double total = centered.squaredNorm() / 200.0;
    CHECK(model.eigenvalues(0) == doctest::Approx(total));
    CHECK(std::abs(model.eigenvalues(1)) < 1e-9);
    CHECK(w.size() == 1);  // rank one, two zero components
    CHECK(model.components.row(1).norm() == 0.0);
    // Sign convention: the largest-magnitude entry is positive.
    Eigen::Index arg;
    model.components.row(0).cwiseAbs().maxCoeff(&arg);
    CHECK(model.components(0, arg) > 0);
}

TEST_CASE("pca: the mean frame maps to zero") {
    std::mt19937_64 rng(5);
    const Matrix x = gaussian_data(300, 40, rng);
    const auto model = pca_fit({x}, 30);
    const Matrix mean_row = model.mean.transpose();
    CHECK(pca_transform(model, mean_row).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pca: reconstruction error does not grow with dims") {
    std::mt19937_64 rng(11);
    const Matrix x = gaussian_data(500, 60, rng);
    const double e5 = reconstruction_error(x, {x}, 5);
    const double e10 = reconstruction_error(x, {x}, 10);
    const double e30 = reconstruction_error(x, {x}, 30);
    CHECK(e10 <= e5 + 1e-9);
    CHECK(e30 <= e10 + 1e-9);
}

TEST_CASE("pca: outputs are uncorrelated and sorted") {
    std::mt19937_64 rng(17);
    const Matrix a = gaussian_data(250, 88, rng), b = gaussian_data(250, 88, rng);
    const auto model = pca_fit({a, b}, 30);
    Matrix all(500, 88);
    all << a, b;
    const Matrix y = pca_transform(model, all);
    const Matrix cy = y.rowwise() - y.colwise().mean();
    const Eigen::MatrixXd cov = cy.transpose() * cy / 500.0;
    const double trace = cov.trace();
    for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 30; ++j)
            if (i != j) CHECK(std::abs(cov(i, j)) < 1e-6 * trace);
    for (int i = 1; i < 30; ++i) CHECK(model.eigenvalues(i) <= model.eigenvalues(i - 1));
    for (int i = 0; i < 30; ++i) CHECK(cov(i, i) == doctest::Approx(model.eigenvalues(i)));
}

TEST_CASE("pca: argument checks") {
    CHECK_THROWS_AS(pca_fit({}, 30), Error);
    CHECK_THROWS_AS(pca_fit({Matrix::Zero(10, 88)}, 30), Error);
    const auto model = pca_fit({Matrix::Random(40, 50)}, 30);
    CHECK_THROWS_AS(pca_transform(model, Matrix::Zero(3, 88)), Error);
}
