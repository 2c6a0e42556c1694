#pragma once

#include <Eigen/Dense>
#include <string>

namespace muse::dsp {

/// Frames as rows, features (pitch bins or components) as columns.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// CSV dump, one frame per line, shortest round-trip number formatting.
std::string to_csv(const Matrix& m);
Matrix from_csv(const std::string& text);

}  // namespace muse::dsp
