#include "muse/dsp/pca.hpp"

#include <Eigen/Eigenvalues>

namespace muse::dsp {

PcaModel pca_fit(const std::vector<Matrix>& sets, int dims, Warnings* warnings) {
    if (sets.empty()) throw Error(ErrorCode::InvalidArgument, "no frames to fit");
    if (dims <= 0) throw Error(ErrorCode::InvalidArgument, "dims must be positive");
    const Eigen::Index d = sets[0].cols();
    Eigen::Index n = 0;
    for (const auto& s : sets) {
        if (s.cols() != d) throw Error(ErrorCode::InvalidArgument, "feature sets differ in width");
        n += s.rows();
    }
    if (n < dims) throw Error(ErrorCode::InvalidArgument, "need at least " + std::to_string(dims) + " frames, got " +
                                                              std::to_string(n));
    if (dims > d) throw Error(ErrorCode::InvalidArgument, "dims exceed the feature width");

    PcaModel model;
    model.mean = Vector::Zero(d);
    for (const auto& s : sets) model.mean += s.colwise().sum().transpose();
    model.mean /= static_cast<double>(n);

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (const auto& s : sets) {
        const Eigen::MatrixXd centered = s.rowwise() - model.mean.transpose();
        cov.noalias() += centered.transpose() * centered;
    }
    cov /= static_cast<double>(n);

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "eigendecomposition failed");
    // Eigen returns ascending eigenvalues.
    const Eigen::VectorXd values = solver.eigenvalues();
    const double top = std::max(values(d - 1), 0.0);
    const double tolerance = std::max(top, 1.0) * 1e-12 * static_cast<double>(d);

    model.components = Matrix::Zero(dims, d);
    model.eigenvalues = Vector::Zero(dims);
    int rank = 0;
    for (int i = 0; i < dims; ++i) {
        const Eigen::Index src = d - 1 - i;
        if (values(src) <= tolerance) break;
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        model.components.row(i) = v.transpose();
        model.eigenvalues(i) = values(src);
        ++rank;
    }
    if (rank < dims)
        warn(warnings, "frames span only " + std::to_string(rank) + " dimensions; " + std::to_string(dims - rank) +
                           " PCA components padded with zeros");
    return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& frames) {
    if (frames.cols() != model.mean.size())
        throw Error(ErrorCode::DimensionMismatch, "frames have " + std::to_string(frames.cols()) +
                                                      " features, model expects " + std::to_string(model.mean.size()));
    return (frames.rowwise() - model.mean.transpose()) * model.components.transpose();
}

}  // namespace muse::dsp
