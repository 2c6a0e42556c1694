#pragma once

#include <vector>

#include "muse/common/error.hpp"
#include "muse/dsp/matrix.hpp"

namespace muse::dsp {

struct PcaModel {
    Vector mean;              // per input feature
    Matrix components;        // dims × features, one unit vector per row
    Vector eigenvalues;       // descending, zero for padded components

    int dims() const { return static_cast<int>(components.rows()); }
};

/// Top principal axes of the pooled frames of `sets`. Each component's
/// largest-magnitude entry is made positive. Components beyond the rank of
/// the data are zero rows, with a warning. Errors: InvalidArgument (fewer
/// frames than dims, or differing feature counts).
PcaModel pca_fit(const std::vector<Matrix>& sets, int dims = 30, Warnings* warnings = nullptr);

/// (frames − mean) · componentsᵀ, T × dims.
Matrix pca_transform(const PcaModel& model, const Matrix& frames);

}  // namespace muse::dsp
