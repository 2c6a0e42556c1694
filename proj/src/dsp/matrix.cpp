#include "muse/dsp/matrix.hpp"

#include <charconv>
#include <cstdlib>
#include <sstream>
#include <vector>

#include "muse/common/error.hpp"

namespace muse::dsp {

std::string to_csv(const Matrix& m) {
    std::string out;
    char buf[32];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out += ',';
            const auto res = std::to_chars(buf, buf + sizeof buf, m(r, c));
            out.append(buf, res.ptr);
        }
        out += '\n';
    }
    return out;
}

Matrix from_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            char* end = nullptr;
            row.push_back(std::strtod(cell.c_str(), &end));
            if (end == cell.c_str()) throw Error(ErrorCode::InvalidArgument, "non-numeric CSV cell '" + cell + "'");
        }
        if (!rows.empty() && row.size() != rows[0].size())
            throw Error(ErrorCode::ShapeMismatch, "ragged CSV rows");
        rows.push_back(std::move(row));
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return m;
}

}  // namespace muse::dsp
