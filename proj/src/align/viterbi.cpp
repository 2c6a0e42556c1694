#include "muse/align/viterbi.hpp"

#include <cmath>
#include <limits>

#include "muse/common/error.hpp"

namespace muse::align {

ViterbiResult viterbi(const dsp::Matrix& log_obs, const dsp::Vector& log_init, const dsp::Matrix& log_trans) {
    const Eigen::Index T = log_obs.rows(), S = log_obs.cols();
    if (log_init.size() != S || log_trans.rows() != S || log_trans.cols() != S)
        throw Error(ErrorCode::DimensionMismatch, "observation, initial and transition sizes disagree");
    if (T == 0 || S == 0) throw Error(ErrorCode::NoFeasiblePath, "empty observation sequence");

    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    std::vector<int> back(static_cast<size_t>(T * S), -1);
    dsp::Vector score = log_init + log_obs.row(0).transpose();
    dsp::Vector next(S);
    for (Eigen::Index t = 1; t < T; ++t) {
        for (Eigen::Index s = 0; s < S; ++s) {
            double best = kNegInf;
            int arg = -1;
            for (Eigen::Index r = 0; r < S; ++r) {
                const double v = score(r) + log_trans(r, s);
                if (v > best) {  // strict: the first (smallest) index wins ties
                    best = v;
                    arg = static_cast<int>(r);
                }
            }
            next(s) = best + log_obs(t, s);
            back[static_cast<size_t>(t * S + s)] = arg;
        }
        score.swap(next);
    }

    double best = kNegInf;
    int state = -1;
    for (Eigen::Index s = 0; s < S; ++s)
        if (score(s) > best) {
            best = score(s);
            state = static_cast<int>(s);
        }
    if (state < 0 || !std::isfinite(best)) throw Error(ErrorCode::NoFeasiblePath, "every state path has zero probability");

    ViterbiResult result;
    result.log_prob = best;
    result.path.resize(static_cast<size_t>(T));
    for (Eigen::Index t = T - 1; t >= 0; --t) {
        result.path[static_cast<size_t>(t)] = state;
        if (t > 0) state = back[static_cast<size_t>(t * S + state)];
    }
    return result;
}

}  // namespace muse::align
