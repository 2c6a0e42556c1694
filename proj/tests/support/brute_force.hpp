#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "muse/dsp/matrix.hpp"

namespace muse::testing {

struct HmmInstance {
    dsp::Matrix log_obs;
    dsp::Vector log_init;
    dsp::Matrix log_trans;
};

inline double path_score(const HmmInstance& m, const std::vector<int>& path) {
    double s = m.log_init(path[0]) + m.log_obs(0, path[0]);
    for (size_t t = 1; t < path.size(); ++t)
        s += m.log_trans(path[t - 1], path[t]) + m.log_obs(static_cast<Eigen::Index>(t), path[t]);
    return s;
}

struct Oracle {
    std::vector<int> path;
    double log_prob = -std::numeric_limits<double>::infinity();
};

/// Enumerates all S^T paths. Among optimal paths it returns the one that is
/// smallest when compared from the last frame backwards.
inline Oracle brute_force(const HmmInstance& m) {
    const auto T = static_cast<int>(m.log_obs.rows()), S = static_cast<int>(m.log_obs.cols());
    Oracle best;
    std::vector<int> path(static_cast<size_t>(T), 0);
    const auto reverse_less = [](const std::vector<int>& a, const std::vector<int>& b) {
        for (size_t i = a.size(); i-- > 0;)
            if (a[i] != b[i]) return a[i] < b[i];
        return false;
    };
    while (true) {
        const double s = path_score(m, path);
        if (s > best.log_prob || (s == best.log_prob && !best.path.empty() && reverse_less(path, best.path)) ||
            (s == best.log_prob && best.path.empty())) {
            best.log_prob = s;
            best.path = path;
        }
        int t = 0;
        while (t < T && ++path[static_cast<size_t>(t)] == S) path[static_cast<size_t>(t++)] = 0;
        if (t == T) break;
    }
    return best;
}

inline HmmInstance random_instance(std::mt19937_64& rng, int max_t, int max_s) {
    std::uniform_int_distribution<int> tdist(1, max_t), sdist(1, max_s);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    const int T = tdist(rng), S = sdist(rng);
    HmmInstance m{dsp::Matrix(T, S), dsp::Vector(S), dsp::Matrix(S, S)};
    for (int t = 0; t < T; ++t)
        for (int s = 0; s < S; ++s) m.log_obs(t, s) = std::log(u(rng));
    double z = 0;
    for (int s = 0; s < S; ++s) z += m.log_init(s) = u(rng);
    for (int s = 0; s < S; ++s) m.log_init(s) = std::log(m.log_init(s) / z);
    for (int r = 0; r < S; ++r) {
        double row = 0;
        for (int s = 0; s < S; ++s) row += m.log_trans(r, s) = u(rng);
        for (int s = 0; s < S; ++s) m.log_trans(r, s) = std::log(m.log_trans(r, s) / row);
    }
    return m;
}

/// Small integer scores so that equal path sums are exact and ties common.
inline HmmInstance random_tied_instance(std::mt19937_64& rng, int max_t, int max_s) {
    std::uniform_int_distribution<int> tdist(1, max_t), sdist(1, max_s), v(-2, 0);
    const int T = tdist(rng), S = sdist(rng);
    HmmInstance m{dsp::Matrix(T, S), dsp::Vector(S), dsp::Matrix(S, S)};
    for (int t = 0; t < T; ++t)
        for (int s = 0; s < S; ++s) m.log_obs(t, s) = v(rng);
    for (int s = 0; s < S; ++s) m.log_init(s) = v(rng);
    for (int r = 0; r < S; ++r)
        for (int s = 0; s < S; ++s) m.log_trans(r, s) = v(rng);
    return m;
}

}  // namespace muse::testing
