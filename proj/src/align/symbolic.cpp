#include "muse/align/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "muse/common/error.hpp"

namespace muse::align {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Emissions {
    double hit;
    double miss;
    double extra;
    double absent;
};

Emissions emissions(const SymbolicAlignOptions& o) {
    return {std::log1p(-o.mismatch_eps), std::log(o.mismatch_eps), std::log(o.extra_eps), std::log(o.absent_prob)};
}

bool contains(const std::vector<int>& sorted, int pitch) {
    return std::binary_search(sorted.begin(), sorted.end(), pitch);
}

// Performed notes whose onsets fall within the chord window of the group's
// first note form one observation.
struct Group {
    size_t begin;
    size_t end;
    std::vector<int> pitches;  // sorted, distinct
};

std::vector<Group> group_notes(const PerformanceNotes& performance, double window) {
    std::vector<Group> groups;
    for (size_t i = 0; i < performance.size();) {
        Group g{i, i, {}};
        while (g.end < performance.size() && performance[g.end].onset_sec - performance[i].onset_sec <= window)
            g.pitches.push_back(performance[g.end++].pitch);
        std::sort(g.pitches.begin(), g.pitches.end());
        g.pitches.erase(std::unique(g.pitches.begin(), g.pitches.end()), g.pitches.end());
        i = g.end;
        groups.push_back(std::move(g));
    }
    return groups;
}

double event_emission(const Group& g, const ReferenceEvent& e, const PerformanceNotes& performance,
                      const Emissions& em) {
    double v = 0.0;
    for (size_t i = g.begin; i < g.end; ++i) v += contains(e.pitches, performance[i].pitch) ? em.hit : em.miss;
    for (int p : e.pitches)
        if (!contains(g.pitches, p)) v += em.absent;
    return v;
}

double extra_emission(const Group& g, const Emissions& em) { return static_cast<double>(g.end - g.begin) * em.extra; }

// Best predecessor value with its state index; ties keep the smaller index.
struct Best {
    double value = kNegInf;
    int state = -1;

    void offer(double v, int s) {
        if (v > value || (v == value && s < state)) {
            value = v;
            state = s;
        }
    }
};

// Striking the current event again can only add extra notes, so the
// top-layer self-loop mass feeds the insertion state.
double insertion_log_prob(const HmmModel& model, int position, double extra_prob) {
    const double self = position >= 0 ? std::exp(model.log_transition(position, position)) : 0.0;
    return std::log(extra_prob + (1.0 - extra_prob) * self);
}

}  // namespace

DenseModel symbolic_dense_model(const PerformanceNotes& performance, const ReferenceEvents& reference,
                                const SymbolicAlignOptions& options) {
    const int n = static_cast<int>(reference.events.size());
    const HmmModel model(n, options.transitions);
    const Emissions em = emissions(options);
    const double stay = std::log1p(-options.extra_prob), insert = std::log(options.extra_prob);
    const int S = 2 * n + 1;
    const auto groups = group_notes(performance, options.chord_window_sec);
    DenseModel d;
    d.log_obs.resize(static_cast<Eigen::Index>(groups.size()), S);
    for (size_t t = 0; t < groups.size(); ++t) {
        const auto row = static_cast<Eigen::Index>(t);
        for (int j = 0; j < n; ++j)
            d.log_obs(row, j) = event_emission(groups[t], reference.events[static_cast<size_t>(j)], performance, em);
        for (int p = 0; p <= n; ++p) d.log_obs(row, n + p) = extra_emission(groups[t], em);
    }
    d.log_init = dsp::Vector::Constant(S, kNegInf);
    for (int k = 0; k < n; ++k) d.log_init(k) = stay + model.log_transition(-1, k);
    d.log_init(n) = insert;
    d.log_trans = dsp::Matrix::Constant(S, S, kNegInf);
    for (int p = 0; p <= n; ++p) {
        const int position = p - 1;  // event index the insertion state follows
        const double restrike = insertion_log_prob(model, position, options.extra_prob);
        for (int k = 0; k < n; ++k) {
            if (k == position) continue;
            d.log_trans(n + p, k) = stay + model.log_transition(position, k);
            if (position >= 0) d.log_trans(position, k) = stay + model.log_transition(position, k);
        }
        d.log_trans(n + p, n + p) = restrike;
        if (position >= 0) d.log_trans(position, n + p) = restrike;
    }
    return d;
}

AlignmentResult align_symbolic(const PerformanceNotes& performance, const ReferenceEvents& reference,
                               const SymbolicAlignOptions& options) {
    const int n = static_cast<int>(reference.events.size());
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "reference has no events");
    const HmmModel model(n, options.transitions);
    const auto& tp = options.transitions;
    const Emissions em = emissions(options);
    const double stay = std::log1p(-options.extra_prob), insert = std::log(options.extra_prob);
    const double log_r = std::log(tp.ratio);
    const double log_skip = std::log(tp.skip * (1.0 - tp.ratio));
    const double log_back = std::log(tp.backward * (1.0 - tp.ratio));
    const double log_fwd = std::log(tp.forward);
    const int S = 2 * n + 1;
    const auto groups = group_notes(performance, options.chord_window_sec);
    const auto T = static_cast<int>(groups.size());

    AlignmentResult result;
    result.performance = performance;
    if (T == 0) {
        for (int s = 0; s < n; ++s) result.correspondences.missing.push_back(s);
        return result;
    }

    const auto emit = [&](int t, int k) {
        return event_emission(groups[static_cast<size_t>(t)], reference.events[static_cast<size_t>(k)], performance, em);
    };
    const auto emit_extra = [&](int t) { return extra_emission(groups[static_cast<size_t>(t)], em); };

    std::vector<double> delta(static_cast<size_t>(S), kNegInf), next(static_cast<size_t>(S));
    std::vector<int> back(static_cast<size_t>(T) * static_cast<size_t>(S), -1);
    for (int k = 0; k < n; ++k) delta[static_cast<size_t>(k)] = stay + model.log_transition(-1, k) + emit(0, k);
    delta[static_cast<size_t>(n)] = insert + emit_extra(0);

    // Outgoing score of each position j in [-1, N) towards events, split by
    // source kind so ties resolve to the smaller state index as in the dense
    // decoder: event states precede insertion states.
    std::vector<double> src_event(static_cast<size_t>(n + 1)), src_extra(static_cast<size_t>(n + 1));
    for (int t = 1; t < T; ++t) {
        for (int j = -1; j < n; ++j) {
            const double base = stay - model.log_normalizer(j);
            src_event[static_cast<size_t>(j + 1)] = j >= 0 ? delta[static_cast<size_t>(j)] + base : kNegInf;
            src_extra[static_cast<size_t>(j + 1)] = delta[static_cast<size_t>(n + j + 1)] + base;
        }
        for (int kind = 0; kind < 2; ++kind) {
            const auto& src = kind == 0 ? src_event : src_extra;
            const auto state_of = [&](int j) { return kind == 0 ? j : n + j + 1; };
            const auto at = [&](int j) { return src[static_cast<size_t>(j + 1)]; };
            // Backward jumps into k come from j > k: sweep right to left.
            std::vector<Best> from_back(static_cast<size_t>(n));
            Best run;
            for (int k = n - 2; k >= 0; --k) {
                Best moved{run.value + log_r, run.state};
                moved.offer(at(k + 1), state_of(k + 1));
                run = moved;
                from_back[static_cast<size_t>(k)] = run;
            }
            Best skip_run;
            for (int k = 0; k < n; ++k) {
                if (k >= 1) {
                    Best moved{skip_run.value + log_r, skip_run.state};
                    moved.offer(at(k - 2), state_of(k - 2));
                    skip_run = moved;
                }
                Best best;
                if (k >= 1 && skip_run.state >= 0) best.offer(skip_run.value + log_skip, skip_run.state);
                best.offer(at(k - 1) + log_fwd, state_of(k - 1));
                const Best& b = from_back[static_cast<size_t>(k)];
                if (k + 1 < n && b.state >= 0) best.offer(b.value + log_back, b.state);
                if (kind == 0 || best.value > next[static_cast<size_t>(k)] ||
                    (best.value == next[static_cast<size_t>(k)] && best.state < back[static_cast<size_t>(t) * S + k])) {
                    next[static_cast<size_t>(k)] = best.value;
                    back[static_cast<size_t>(t) * S + k] = best.state;
                }
            }
        }
        for (int k = 0; k < n; ++k) next[static_cast<size_t>(k)] += emit(t, k);
        for (int p = 0; p <= n; ++p) {
            Best b;
            if (p >= 1) b.offer(delta[static_cast<size_t>(p - 1)], p - 1);
            b.offer(delta[static_cast<size_t>(n + p)], n + p);
            next[static_cast<size_t>(n + p)] = b.value + insertion_log_prob(model, p - 1, options.extra_prob) + emit_extra(t);
            back[static_cast<size_t>(t) * S + n + p] = b.state;
        }
        delta.swap(next);
    }

    Best final;
    for (int s = 0; s < S; ++s) final.offer(delta[static_cast<size_t>(s)], s);
    if (!std::isfinite(final.value)) throw Error(ErrorCode::NoFeasiblePath, "no alignment path has non-zero probability");
    result.log_prob = final.value;
    std::vector<int> group_path(static_cast<size_t>(T), 0);
    int state = final.state;
    for (int t = T - 1; t >= 0; --t) {
        group_path[static_cast<size_t>(t)] = state;
        if (t > 0) state = back[static_cast<size_t>(t) * S + state];
    }

    result.path.assign(performance.size(), 0);
    std::vector<NoteAssignment> assignments(performance.size());
    for (int t = 0; t < T; ++t) {
        const auto& g = groups[static_cast<size_t>(t)];
        const int s = group_path[static_cast<size_t>(t)];
        for (size_t i = g.begin; i < g.end; ++i) {
            result.path[i] = s;
            assignments[i].score_index = s < n ? s : -1;
        }
    }
    result.correspondences = extract_correspondences(assignments, performance, reference);
    for (const auto& [p, s] : result.correspondences.matched) {
        const double onset = performance[static_cast<size_t>(p)].onset_sec;
        auto [it, inserted] = result.onsets_sec.emplace(s, onset);
        if (!inserted) it->second = std::min(it->second, onset);
    }
    return result;
}

}  // namespace muse::align
