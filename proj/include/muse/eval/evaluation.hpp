#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "muse/align/result.hpp"
#include "muse/io/reference.hpp"

namespace muse::eval {

/// One row of the per-measure report. Field names are part of the report
/// format and must not change.
struct MeasureEvaluation {
    int measure_id = 0;
    double eva_all = 1.0;
    double eva_note = 1.0;
    double eva_speed = 1.0;
    double eva_stability = 1.0;
    double eva_tempo_sync = 1.0;
    int extra_count = 0;
    int matched_count = 0;
    int missing_count = 0;

    bool operator==(const MeasureEvaluation&) const = default;
};

struct EvalWeights {
    double note = 0.4;
    double speed = 0.2;
    double stability = 0.2;
    double tempo_sync = 0.2;
};

/// A score time and the performed time of the same point.
struct Anchor {
    double nominal_sec;
    double performed_sec;
};

/// What one measure contributes to its evaluation: correspondence counts and,
/// per pass through the measure (repeats play it more than once), the
/// timing anchors of its matched events in playback order followed by the
/// next matched point after the pass (the next matched event's onset, or the
/// end of the last note).
struct MeasureSlice {
    int measure_id = 0;
    bool has_events = false;
    int matched = 0;
    int missing = 0;
    int extra = 0;
    std::vector<std::vector<Anchor>> passes;
};

/// Total performed / nominal duration over passes with two or more anchors;
/// 0 when there is no such span.
double duration_ratio(const MeasureSlice& slice);

/// eva_note = matched / (matched + missing + extra);
/// eva_speed = min(r, 1/r) with r = duration_ratio;
/// eva_stability = 1 / (1 + cv) over the per-interval tempo ratios (needs
/// at least two intervals);
/// eva_tempo_sync = min(ρ, 1/ρ), ρ = (1/r) / median_tempo;
/// eva_all = weighted sum. Undefined quantities score 1.0; measures
/// without score events score 1.0 throughout.
MeasureEvaluation evaluate_measure(const MeasureSlice& slice, double median_tempo, const EvalWeights& weights = {});

/// Restricts the alignment to each reference measure. An extra note goes to
/// the measure of the closest matched note played before it (the first
/// event's measure when none was).
std::vector<MeasureSlice> measure_slices(const ReferenceEvents& reference, const align::AlignmentResult& alignment);

struct Summary {
    double eva_all = 1.0;
    double eva_note = 1.0;
    double eva_speed = 1.0;
    double eva_stability = 1.0;
    double eva_tempo_sync = 1.0;
    int extra_count = 0;
    int matched_count = 0;
    int missing_count = 0;
};

struct EvaluationReport {
    std::string piece;
    double tempo_bpm = 120.0;
    std::vector<MeasureEvaluation> measures;
    Summary summary;
};

/// One record per reference measure in ascending order, plus unweighted
/// means and total counts.
EvaluationReport evaluate_performance(const ReferenceEvents& reference, const align::AlignmentResult& alignment,
                                      const std::string& piece = "", const EvalWeights& weights = {});

nlohmann::ordered_json to_json(const MeasureEvaluation& m);
nlohmann::ordered_json to_json(const Summary& s);
nlohmann::ordered_json to_json(const EvaluationReport& r);
MeasureEvaluation measure_from_json(const nlohmann::json& j);
EvaluationReport report_from_json(const nlohmann::json& j);

}  // namespace muse::eval
