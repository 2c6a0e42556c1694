#include "muse/eval/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "muse/common/error.hpp"

namespace muse::eval {

namespace {

double symmetric(double ratio) { return ratio > 0.0 ? std::min(ratio, 1.0 / ratio) : 0.0; }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double duration_ratio(const MeasureSlice& slice) {
    double nominal = 0.0, performed = 0.0;
    for (const auto& pass : slice.passes) {
        if (pass.size() < 2) continue;
        nominal += pass.back().nominal_sec - pass.front().nominal_sec;
        performed += pass.back().performed_sec - pass.front().performed_sec;
    }
    return nominal > 0.0 ? performed / nominal : 0.0;
}

MeasureEvaluation evaluate_measure(const MeasureSlice& slice, double median_tempo, const EvalWeights& weights) {
    MeasureEvaluation m;
    m.measure_id = slice.measure_id;
    m.matched_count = slice.matched;
    m.missing_count = slice.missing;
    m.extra_count = slice.extra;
    if (!slice.has_events) return m;

    const int total = slice.matched + slice.missing + slice.extra;
    m.eva_note = total > 0 ? static_cast<double>(slice.matched) / total : 1.0;

    std::vector<double> local;
    bool timed = false;
    for (const auto& pass : slice.passes)
        for (size_t i = 1; i < pass.size(); ++i) {
            timed = true;
            const double nominal = pass[i].nominal_sec - pass[i - 1].nominal_sec;
            if (nominal > 0.0) local.push_back((pass[i].performed_sec - pass[i - 1].performed_sec) / nominal);
        }
    if (timed) {
        const double r = duration_ratio(slice);
        m.eva_speed = symmetric(r);
        if (r > 0.0 && median_tempo > 0.0) m.eva_tempo_sync = symmetric((1.0 / r) / median_tempo);
    }

    if (local.size() >= 2) {
        double mean = 0.0;
        for (double v : local) mean += v;
        mean /= static_cast<double>(local.size());
        double var = 0.0;
        for (double v : local) var += (v - mean) * (v - mean);
        var /= static_cast<double>(local.size());
        m.eva_stability = mean > 0.0 ? 1.0 / (1.0 + std::sqrt(var) / mean) : 0.0;
    }

    m.eva_all = weights.note * m.eva_note + weights.speed * m.eva_speed + weights.stability * m.eva_stability +
                weights.tempo_sync * m.eva_tempo_sync;
    return m;
}

std::vector<MeasureSlice> measure_slices(const ReferenceEvents& reference, const align::AlignmentResult& alignment) {
    const auto& events = reference.events;
    const auto& c = alignment.correspondences;
    const auto& perf = alignment.performance;
    int measures = reference.measure_count;
    for (const auto& e : events) measures = std::max(measures, e.measure_index + 1);
    std::vector<MeasureSlice> slices(static_cast<size_t>(measures));
    for (int i = 0; i < measures; ++i) slices[static_cast<size_t>(i)].measure_id = i;
    for (const auto& e : events) slices[static_cast<size_t>(e.measure_index)].has_events = true;

    const auto measure_of = [&](int s) { return events.at(static_cast<size_t>(s)).measure_index; };
    // Performed onset and release per matched event.
    std::map<int, std::pair<double, double>> played;
    for (const auto& [p, s] : c.matched) {
        ++slices[static_cast<size_t>(measure_of(s))].matched;
        const auto& note = perf.at(static_cast<size_t>(p));
        auto [it, fresh] = played.emplace(s, std::make_pair(note.onset_sec, note.offset_sec));
        if (!fresh) {
            it->second.first = std::min(it->second.first, note.onset_sec);
            it->second.second = std::max(it->second.second, note.offset_sec);
        }
    }
    for (int s : c.missing) ++slices[static_cast<size_t>(measure_of(s))].missing;

    if (!c.extra.empty()) {
        std::vector<std::pair<double, int>> matched_onsets;  // performed onset, measure
        for (const auto& [p, s] : c.matched) matched_onsets.emplace_back(perf.at(static_cast<size_t>(p)).onset_sec, measure_of(s));
        std::sort(matched_onsets.begin(), matched_onsets.end());
        const int fallback = events.empty() ? 0 : events.front().measure_index;
        for (int p : c.extra) {
            const double onset = perf.at(static_cast<size_t>(p)).onset_sec;
            const auto it = std::upper_bound(matched_onsets.begin(), matched_onsets.end(),
                                             std::make_pair(onset, std::numeric_limits<int>::max()));
            const int m = it == matched_onsets.begin() ? fallback : std::prev(it)->second;
            if (m >= 0 && m < measures) ++slices[static_cast<size_t>(m)].extra;
        }
    }

    // Anchors per pass: the pass's matched events, then the next matched point.
    for (size_t i = 0; i < events.size();) {
        const int m = events[i].measure_index;
        size_t end = i;
        while (end < events.size() && events[end].measure_index == m) ++end;
        std::vector<Anchor> pass;
        int last = -1;
        for (size_t s = i; s < end; ++s)
            if (const auto it = played.find(static_cast<int>(s)); it != played.end()) {
                pass.push_back({events[s].onset_sec, it->second.first});
                last = static_cast<int>(s);
            }
        if (last >= 0) {
            const auto next = played.upper_bound(last);
            if (next != played.end()) {
                pass.push_back({events[static_cast<size_t>(next->first)].onset_sec, next->second.first});
            } else {
                const auto& e = events[static_cast<size_t>(last)];
                double length = 0.0;
                for (double d : e.durations_beats) length = std::max(length, d);
                pass.push_back({e.onset_sec + length * reference.seconds_per_beat(), played[last].second});
            }
            slices[static_cast<size_t>(m)].passes.push_back(std::move(pass));
        }
        i = end;
    }
    return slices;
}

EvaluationReport evaluate_performance(const ReferenceEvents& reference, const align::AlignmentResult& alignment,
                                      const std::string& piece, const EvalWeights& weights) {
    const auto slices = measure_slices(reference, alignment);
    std::vector<double> tempos;
    for (const auto& s : slices)
        if (s.has_events)
            if (const double r = duration_ratio(s); r > 0.0) tempos.push_back(1.0 / r);
    const double median_tempo = tempos.empty() ? 1.0 : median(tempos);

    EvaluationReport report;
    report.piece = piece;
    report.tempo_bpm = reference.tempo_bpm;
    for (const auto& s : slices) report.measures.push_back(evaluate_measure(s, median_tempo, weights));

    Summary& sum = report.summary;
    if (!report.measures.empty()) {
        sum.eva_all = sum.eva_note = sum.eva_speed = sum.eva_stability = sum.eva_tempo_sync = 0.0;
        for (const auto& m : report.measures) {
            sum.eva_all += m.eva_all;
            sum.eva_note += m.eva_note;
            sum.eva_speed += m.eva_speed;
            sum.eva_stability += m.eva_stability;
            sum.eva_tempo_sync += m.eva_tempo_sync;
        }
        const auto n = static_cast<double>(report.measures.size());
        sum.eva_all /= n;
        sum.eva_note /= n;
        sum.eva_speed /= n;
        sum.eva_stability /= n;
        sum.eva_tempo_sync /= n;
    }
    for (const auto& m : report.measures) {
        sum.extra_count += m.extra_count;
        sum.matched_count += m.matched_count;
        sum.missing_count += m.missing_count;
    }
    return report;
}

nlohmann::ordered_json to_json(const MeasureEvaluation& m) {
    nlohmann::ordered_json j;
    j["measure_id"] = m.measure_id;
    j["eva_all"] = m.eva_all;
    j["eva_note"] = m.eva_note;
    j["eva_speed"] = m.eva_speed;
    j["eva_stability"] = m.eva_stability;
    j["eva_tempo_sync"] = m.eva_tempo_sync;
    j["extra_count"] = m.extra_count;
    j["matched_count"] = m.matched_count;
    j["missing_count"] = m.missing_count;
    return j;
}

nlohmann::ordered_json to_json(const Summary& s) {
    nlohmann::ordered_json j;
    j["eva_all"] = s.eva_all;
    j["eva_note"] = s.eva_note;
    j["eva_speed"] = s.eva_speed;
    j["eva_stability"] = s.eva_stability;
    j["eva_tempo_sync"] = s.eva_tempo_sync;
    j["extra_count"] = s.extra_count;
    j["matched_count"] = s.matched_count;
    j["missing_count"] = s.missing_count;
    return j;
}

nlohmann::ordered_json to_json(const EvaluationReport& r) {
    nlohmann::ordered_json j;
    j["piece"] = r.piece;
    j["tempo_bpm"] = r.tempo_bpm;
    j["measures"] = nlohmann::ordered_json::array();
    for (const auto& m : r.measures) j["measures"].push_back(to_json(m));
    j["summary"] = to_json(r.summary);
    return j;
}

MeasureEvaluation measure_from_json(const nlohmann::json& j) {
    try {
        MeasureEvaluation m;
        m.measure_id = j.at("measure_id").get<int>();
        m.eva_all = j.at("eva_all").get<double>();
        m.eva_note = j.at("eva_note").get<double>();
        m.eva_speed = j.at("eva_speed").get<double>();
        m.eva_stability = j.at("eva_stability").get<double>();
        m.eva_tempo_sync = j.at("eva_tempo_sync").get<double>();
        m.extra_count = j.at("extra_count").get<int>();
        m.matched_count = j.at("matched_count").get<int>();
        m.missing_count = j.at("missing_count").get<int>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed measure record: ") + e.what());
    }
}

EvaluationReport report_from_json(const nlohmann::json& j) {
    try {
        EvaluationReport r;
        r.piece = j.at("piece").get<std::string>();
        r.tempo_bpm = j.at("tempo_bpm").get<double>();
        for (const auto& m : j.at("measures")) r.measures.push_back(measure_from_json(m));
        const auto& s = j.at("summary");
        r.summary.eva_all = s.at("eva_all").get<double>();
        r.summary.eva_note = s.at("eva_note").get<double>();
        r.summary.eva_speed = s.at("eva_speed").get<double>();
        r.summary.eva_stability = s.at("eva_stability").get<double>();
        r.summary.eva_tempo_sync = s.at("eva_tempo_sync").get<double>();
        r.summary.extra_count = s.at("extra_count").get<int>();
        r.summary.matched_count = s.at("matched_count").get<int>();
        r.summary.missing_count = s.at("missing_count").get<int>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed report: ") + e.what());
    }
}

}  // namespace muse::eval
