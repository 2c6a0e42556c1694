#include "muse/align/result.hpp"

#include <algorithm>
#include <cmath>

#include "muse/common/error.hpp"

namespace muse::align {

Correspondences extract_correspondences(const std::vector<NoteAssignment>& assignments,
                                        const PerformanceNotes& performance, const ReferenceEvents& reference) {
    if (assignments.size() != performance.size())
        throw Error(ErrorCode::DimensionMismatch, "one assignment per performed note required");
    const auto n = static_cast<int>(reference.events.size());
    // For each score event, the performance index that played each pitch.
    std::vector<std::map<int, int>> played(static_cast<size_t>(n));
    std::vector<bool> is_extra(performance.size(), true);
    for (size_t i = 0; i < assignments.size(); ++i) {
        const int s = assignments[i].score_index;
        if (s < 0 || s >= n) continue;
        const auto& pitches = reference.events[static_cast<size_t>(s)].pitches;
        const int pitch = performance[i].pitch;
        if (std::find(pitches.begin(), pitches.end(), pitch) == pitches.end()) continue;
        if (!played[static_cast<size_t>(s)].emplace(pitch, static_cast<int>(i)).second) continue;
        is_extra[i] = false;
    }

    Correspondences c;
    for (int s = 0; s < n; ++s) {
        const auto& event = reference.events[static_cast<size_t>(s)];
        const auto& got = played[static_cast<size_t>(s)];
        const auto needed = static_cast<size_t>((event.pitches.size() + 1) / 2);
        if (got.empty() || got.size() < needed) {
            for (const auto& [pitch, idx] : got) is_extra[static_cast<size_t>(idx)] = true;
            c.missing.push_back(s);
            continue;
        }
        std::vector<int> idxs;
        for (const auto& [pitch, idx] : got) idxs.push_back(idx);
        std::sort(idxs.begin(), idxs.end());
        for (int idx : idxs) c.matched.emplace_back(idx, s);
        std::vector<int> absent;
        for (int pitch : event.pitches)
            if (!got.count(pitch)) absent.push_back(pitch);
        if (!absent.empty()) c.absent_pitches[s] = std::move(absent);
    }
    for (size_t i = 0; i < is_extra.size(); ++i)
        if (is_extra[i]) c.extra.push_back(static_cast<int>(i));
    return c;
}

nlohmann::json to_json(const AlignmentResult& r) {
    nlohmann::json j;
    j["path"] = r.path;
    j["matched"] = nlohmann::json::array();
    for (const auto& [p, s] : r.correspondences.matched) j["matched"].push_back({p, s});
    j["missing"] = r.correspondences.missing;
    j["extra"] = r.correspondences.extra;
    j["onsets_sec"] = nlohmann::json::object();
    for (const auto& [s, t] : r.onsets_sec) j["onsets_sec"][std::to_string(s)] = t;
    j["log_prob"] = std::isfinite(r.log_prob) ? nlohmann::json(r.log_prob) : nlohmann::json(nullptr);
    j["absent_pitches"] = nlohmann::json::object();
    for (const auto& [s, pitches] : r.correspondences.absent_pitches) j["absent_pitches"][std::to_string(s)] = pitches;
    j["performance"] = nlohmann::json::array();
    for (const auto& n : r.performance)
        j["performance"].push_back(
            {{"pitch", n.pitch}, {"onset_sec", n.onset_sec}, {"offset_sec", n.offset_sec}, {"velocity", n.velocity}});
    return j;
}

AlignmentResult alignment_from_json(const nlohmann::json& j) {
    try {
        AlignmentResult r;
        r.path = j.value("path", std::vector<int>{});
        for (const auto& pair : j.at("matched")) r.correspondences.matched.emplace_back(pair.at(0), pair.at(1));
        r.correspondences.missing = j.at("missing").get<std::vector<int>>();
        r.correspondences.extra = j.at("extra").get<std::vector<int>>();
        if (j.contains("onsets_sec"))
            for (const auto& [k, v] : j["onsets_sec"].items()) r.onsets_sec[std::stoi(k)] = v.get<double>();
        if (j.contains("log_prob") && j["log_prob"].is_number()) r.log_prob = j["log_prob"];
        if (j.contains("absent_pitches"))
            for (const auto& [k, v] : j["absent_pitches"].items())
                r.correspondences.absent_pitches[std::stoi(k)] = v.get<std::vector<int>>();
        if (j.contains("performance"))
            for (const auto& n : j["performance"])
                r.performance.push_back({n.at("pitch"), n.at("onset_sec"), n.at("offset_sec"), n.value("velocity", 80)});
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed alignment JSON: ") + e.what());
    }
}

}  // namespace muse::align
