#include "muse/io/reference.hpp"

#include <algorithm>
#include <map>

#include "muse/common/error.hpp"

namespace muse {

void sort_notes(PerformanceNotes& notes) {
    std::stable_sort(notes.begin(), notes.end(), [](const PerformanceNote& a, const PerformanceNote& b) {
        if (a.onset_sec != b.onset_sec) return a.onset_sec < b.onset_sec;
        return a.pitch < b.pitch;
    });
}

ReferenceEvents score_to_reference(const Score& score, double tempo_bpm) {
    if (!(tempo_bpm > 0.0)) throw Error(ErrorCode::InvalidArgument, "tempo must be positive");
    ReferenceEvents ref;
    ref.tempo_bpm = tempo_bpm;
    ref.measure_count = static_cast<int>(score.measures.size());

    // sounding_notes is sorted by onset, so equal onsets are adjacent.
    const auto notes = sounding_notes(score);
    size_t i = 0;
    while (i < notes.size()) {
        size_t j = i;
        std::map<int, double> pitches;  // pitch -> longest duration in beats
        int measure = notes[i].measure_index;
        while (j < notes.size() && notes[j].onset == notes[i].onset) {
            const double beats = notes[j].duration.to_double() * 4.0;
            auto [it, inserted] = pitches.emplace(notes[j].midi, beats);
            if (!inserted) it->second = std::max(it->second, beats);
            measure = std::min(measure, notes[j].measure_index);
            ++j;
        }
        ReferenceEvent e;
        e.score_index = static_cast<int>(ref.events.size());
        e.measure_index = measure;
        e.onset_beats = notes[i].onset.to_double() * 4.0;
        e.onset_sec = e.onset_beats * ref.seconds_per_beat();
        for (const auto& [pitch, beats] : pitches) {
            e.pitches.push_back(pitch);
            e.durations_beats.push_back(beats);
        }
        ref.events.push_back(std::move(e));
        i = j;
    }
    return ref;
}

PerformanceNotes render(const ReferenceEvents& reference) {
    PerformanceNotes out;
    const double spb = reference.seconds_per_beat();
    for (const auto& e : reference.events)
        for (size_t k = 0; k < e.pitches.size(); ++k)
            out.push_back({e.pitches[k], e.onset_sec, e.onset_sec + e.durations_beats[k] * spb, 80});
    sort_notes(out);
    return out;
}

}  // namespace muse
