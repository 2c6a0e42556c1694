#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "muse/symbolic/score.hpp"

namespace muse::testing {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::filesystem::path> corpus_files() {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(std::string(MUSE_TEST_DATA) + "/corpus"))
        if (entry.path().extension() == ".abc") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

/// Random but valid score: full measures, one or two voices, chords, ties,
/// occasional meter/key changes and repeat structure.
inline Score random_score(std::mt19937_64& rng) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    static const TimeSignature kMeters[] = {{2, 4}, {3, 4}, {4, 4}, {6, 8}};
    static const char kSteps[] = {'C', 'D', 'E', 'F', 'G', 'A', 'B'};

    Score s;
    s.title = "Generated " + std::to_string(pick(0, 9999));
    s.composer = "Generator";
    const int voices = pick(1, 2);
    for (int v = 0; v < voices; ++v) s.voices.push_back(std::to_string(v + 1));
    const int measures = pick(1, 8);
    TimeSignature meter = kMeters[pick(0, 3)];
    KeySignature key{pick(-4, 4), pick(0, 1) ? "major" : "minor"};
    for (int i = 0; i < measures; ++i) {
        if (i > 0 && pick(0, 5) == 0) meter = kMeters[pick(0, 3)];
        if (i > 0 && pick(0, 7) == 0) key.fifths = pick(-4, 4);
        Measure m;
        m.index = i;
        m.time = meter;
        m.key = key;
        for (const auto& voice : s.voices) {
            Fraction pos;
            const Fraction len = meter.length();
            while (pos < len) {
                static const Fraction kDurations[] = {{1, 16}, {1, 8}, {3, 16}, {1, 4}, {3, 8}, {1, 2}};
                Fraction d = kDurations[pick(0, 5)];
                if (pos + d > len) d = len - pos;
                NoteEvent e;
                e.onset = pos;
                e.duration = d;
                e.voice = voice;
                if (pick(0, 6) != 0) {
                    const int n = pick(0, 4) == 0 ? pick(2, 3) : 1;
                    const int base_octave = voice == "1" ? 4 : 3;
                    for (int k = 0; k < n; ++k) {
                        Pitch p{kSteps[pick(0, 6)], pick(-1, 1), base_octave + pick(0, 1)};
                        const bool dup = std::any_of(e.pitches.begin(), e.pitches.end(),
                                                     [&](const Pitch& q) { return q.midi() == p.midi(); });
                        if (!dup) e.pitches.push_back(p);
                    }
                }
                m.events.push_back(e);
                pos += d;
            }
        }
        s.measures.push_back(std::move(m));
    }
    // Ties between consecutive pitched events of the same voice sharing a pitch.
    for (const auto& voice : s.voices) {
        NoteEvent* prev = nullptr;
        for (auto& m : s.measures)
            for (auto& e : m.events) {
                if (e.voice != voice) continue;
                if (prev && !prev->is_rest() && !e.is_rest() && pick(0, 3) == 0) {
                    e.pitches = prev->pitches;
                    prev->tie_start = true;
                    e.tie_end = true;
                }
                prev = &e;
            }
    }
    if (measures >= 3 && pick(0, 1)) {
        s.measures[0].repeat_start = true;
        s.measures[static_cast<size_t>(measures - 2)].repeat_end = true;
        s.measures[static_cast<size_t>(measures - 2)].ending = 1;
        s.measures[static_cast<size_t>(measures - 1)].ending = 2;
    }
    return s;
}

}  // namespace muse::testing
