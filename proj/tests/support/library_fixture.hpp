#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "muse/io/performance.hpp"

namespace muse::testing {

/// Temporary directory removed on scope exit.
class ScopedDir {
public:
    explicit ScopedDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / (tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~ScopedDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScopedDir(const ScopedDir&) = delete;
    ScopedDir& operator=(const ScopedDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

/// Eighth-note ABC for a MIDI pitch, every accidental explicit.
inline std::string abc_pitch(int midi) {
    static const char* kNames[] = {"=C", "^C", "=D", "^D", "=E", "=F", "^F", "=G", "^G", "=A", "^A", "=B"};
    const int octave = midi / 12 - 1;
    std::string name = kNames[midi % 12];
    if (octave >= 5) {
        name.back() = static_cast<char>(name.back() - 'A' + 'a');
        name += std::string(static_cast<size_t>(octave - 5), '\'');
    } else {
        name += std::string(static_cast<size_t>(4 - octave), ',');
    }
    return name;
}

struct LibraryPiece {
    std::string file;
    std::string title;
    std::string composer;
    std::vector<int> melody;
};

/// Fifty single-line pieces of 32 eighth notes from independent random walks.
inline std::vector<LibraryPiece> library_pieces(unsigned seed = 7) {
    static const char* kWords[] = {"River", "Lantern", "Harbor", "Meadow", "Comet", "Willow", "Ember", "Glacier",
                                   "Orchard", "Canyon"};
    static const char* kComposers[] = {"A. Marlow", "B. Okafor", "C. Lindqvist", "D. Ferreira", "E. Tanaka"};
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> step(-7, 7);
    std::vector<LibraryPiece> pieces;
    for (int i = 0; i < 50; ++i) {
        LibraryPiece p;
        char file[32];
        std::snprintf(file, sizeof file, "piece_%02d.abc", i);
        p.file = file;
        p.title = i == 0 ? "Kikujiro's Summer"
                         : std::string(kWords[i % 10]) + " " + kWords[(i / 10 + i) % 10] + " No. " + std::to_string(i);
        p.composer = kComposers[i % 5];
        int pitch = 60 + static_cast<int>(rng() % 12);
        for (int n = 0; n < 32; ++n) {
            p.melody.push_back(pitch);
            int d = 0;
            while (d == 0) d = step(rng);
            pitch += d;
            if (pitch < 55 || pitch > 84) pitch -= 2 * d;
        }
        pieces.push_back(std::move(p));
    }
    return pieces;
}

inline std::string piece_abc(const LibraryPiece& p) {
    std::string out = "X:1\nT:" + p.title + "\nC:" + p.composer + "\nM:4/4\nL:1/8\nK:C\n";
    for (size_t i = 0; i < p.melody.size(); ++i) {
        out += abc_pitch(p.melody[i]);
        if (i % 8 == 7) out += "|";
    }
    return out + "]\n";
}

inline std::vector<LibraryPiece> write_library(const std::filesystem::path& dir, unsigned seed = 7) {
    auto pieces = library_pieces(seed);
    for (const auto& p : pieces) write_text(dir / p.file, piece_abc(p));
    return pieces;
}

/// Eighth notes at 120 BPM, optionally transposed.
inline PerformanceNotes melody_notes(const std::vector<int>& melody, int shift = 0) {
    PerformanceNotes notes;
    for (size_t i = 0; i < melody.size(); ++i)
        notes.push_back({melody[i] + shift, 0.25 * static_cast<double>(i), 0.25 * static_cast<double>(i) + 0.2, 80});
    return notes;
}

inline std::vector<int> excerpt(const std::vector<int>& melody, size_t offset, size_t len) {
    return {melody.begin() + static_cast<long>(offset), melody.begin() + static_cast<long>(offset + len)};
}

}  // namespace muse::testing
