#pragma once

#include <optional>
#include <string>
#include <vector>

#include "muse/symbolic/fraction.hpp"

namespace muse {

using Duration = Fraction;

struct Pitch {
    char step = 'C';  // 'A'..'G'
    int alter = 0;    // signed semitones
    int octave = 4;   // scientific pitch notation, C4 = middle C

    int midi() const;
    static Pitch from_midi(int midi_number);

    friend bool operator==(const Pitch&, const Pitch&) = default;
};

int diatonic_semitone(char step);

struct PitchRange {
    int lowest = 21;
    int highest = 108;
    bool contains(int midi) const { return midi >= lowest && midi <= highest; }
};

struct TimeSignature {
    int numerator = 4;
    int denominator = 4;
    bool free = false;  // "M:none"

    Fraction length() const { return Fraction(numerator, denominator); }
    std::string str() const;
    static TimeSignature parse(const std::string& text);

    friend bool operator==(const TimeSignature&, const TimeSignature&) = default;
};

struct KeySignature {
    int fifths = 0;
    std::string mode = "major";

    /// Alteration the signature applies to a step ('F' in G major -> +1).
    int alter_for(char step) const;
    /// Key name in ABC spelling, e.g. "G", "Am", "Ddor".
    std::string abc_name() const;
    /// Parses an ABC K: value ("G", "F#m", "Bb mix", "none").
    static KeySignature parse_abc(const std::string& text);

    friend bool operator==(const KeySignature&, const KeySignature&) = default;
};

/// Written note, chord or rest. Onset is measured from the start of the
/// containing measure, in whole notes. An empty pitch list is a rest.
struct NoteEvent {
    Fraction onset;
    Duration duration{1, 4};
    std::vector<Pitch> pitches;
    std::string voice = "1";
    bool tie_start = false;
    bool tie_end = false;

    bool is_rest() const { return pitches.empty(); }
};

struct Measure {
    int index = 0;
    TimeSignature time;
    KeySignature key;
    std::vector<NoteEvent> events;  // grouped by voice, onset order within a voice
    // Shorter than its meter: an anacrusis or a closing partial bar.
    bool pickup = false;
    bool repeat_start = false;
    bool repeat_end = false;
    int ending = 0;  // volta number, 0 outside endings

    std::vector<const NoteEvent*> events_for(const std::string& voice) const;
};

struct Score {
    std::string title;
    std::string composer;
    Fraction default_unit_length{1, 8};
    std::vector<Measure> measures;
    std::vector<std::string> voices;
};

/// Throws muse::Error(InvalidArgument) when measure indices are not 0..n-1,
/// an event's voice is undeclared, or a chord repeats a pitch.
void validate(const Score& score);

/// Measure order after unrolling repeats and voltas.
std::vector<int> playback_order(const Score& score);

/// One sounding pitch after tie merging and repeat unrolling. Onset is the
/// absolute position from the start of the performance, in whole notes.
struct SoundingNote {
    int midi = 0;
    Fraction onset;
    Duration duration;
    std::string voice;
    int measure_index = 0;
};

std::vector<SoundingNote> sounding_notes(const Score& score);

/// Compares two scores measure by measure: meters, repeat structure and every
/// pitched event (voice, onset, duration, MIDI pitch set, ties). Rests are
/// ignored so an empty measure equals a measure filled with a rest. Returns a
/// description of the first difference, or nullopt when equivalent.
std::optional<std::string> event_difference(const Score& a, const Score& b);
inline bool event_equivalent(const Score& a, const Score& b) { return !event_difference(a, b); }

}  // namespace muse
