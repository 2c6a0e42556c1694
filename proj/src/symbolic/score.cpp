#include "muse/symbolic/score.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "muse/common/error.hpp"

namespace muse {

int diatonic_semitone(char step) {
    switch (std::toupper(static_cast<unsigned char>(step))) {
        case 'C': return 0;
        case 'D': return 2;
        case 'E': return 4;
        case 'F': return 5;
        case 'G': return 7;
        case 'A': return 9;
        case 'B': return 11;
        default: throw Error(ErrorCode::InvalidArgument, std::string("invalid pitch step '") + step + "'");
    }
}

int Pitch::midi() const { return 12 * (octave + 1) + diatonic_semitone(step) + alter; }

Pitch Pitch::from_midi(int midi_number) {
    // Sharp spelling for black keys.
    static constexpr char kSteps[12] = {'C', 'C', 'D', 'D', 'E', 'F', 'F', 'G', 'G', 'A', 'A', 'B'};
    static constexpr int kAlters[12] = {0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 1, 0};
    const int pc = ((midi_number % 12) + 12) % 12;
    const int octave = (midi_number - pc) / 12 - 1;
    return Pitch{kSteps[pc], kAlters[pc], octave};
}

std::string TimeSignature::str() const {
    if (free) return "none";
    return std::to_string(numerator) + "/" + std::to_string(denominator);
}

TimeSignature TimeSignature::parse(const std::string& raw) {
    std::string text;
    for (char c : raw)
        if (!std::isspace(static_cast<unsigned char>(c))) text += c;
    if (text == "C") return {4, 4, false};
    if (text == "C|") return {2, 2, false};
    if (text.empty() || text == "none") return {4, 4, true};
    const auto slash = text.find('/');
    if (slash == std::string::npos) throw Error(ErrorCode::MalformedHeader, "invalid meter '" + raw + "'");
    try {
        // Additive numerators such as 2+3/8 are summed.
        int num = 0;
        std::stringstream parts(text.substr(0, slash));
        std::string part;
        while (std::getline(parts, part, '+')) num += std::stoi(part);
        const int den = std::stoi(text.substr(slash + 1));
        if (num <= 0 || den <= 0) throw std::invalid_argument("non-positive");
        return {num, den, false};
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::MalformedHeader, "invalid meter '" + raw + "'");
    }
}

namespace {

constexpr const char* kSharpOrder = "FCGDAEB";
constexpr const char* kFlatOrder = "BEADGCF";

int mode_offset(const std::string& mode) {
    if (mode == "major" || mode == "ionian") return 0;
    if (mode == "minor" || mode == "aeolian") return -3;
    if (mode == "dorian") return -2;
    if (mode == "phrygian") return -4;
    if (mode == "lydian") return 1;
    if (mode == "mixolydian") return -1;
    if (mode == "locrian") return -5;
    return 0;
}

std::string mode_suffix(const std::string& mode) {
    if (mode == "major" || mode == "ionian") return "";
    if (mode == "minor" || mode == "aeolian") return "m";
    if (mode == "dorian") return "dor";
    if (mode == "phrygian") return "phr";
    if (mode == "lydian") return "lyd";
    if (mode == "mixolydian") return "mix";
    if (mode == "locrian") return "loc";
    return "";
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

int KeySignature::alter_for(char step) const {
    const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(step)));
    if (fifths > 0) {
        for (int i = 0; i < std::min(fifths, 7); ++i)
            if (kSharpOrder[i] == up) return 1;
    } else if (fifths < 0) {
        for (int i = 0; i < std::min(-fifths, 7); ++i)
            if (kFlatOrder[i] == up) return -1;
    }
    return 0;
}

std::string KeySignature::abc_name() const {
    const int tonic = fifths - mode_offset(mode);
    // F sits at -1 on the line of fifths.
    const int idx = tonic + 1;
    const int letter = ((idx % 7) + 7) % 7;
    const int accidentals = (idx - letter) / 7;
    std::string name(1, kSharpOrder[letter]);
    if (accidentals > 0) name += std::string(static_cast<size_t>(accidentals), '#');
    if (accidentals < 0) name += std::string(static_cast<size_t>(-accidentals), 'b');
    return name + mode_suffix(mode);
}

KeySignature KeySignature::parse_abc(const std::string& raw) {
    std::string text = raw;
    // Drop clef=, transpose= and similar modifiers.
    std::stringstream words(text);
    std::string first;
    words >> first;
    if (first.empty() || lower(first) == "none" || first.find('=') != std::string::npos) return {};
    if (first == "HP" || first == "Hp") return {};  // highland pipes: treated as C

    const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(first[0])));
    const char* pos = std::char_traits<char>::find(kSharpOrder, 7, letter);
    if (!pos) throw Error(ErrorCode::MalformedHeader, "invalid key '" + raw + "'");
    int tonic = static_cast<int>(pos - kSharpOrder) - 1;
    size_t i = 1;
    if (i < first.size() && (first[i] == '#' || first[i] == 'b')) {
        tonic += first[i] == '#' ? 7 : -7;
        ++i;
    }
    std::string mode_text = lower(first.substr(i));
    std::string next;
    if (mode_text.empty() && (words >> next) && next.find('=') == std::string::npos) mode_text = lower(next);

    KeySignature key;
    if (mode_text.empty() || mode_text.rfind("maj", 0) == 0 || mode_text.rfind("ion", 0) == 0) key.mode = "major";
    else if (mode_text == "m" || mode_text.rfind("min", 0) == 0 || mode_text.rfind("aeo", 0) == 0) key.mode = "minor";
    else if (mode_text.rfind("dor", 0) == 0) key.mode = "dorian";
    else if (mode_text.rfind("phr", 0) == 0) key.mode = "phrygian";
    else if (mode_text.rfind("lyd", 0) == 0) key.mode = "lydian";
    else if (mode_text.rfind("mix", 0) == 0) key.mode = "mixolydian";
    else if (mode_text.rfind("loc", 0) == 0) key.mode = "locrian";
    else throw Error(ErrorCode::MalformedHeader, "invalid key mode '" + raw + "'");
    key.fifths = tonic + mode_offset(key.mode);
    return key;
}

std::vector<const NoteEvent*> Measure::events_for(const std::string& voice) const {
    std::vector<const NoteEvent*> out;
    for (const auto& e : events)
        if (e.voice == voice) out.push_back(&e);
    return out;
}

void validate(const Score& score) {
    const std::set<std::string> voices(score.voices.begin(), score.voices.end());
    for (size_t i = 0; i < score.measures.size(); ++i) {
        const auto& m = score.measures[i];
        if (m.index != static_cast<int>(i))
            throw Error(ErrorCode::InvalidArgument, "measure indices are not contiguous at " + std::to_string(i));
        for (const auto& e : m.events) {
            if (!voices.count(e.voice))
                throw Error(ErrorCode::InvalidArgument, "event voice '" + e.voice + "' not declared");
            if (e.onset < Fraction(0)) throw Error(ErrorCode::InvalidArgument, "negative onset");
            std::set<int> seen;
            for (const auto& p : e.pitches)
                if (!seen.insert(p.midi()).second)
                    throw Error(ErrorCode::InvalidArgument, "duplicate chord pitch in measure " + std::to_string(i));
        }
    }
}

namespace {

int ending_passes(const Score& score, size_t i) {
    int highest = 1;
    size_t lo = i, hi = i;
    while (lo > 0 && score.measures[lo - 1].ending != 0) --lo;
    while (hi + 1 < score.measures.size() && score.measures[hi + 1].ending != 0) ++hi;
    for (size_t k = lo; k <= hi; ++k) highest = std::max(highest, score.measures[k].ending);
    return std::max(2, highest);
}

Fraction measure_span(const Measure& m) {
    Fraction end;
    bool any = false;
    for (const auto& e : m.events) {
        end = std::max(end, e.onset + e.duration);
        any = true;
    }
    if (!any) return m.time.length();
    return end;
}

}  // namespace

std::vector<int> playback_order(const Score& score) {
    constexpr size_t kNone = static_cast<size_t>(-1);
    std::vector<int> order;
    const size_t n = score.measures.size();
    size_t start = 0;
    size_t jumped_from = kNone;  // repeat barline that started the current pass
    int pass = 1;
    size_t i = 0;
    while (i < n) {
        const auto& m = score.measures[i];
        if (pass > 1 && jumped_from != kNone && i > jumped_from && (m.ending == 0 || m.repeat_start)) {
            pass = 1;
            start = i;
            jumped_from = kNone;
        }
        if (m.repeat_start && pass == 1) start = i;
        if (m.ending != 0 && m.ending != pass) {
            ++i;
            continue;
        }
        order.push_back(static_cast<int>(i));
        if (m.repeat_end) {
            const int total = m.ending != 0 ? ending_passes(score, i) : 2;
            if (pass < total) {
                ++pass;
                jumped_from = i;
                i = start;
                continue;
            }
            if (jumped_from == kNone) jumped_from = i;
            else jumped_from = std::max(jumped_from, i);
        }
        ++i;
    }
    return order;
}

std::vector<SoundingNote> sounding_notes(const Score& score) {
    std::vector<SoundingNote> notes;
    // (voice, midi) -> index of a note whose tie is still open
    std::map<std::pair<std::string, int>, size_t> open_ties;
    Fraction offset;
    for (int mi : playback_order(score)) {
        const auto& m = score.measures[static_cast<size_t>(mi)];
        std::vector<const NoteEvent*> events;
        for (const auto& e : m.events) events.push_back(&e);
        std::stable_sort(events.begin(), events.end(),
                         [](const NoteEvent* a, const NoteEvent* b) { return a->onset < b->onset; });
        for (const NoteEvent* e : events) {
            if (e->is_rest()) continue;
            const Fraction start = offset + e->onset;
            for (const auto& p : e->pitches) {
                const auto key = std::make_pair(e->voice, p.midi());
                auto it = open_ties.find(key);
                size_t idx;
                if (it != open_ties.end() && notes[it->second].onset + notes[it->second].duration == start) {
                    idx = it->second;
                    notes[idx].duration += e->duration;
                } else {
                    idx = notes.size();
                    notes.push_back(SoundingNote{p.midi(), start, e->duration, e->voice, mi});
                }
                if (e->tie_start) open_ties[key] = idx;
                else if (it != open_ties.end()) open_ties.erase(it);
            }
        }
        offset += measure_span(m);
    }
    std::stable_sort(notes.begin(), notes.end(), [](const SoundingNote& a, const SoundingNote& b) {
        if (a.onset != b.onset) return a.onset < b.onset;
        return a.midi < b.midi;
    });
    return notes;
}

namespace {

struct EventKey {
    std::string voice;
    Fraction onset;
    Fraction duration;
    std::vector<int> midis;
    bool tie_start;
    bool tie_end;

    auto tie() const { return std::tie(voice, onset, duration, midis, tie_start, tie_end); }
    bool operator<(const EventKey& o) const { return tie() < o.tie(); }
    bool operator==(const EventKey& o) const { return tie() == o.tie(); }
};

std::vector<EventKey> pitched(const Measure& m) {
    std::vector<EventKey> keys;
    for (const auto& e : m.events) {
        if (e.is_rest()) continue;
        EventKey k{e.voice, e.onset, e.duration, {}, e.tie_start, e.tie_end};
        for (const auto& p : e.pitches) k.midis.push_back(p.midi());
        std::sort(k.midis.begin(), k.midis.end());
        keys.push_back(std::move(k));
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

std::string describe(const EventKey& k) {
    std::string s = "voice " + k.voice + " onset " + k.onset.str() + " dur " + k.duration.str() + " pitches";
    for (int m : k.midis) s += " " + std::to_string(m);
    if (k.tie_start) s += " tie-start";
    if (k.tie_end) s += " tie-end";
    return s;
}

}  // namespace

std::optional<std::string> event_difference(const Score& a, const Score& b) {
    if (a.measures.size() != b.measures.size())
        return "measure count " + std::to_string(a.measures.size()) + " vs " + std::to_string(b.measures.size());
    for (size_t i = 0; i < a.measures.size(); ++i) {
        const auto& ma = a.measures[i];
        const auto& mb = b.measures[i];
        const std::string where = "measure " + std::to_string(i) + ": ";
        if (!(ma.time == mb.time)) return where + "meter " + ma.time.str() + " vs " + mb.time.str();
        if (ma.repeat_start != mb.repeat_start || ma.repeat_end != mb.repeat_end || ma.ending != mb.ending)
            return where + "repeat structure differs";
        const auto ka = pitched(ma);
        const auto kb = pitched(mb);
        if (ka.size() != kb.size())
            return where + "event count " + std::to_string(ka.size()) + " vs " + std::to_string(kb.size());
        for (size_t j = 0; j < ka.size(); ++j)
            if (!(ka[j] == kb[j])) return where + describe(ka[j]) + " vs " + describe(kb[j]);
    }
    return std::nullopt;
}

}  // namespace muse
