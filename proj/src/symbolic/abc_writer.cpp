#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>

#include "muse/symbolic/abc.hpp"

namespace muse::abc {

namespace {

constexpr std::int64_t kMaxUnitDenominator = 1 << 12;

Fraction unit_for(const std::vector<const Measure*>& measures) {
    // Largest unit fraction dividing every duration; never coarser than 1/4.
    std::int64_t lcm = 4;
    for (const Measure* m : measures) {
        if (!m->time.free) lcm = std::lcm(lcm, m->time.length().den());
        for (const auto& e : m->events) {
            lcm = std::lcm(lcm, e.duration.den());
            lcm = std::lcm(lcm, e.onset.den());
            if (lcm > kMaxUnitDenominator)
                throw Error(ErrorCode::UnrepresentableDuration,
                            "duration " + e.duration.str() + " in measure " + std::to_string(m->index) +
                                " needs a unit length finer than 1/" + std::to_string(kMaxUnitDenominator));
        }
    }
    return Fraction(1, lcm);
}

std::string length_text(Fraction duration, Fraction unit, int measure_index) {
    const Fraction k = duration / unit;
    if (k.den() != 1 || k.num() <= 0)
        throw Error(ErrorCode::UnrepresentableDuration, "duration " + duration.str() + " in measure " +
                                                            std::to_string(measure_index) +
                                                            " is not a multiple of L:" + unit.str());
    return k.num() == 1 ? std::string() : std::to_string(k.num());
}

std::string accidental_text(int alter) {
    switch (alter) {
        case 2: return "^^";
        case 1: return "^";
        case 0: return "=";
        case -1: return "_";
        case -2: return "__";
        default: throw Error(ErrorCode::UnrepresentableDuration, "alteration beyond a double sharp or flat");
    }
}

class MeasureWriter {
public:
    MeasureWriter(Fraction unit, KeySignature key) : unit_(unit), key_(std::move(key)) {}

    std::string voice(const Measure& m, const std::string& voice_id) {
        accidentals_.clear();
        std::string out;
        Fraction position;
        bool any = false;
        for (const NoteEvent* e : m.events_for(voice_id)) {
            if (e->onset > position) out += "x" + length_text(e->onset - position, unit_, m.index);
            out += event(*e, m.index);
            position = e->onset + e->duration;
            any = true;
        }
        if (!any && !m.time.free) out += "z" + length_text(m.time.length(), unit_, m.index);
        return out;
    }

private:
    std::string pitch(const Pitch& p) {
        std::string out;
        const auto key = std::make_pair(p.step, p.octave);
        const auto it = accidentals_.find(key);
        const int implied = it != accidentals_.end() ? it->second : key_.alter_for(p.step);
        if (p.alter != implied) {
            out += accidental_text(p.alter);
            accidentals_[key] = p.alter;
        }
        if (p.octave >= 5) {
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(p.step)));
            out += std::string(static_cast<size_t>(p.octave - 5), '\'');
        } else {
            out += p.step;
            out += std::string(static_cast<size_t>(4 - p.octave), ',');
        }
        return out;
    }

    std::string event(const NoteEvent& e, int measure_index) {
        const std::string len = length_text(e.duration, unit_, measure_index);
        std::string out;
        if (e.is_rest()) {
            out = "z" + len;
        } else if (e.pitches.size() == 1) {
            out = pitch(e.pitches[0]) + len;
        } else {
            out = "[";
            for (const auto& p : e.pitches) out += pitch(p);
            out += "]" + len;
        }
        if (e.tie_start) out += "-";
        return out;
    }

    Fraction unit_;
    KeySignature key_;
    std::map<std::pair<char, int>, int> accidentals_;
};

bool needs_voice_fields(const Score& score) {
    return score.voices.size() > 1 || (score.voices.size() == 1 && score.voices[0] != "1");
}

std::string unit_text(Fraction unit) { return std::to_string(unit.num()) + "/" + std::to_string(unit.den()); }

// Barline written after measure i.
std::string barline_after(const Score& score, size_t i) {
    const Measure& m = score.measures[i];
    const Measure* next = i + 1 < score.measures.size() ? &score.measures[i + 1] : nullptr;
    if (!next) return m.repeat_end ? ":|" : "|]";
    if (m.repeat_end && next->repeat_start) return "::";
    if (m.repeat_end) return ":|";
    if (next->repeat_start) return "|:";
    if (m.ending != 0 && next->ending == 0) return "||";
    return "|";
}

// Volta mark opening measure i, if it starts a new ending.
std::string volta_before(const Score& score, size_t i) {
    const Measure& m = score.measures[i];
    if (m.ending == 0) return "";
    if (i > 0) {
        const Measure& prev = score.measures[i - 1];
        const bool continues = prev.ending == m.ending && !prev.repeat_end && !m.repeat_start;
        if (continues) return "";
    }
    return "[" + std::to_string(m.ending) + " ";
}

}  // namespace

std::string serialize(const Score& score) {
    validate(score);
    std::vector<const Measure*> all;
    for (const auto& m : score.measures) all.push_back(&m);
    const Fraction unit = unit_for(all);

    const TimeSignature first_meter = score.measures.empty() ? TimeSignature{} : score.measures[0].time;
    const KeySignature first_key = score.measures.empty() ? KeySignature{} : score.measures[0].key;

    std::string out = "X:1\n";
    if (!score.title.empty()) out += "T:" + score.title + "\n";
    if (!score.composer.empty()) out += "C:" + score.composer + "\n";
    out += "M:" + first_meter.str() + "\n";
    out += "L:" + unit_text(unit) + "\n";
    const bool voice_fields = needs_voice_fields(score);
    if (voice_fields)
        for (const auto& v : score.voices) out += "V:" + v + "\n";
    out += "K:" + first_key.abc_name() + "\n";

    const std::vector<std::string> voices = score.voices.empty() ? std::vector<std::string>{"1"} : score.voices;
    for (const auto& voice : voices) {
        if (voice_fields) out += "V:" + voice + "\n";
        TimeSignature meter = first_meter;
        KeySignature key = first_key;
        std::string line;
        for (size_t i = 0; i < score.measures.size(); ++i) {
            const Measure& m = score.measures[i];
            if (i == 0 && m.repeat_start) line += "|:";
            line += volta_before(score, i);
            if (!(m.time == meter)) {
                line += "[M:" + m.time.str() + "]";
                meter = m.time;
            }
            if (!(m.key == key)) {
                line += "[K:" + m.key.abc_name() + "]";
                key = m.key;
            }
            line += MeasureWriter(unit, key).voice(m, voice);
            line += barline_after(score, i);
            if ((i + 1) % 4 == 0 || i + 1 == score.measures.size()) {
                out += line + "\n";
                line.clear();
            } else {
                line += " ";
            }
        }
    }
    return out;
}

std::vector<MeasureFragment> split_measures(const Score& score) {
    validate(score);
    const bool voice_fields = needs_voice_fields(score);
    const std::vector<std::string> voices = score.voices.empty() ? std::vector<std::string>{"1"} : score.voices;
    std::vector<MeasureFragment> fragments;
    fragments.reserve(score.measures.size());
    for (const auto& m : score.measures) {
        const Fraction unit = unit_for({&m});
        const std::string fields = "[K:" + m.key.abc_name() + "][L:" + unit_text(unit) + "]";
        std::string text;
        for (const auto& voice : voices) {
            // Key and unit are per voice, so they follow every voice switch.
            if (voice_fields) text += "[V:" + voice + "]";
            text += fields;
            if (m.repeat_start) text += "|:";
            if (m.ending != 0) text += "[" + std::to_string(m.ending) + " ";
            text += MeasureWriter(unit, m.key).voice(m, voice);
            text += m.repeat_end ? ":|" : "|";
        }
        fragments.push_back({std::move(text), m.time});
    }
    return fragments;
}

Score concat_measures(const std::vector<MeasureFragment>& fragments) {
    Score out;
    for (size_t i = 0; i < fragments.size(); ++i) {
        const auto& f = fragments[i];
        const std::string doc = "X:1\nM:" + f.time.str() + "\nL:1/4\nK:C\n" + f.abc + "\n";
        Score part;
        try {
            part = parse(doc);
        } catch (const Error& e) {
            throw Error(ErrorCode::FragmentParseError, "fragment " + std::to_string(i) + ": " + e.what());
        }
        if (part.measures.size() > 1)
            throw Error(ErrorCode::FragmentParseError, "fragment " + std::to_string(i) + " contains " +
                                                           std::to_string(part.measures.size()) + " measures");
        Measure m;
        if (!part.measures.empty()) m = std::move(part.measures[0]);
        m.index = static_cast<int>(i);
        m.time = f.time;
        if (i == 0) out.default_unit_length = part.default_unit_length;
        for (const auto& v : part.voices)
            if (std::find(out.voices.begin(), out.voices.end(), v) == out.voices.end()) out.voices.push_back(v);
        out.measures.push_back(std::move(m));
    }
    // Fragments are parsed in isolation, so ties crossing a fragment boundary
    // are reconnected here.
    std::map<std::string, const NoteEvent*> previous;
    for (auto& m : out.measures)
        for (auto& e : m.events) {
            const NoteEvent*& prev = previous[e.voice];
            if (prev && prev->tie_start && !e.is_rest())
                for (const auto& p : e.pitches)
                    for (const auto& q : prev->pitches)
                        if (p.midi() == q.midi()) e.tie_end = true;
            prev = &e;
        }
    return out;
}

}  // namespace muse::abc
