#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "muse/symbolic/abc.hpp"

namespace muse::abc {

namespace {

Fraction parse_length(std::string_view s) {
    size_t i = 0;
    std::int64_t num = 1;
    std::int64_t den = 1;
    if (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
        num = 0;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) num = num * 10 + (s[i++] - '0');
    }
    while (i < s.size() && s[i] == '/') {
        ++i;
        if (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
            std::int64_t d = 0;
            while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) d = d * 10 + (s[i++] - '0');
            den *= std::max<std::int64_t>(d, 1);
        } else {
            den *= 2;
        }
    }
    if (num == 0) num = 1;
    return Fraction(num, den);
}

Fraction parse_unit(const std::string& value) {
    const auto slash = value.find('/');
    try {
        if (slash == std::string::npos) return Fraction(std::stoll(value), 1);
        return Fraction(std::stoll(value.substr(0, slash)), std::stoll(value.substr(slash + 1)));
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::MalformedHeader, "invalid unit length '" + value + "'");
    }
}

std::string first_word(const std::string& s) {
    std::stringstream ss(s);
    std::string w;
    ss >> w;
    return w;
}

struct NoteSpec {
    Pitch pitch;
    Fraction multiplier;
};

struct VoiceState {
    std::string id;
    TimeSignature meter;
    KeySignature key;
    Fraction unit{1, 8};

    int measure = 0;            // index of the measure being filled
    bool open = false;          // has the current measure received events
    Fraction position;          // within the current measure
    std::map<std::pair<char, int>, int> accidentals;

    bool next_repeat_start = false;
    int ending = 0;  // active volta number

    int tuplet_remaining = 0;
    Fraction tuplet_factor{1};
    Fraction broken_next{1};

    // Last event written in this voice: measure index and event index.
    int last_measure = -1;
    size_t last_event = 0;
    std::vector<int> tie_pending;  // MIDI numbers awaiting a tie continuation

    // chord accumulation
    bool in_chord = false;
    std::vector<Pitch> chord_pitches;
    Fraction chord_base{1};
    bool chord_tie = false;
};

class Parser {
public:
    Parser(std::string_view text, const ParseOptions& options) : tokens_(tokenize(text)), options_(options) {}

    Score run() {
        bool seen_key = false;
        for (const auto& tok : tokens_) {
            if (tok.kind == TokenKind::header_field && tok.field == 'X') {
                if (seen_key) break;  // second tune
                continue;
            }
            if (!seen_key) {
                header_token(tok);
                if (tok.kind == TokenKind::key) {
                    seen_key = true;
                    start_body();
                }
                continue;
            }
            body_token(tok);
        }
        if (!seen_key) throw Error(ErrorCode::MissingKeyHeader, "ABC tune has no K: header");
        for (auto& [id, v] : voices_) close_measure(v, "", true);
        return finish();
    }

private:
    void header_token(const Token& tok) {
        switch (tok.kind) {
            case TokenKind::header_field:
                if (tok.field == 'T' && score_.title.empty()) score_.title = tok.value;
                else if (tok.field == 'C' && score_.composer.empty()) score_.composer = tok.value;
                else if (tok.field == 'V') declare_voice(first_word(tok.value));
                break;
            case TokenKind::meter: default_meter_ = TimeSignature::parse(tok.value); break;
            case TokenKind::unit_length:
                default_unit_ = parse_unit(tok.value);
                unit_set_ = true;
                break;
            case TokenKind::key: default_key_ = KeySignature::parse_abc(tok.value); break;
            case TokenKind::end_of_input: break;
            default:
                throw Error(ErrorCode::MissingKeyHeader,
                            "line " + std::to_string(tok.line) + ": music before any K: header");
        }
    }

    void start_body() {
        if (!unit_set_) {
            const bool short_meter = !default_meter_.free && default_meter_.length() < Fraction(3, 4);
            default_unit_ = short_meter ? Fraction(1, 16) : Fraction(1, 8);
        }
        score_.default_unit_length = default_unit_;
        for (auto& [id, v] : voices_) {
            v.meter = default_meter_;
            v.key = default_key_;
            v.unit = default_unit_;
        }
        current_ = voice_order_.empty() ? &declare_voice("1") : &voices_.at(voice_order_.front());
    }

    VoiceState& declare_voice(const std::string& raw_id) {
        const std::string id = raw_id.empty() ? "1" : raw_id;
        auto it = voices_.find(id);
        if (it != voices_.end()) return it->second;
        VoiceState v;
        v.id = id;
        v.meter = default_meter_;
        v.key = default_key_;
        v.unit = default_unit_;
        voice_order_.push_back(id);
        return voices_.emplace(id, std::move(v)).first->second;
    }

    void apply_field(char field, const std::string& value) {
        VoiceState& v = *current_;
        switch (field) {
            case 'M': v.meter = TimeSignature::parse(value); break;
            case 'L': v.unit = parse_unit(value); break;
            case 'K':
                v.key = KeySignature::parse_abc(value);
                break;
            case 'V': current_ = &declare_voice(first_word(value)); break;
            default: break;
        }
    }

    void body_token(const Token& tok) {
        VoiceState& v = *current_;
        switch (tok.kind) {
            case TokenKind::key: apply_field('K', tok.value); break;
            case TokenKind::meter: apply_field('M', tok.value); break;
            case TokenKind::unit_length: apply_field('L', tok.value); break;
            case TokenKind::header_field:
            case TokenKind::inline_field: apply_field(tok.field, tok.value); break;
            case TokenKind::note: note_token(v, tok); break;
            case TokenKind::rest: rest_token(v, tok); break;
            case TokenKind::chord_open:
                v.in_chord = true;
                v.chord_pitches.clear();
                v.chord_tie = false;
                v.chord_base = Fraction(1);
                break;
            case TokenKind::chord_close: chord_close(v, tok); break;
            case TokenKind::tie:
                if (v.in_chord) v.chord_tie = true;
                else mark_tie(v);
                break;
            case TokenKind::broken_rhythm: broken(v, tok.lexeme); break;
            case TokenKind::tuplet: tuplet(v, tok.lexeme); break;
            case TokenKind::barline: barline(v, tok.lexeme); break;
            case TokenKind::decoration:
            case TokenKind::end_of_input: break;
        }
    }

    NoteSpec read_note(VoiceState& v, const Token& tok) {
        const std::string& s = tok.lexeme;
        size_t i = 0;
        int explicit_alter = 0;
        bool has_accidental = false;
        while (i < s.size() && (s[i] == '^' || s[i] == '_' || s[i] == '=')) {
            has_accidental = true;
            if (s[i] == '^') ++explicit_alter;
            if (s[i] == '_') --explicit_alter;
            ++i;
        }
        const char letter = s[i++];
        Pitch p;
        p.step = static_cast<char>(std::toupper(static_cast<unsigned char>(letter)));
        p.octave = std::islower(static_cast<unsigned char>(letter)) ? 5 : 4;
        while (i < s.size() && (s[i] == ',' || s[i] == '\'')) p.octave += s[i++] == '\'' ? 1 : -1;
        const auto acc_key = std::make_pair(p.step, p.octave);
        if (has_accidental) {
            p.alter = explicit_alter;
            v.accidentals[acc_key] = explicit_alter;
        } else if (auto it = v.accidentals.find(acc_key); it != v.accidentals.end()) {
            p.alter = it->second;
        } else {
            p.alter = v.key.alter_for(p.step);
        }
        if (options_.check_range && !options_.range.contains(p.midi()))
            throw Error(ErrorCode::PitchOutOfRange, "line " + std::to_string(tok.line) + ": pitch " +
                                                        std::to_string(p.midi()) + " outside the allowed range");
        return {p, parse_length(std::string_view(s).substr(i))};
    }

    void note_token(VoiceState& v, const Token& tok) {
        NoteSpec spec = read_note(v, tok);
        if (v.in_chord) {
            if (v.chord_pitches.empty()) v.chord_base = spec.multiplier;
            const bool dup = std::any_of(v.chord_pitches.begin(), v.chord_pitches.end(),
                                         [&](const Pitch& q) { return q.midi() == spec.pitch.midi(); });
            if (!dup) v.chord_pitches.push_back(spec.pitch);
            return;
        }
        add_event(v, {spec.pitch}, v.unit * spec.multiplier);
    }

    void chord_close(VoiceState& v, const Token& tok) {
        v.in_chord = false;
        const Fraction outer = parse_length(std::string_view(tok.lexeme).substr(1));
        if (v.chord_pitches.empty()) return;  // "[]" carries no event
        add_event(v, v.chord_pitches, v.unit * v.chord_base * outer);
        if (v.chord_tie) mark_tie(v);
    }

    void rest_token(VoiceState& v, const Token& tok) {
        const char kind = tok.lexeme[0];
        const Fraction len = parse_length(std::string_view(tok.lexeme).substr(1));
        if (kind == 'Z' || kind == 'X') {
            // Multi-measure rest: the length counts whole measures.
            const std::int64_t bars = len.num() / len.den();
            for (std::int64_t b = 0; b < std::max<std::int64_t>(bars, 1); ++b) {
                if (b > 0) close_measure(v, "|", false);
                add_event(v, {}, v.meter.length());
            }
            return;
        }
        add_event(v, {}, v.unit * len);
    }

    Measure& measure_at(VoiceState& v) {
        while (score_.measures.size() <= static_cast<size_t>(v.measure)) {
            Measure m;
            m.index = static_cast<int>(score_.measures.size());
            m.time = v.meter;
            m.key = v.key;
            score_.measures.push_back(std::move(m));
        }
        return score_.measures[static_cast<size_t>(v.measure)];
    }

    void add_event(VoiceState& v, std::vector<Pitch> pitches, Fraction duration) {
        if (v.tuplet_remaining > 0) {
            duration *= v.tuplet_factor;
            --v.tuplet_remaining;
        }
        if (v.broken_next != Fraction(1)) {
            duration *= v.broken_next;
            v.broken_next = Fraction(1);
        }
        Measure& m = measure_at(v);
        if (!v.open) {
            v.open = true;
            if (v.next_repeat_start) m.repeat_start = true;
            if (v.ending != 0) m.ending = v.ending;
            v.next_repeat_start = false;
        }
        NoteEvent e;
        e.onset = v.position;
        e.duration = duration;
        e.voice = v.id;
        if (!pitches.empty() && !v.tie_pending.empty()) {
            for (const auto& p : pitches)
                if (std::find(v.tie_pending.begin(), v.tie_pending.end(), p.midi()) != v.tie_pending.end())
                    e.tie_end = true;
        }
        v.tie_pending.clear();
        e.pitches = std::move(pitches);
        m.events.push_back(std::move(e));
        v.position += duration;
        v.last_measure = v.measure;
        v.last_event = m.events.size() - 1;
    }

    NoteEvent* last_event(VoiceState& v) {
        if (v.last_measure < 0) return nullptr;
        return &score_.measures[static_cast<size_t>(v.last_measure)].events[v.last_event];
    }

    void mark_tie(VoiceState& v) {
        NoteEvent* e = last_event(v);
        if (!e || e->is_rest()) return;
        e->tie_start = true;
        v.tie_pending.clear();
        for (const auto& p : e->pitches) v.tie_pending.push_back(p.midi());
    }

    void broken(VoiceState& v, const std::string& lexeme) {
        NoteEvent* e = last_event(v);
        if (!e || v.last_measure != v.measure || !v.open) return;
        const auto n = static_cast<std::int64_t>(lexeme.size());
        const Fraction shortened(1, std::int64_t{1} << n);
        const Fraction lengthened = Fraction(2) - shortened;
        const bool dotted_first = lexeme[0] == '>';
        const Fraction first = dotted_first ? lengthened : shortened;
        const Fraction old = e->duration;
        e->duration = old * first;
        v.position += e->duration - old;
        v.broken_next = dotted_first ? shortened : lengthened;
    }

    void tuplet(VoiceState& v, const std::string& lexeme) {
        std::vector<int> parts;
        std::string cur;
        for (size_t i = 1; i <= lexeme.size(); ++i) {
            if (i == lexeme.size() || lexeme[i] == ':') {
                parts.push_back(cur.empty() ? 0 : std::stoi(cur));
                cur.clear();
            } else {
                cur += lexeme[i];
            }
        }
        const int p = parts.empty() ? 3 : std::max(parts[0], 1);
        int q = parts.size() > 1 ? parts[1] : 0;
        const int r = parts.size() > 2 && parts[2] > 0 ? parts[2] : p;
        if (q == 0) {
            switch (p) {
                case 2: q = 3; break;
                case 3: q = 2; break;
                case 4: q = 3; break;
                case 6: q = 2; break;
                case 8: q = 3; break;
                default: {
                    const bool compound = !v.meter.free && v.meter.numerator % 3 == 0 && v.meter.numerator > 3;
                    q = compound ? 3 : 2;
                }
            }
        }
        v.tuplet_factor = Fraction(q, p);
        v.tuplet_remaining = r;
    }

    void barline(VoiceState& v, const std::string& lexeme) {
        if (lexeme[0] == '[' && lexeme.size() > 1 && std::isdigit(static_cast<unsigned char>(lexeme[1]))) {
            v.ending = std::stoi(lexeme.substr(1));
            if (v.open) {
                // Volta mark inside a bar: applies to the bar being written.
                measure_at(v).ending = v.ending;
            }
            return;
        }
        close_measure(v, lexeme, false);
    }

    void close_measure(VoiceState& v, const std::string& lexeme, bool at_end) {
        const bool ends_repeat = !lexeme.empty() && lexeme[0] == ':';
        const bool starts_repeat = lexeme.size() > 1 && lexeme.back() == ':';
        const bool double_bar = lexeme.find("||") != std::string::npos || lexeme.find("|]") != std::string::npos ||
                                lexeme.rfind("[|", 0) == 0;
        int new_ending = 0;
        if (const auto pipe = lexeme.find_last_of('|'); pipe != std::string::npos && pipe + 1 < lexeme.size() &&
                                                          std::isdigit(static_cast<unsigned char>(lexeme[pipe + 1])))
            new_ending = std::stoi(lexeme.substr(pipe + 1));

        if (v.open) {
            Measure& m = measure_at(v);
            if (ends_repeat) m.repeat_end = true;
            check_length(v, m);
            v.open = false;
            ++v.measure;
            v.position = Fraction(0);
            v.accidentals.clear();
            v.broken_next = Fraction(1);
        } else if (ends_repeat && v.measure > 0) {
            score_.measures[static_cast<size_t>(v.measure - 1)].repeat_end = true;
        }
        if (at_end) return;
        if (ends_repeat || starts_repeat || double_bar) v.ending = 0;
        if (new_ending != 0) v.ending = new_ending;
        if (starts_repeat) v.next_repeat_start = true;
    }

    void check_length(VoiceState& v, Measure& m) {
        if (m.time.free) return;
        const Fraction length = m.time.length();
        if (v.position > length)
            throw Error(ErrorCode::MeasureOverflow, "measure " + std::to_string(m.index) + " voice " + v.id +
                                                        " lasts " + v.position.str() + " but meter is " +
                                                        m.time.str());
        if (v.position < length) m.pickup = true;
    }

    Score finish() {
        score_.voices = voice_order_;
        // Voices declared in the header but never used are kept: they
        // carry no events and do not affect validity.
        return std::move(score_);
    }

    std::vector<Token> tokens_;
    ParseOptions options_;
    Score score_;
    std::map<std::string, VoiceState> voices_;
    std::vector<std::string> voice_order_;
    VoiceState* current_ = nullptr;
    TimeSignature default_meter_{4, 4, true};
    KeySignature default_key_;
    Fraction default_unit_{1, 8};
    bool unit_set_ = false;
};

}  // namespace

Score parse(std::string_view text, const ParseOptions& options) { return Parser(text, options).run(); }

}  // namespace muse::abc
