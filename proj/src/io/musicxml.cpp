#include "muse/io/musicxml.hpp"

#include <zlib.h>

#include <algorithm>
#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "muse/common/file.hpp"

namespace muse::io {

namespace pt = boost::property_tree;

namespace {

std::string text_of(const pt::ptree& node, const std::string& path, const std::string& fallback = "") {
    const auto child = node.get_child_optional(path);
    if (!child) return fallback;
    std::string s = child->data();
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return fallback;
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

int int_of(const pt::ptree& node, const std::string& path, int fallback) {
    const std::string s = text_of(node, path);
    if (s.empty()) return fallback;
    try {
        return static_cast<int>(std::lround(std::stod(s)));
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::XmlSyntaxError, "expected a number in <" + path + ">, got '" + s + "'");
    }
}

std::string attr(const pt::ptree& node, const std::string& name) {
    return node.get<std::string>("<xmlattr>." + name, "");
}

std::string mode_name(const std::string& mode) { return mode.empty() ? "major" : mode; }

// Markings that carry no pitch or time information.
constexpr const char* kIgnoredNoteChildren[] = {"notations.articulations", "notations.ornaments",
                                                "notations.dynamics",      "notations.fermata",
                                                "notations.technical",     "lyric"};

struct PendingNote {
    std::string voice;
    Fraction onset;
    Fraction duration;
    std::vector<Pitch> pitches;
    bool tie_start = false;
    bool tie_stop = false;
};

class PartReader {
public:
    PartReader(std::string part_id, Warnings* warnings) : part_(std::move(part_id)), warnings_(warnings) {}

    // First pass: which MusicXML voice numbers occur in this part.
    void scan_voices(const pt::ptree& part) {
        for (const auto& [tag, measure] : part) {
            if (tag != "measure") continue;
            for (const auto& [ntag, note] : measure)
                if (ntag == "note") xml_voices_.insert(text_of(note, "voice", "1"));
        }
        if (xml_voices_.empty()) xml_voices_.insert("1");
    }

    std::vector<std::string> voice_ids() const {
        std::vector<std::string> ids;
        for (const auto& v : ordered_voices()) ids.push_back(voice_id(v));
        return ids;
    }

    /// Reads one <measure> into `out`, whose meter/key are filled in from
    /// the running attributes.
    void read_measure(const pt::ptree& measure, Measure& out, int measure_number) {
        Fraction position;
        Fraction longest;
        std::vector<PendingNote> notes;
        notes.reserve(measure.size());
        PendingNote* last = nullptr;

        for (const auto& [tag, node] : measure) {
            if (tag == "attributes") {
                read_attributes(node);
            } else if (tag == "note") {
                if (node.get_child_optional("grace") || node.get_child_optional("cue")) continue;
                for (const char* ignored : kIgnoredNoteChildren)
                    if (node.get_child_optional(ignored)) note_ignored(ignored);
                const bool chord = node.get_child_optional("chord").has_value();
                const Fraction dur(int_of(node, "duration", 0), 4 * divisions_);
                const std::string voice = voice_id(text_of(node, "voice", "1"));
                bool start = false, stop = false;
                for (const auto& [ctag, child] : node)
                    if (ctag == "tie") {
                        const std::string type = attr(child, "type");
                        start |= type == "start";
                        stop |= type == "stop";
                    }

                if (chord && last && last->voice == voice) {
                    if (const auto p = pitch_of(node, measure_number)) {
                        if (std::none_of(last->pitches.begin(), last->pitches.end(),
                                         [&](const Pitch& q) { return q.midi() == p->midi(); }))
                            last->pitches.push_back(*p);
                    }
                    last->tie_start |= start;
                    last->tie_stop |= stop;
                    continue;
                }
                PendingNote n;
                n.voice = voice;
                n.onset = position;
                n.duration = dur;
                if (const auto p = pitch_of(node, measure_number)) n.pitches.push_back(*p);
                n.tie_start = start;
                n.tie_stop = stop;
                notes.push_back(std::move(n));
                last = &notes.back();
                position += dur;
                longest = std::max(longest, position);
            } else if (tag == "backup") {
                position -= Fraction(int_of(node, "duration", 0), 4 * divisions_);
                if (position < Fraction(0)) position = Fraction(0);
                last = nullptr;
            } else if (tag == "forward") {
                position += Fraction(int_of(node, "duration", 0), 4 * divisions_);
                longest = std::max(longest, position);
                last = nullptr;
            } else if (tag == "direction") {
                if (node.get_child_optional("direction-type.dynamics")) note_ignored("dynamics");
            } else if (tag == "barline") {
                read_barline(node, out);
            }
        }

        out.time = time_;
        out.key = key_;
        for (const auto& v : ordered_voices()) {
            std::vector<const PendingNote*> mine;
            for (const auto& n : notes)
                if (n.voice == voice_id(v)) mine.push_back(&n);
            std::stable_sort(mine.begin(), mine.end(),
                             [](const PendingNote* a, const PendingNote* b) { return a->onset < b->onset; });
            for (const PendingNote* n : mine) {
                if (n->duration <= Fraction(0)) continue;
                NoteEvent e;
                e.onset = n->onset;
                e.duration = n->duration;
                e.voice = n->voice;
                e.pitches = n->pitches;
                e.tie_start = n->tie_start && !e.is_rest();
                e.tie_end = n->tie_stop && !e.is_rest();
                out.events.push_back(std::move(e));
            }
        }
        if (!time_.free && longest < time_.length()) out.pickup = true;
    }

private:
    std::vector<std::string> ordered_voices() const {
        std::vector<std::string> v(xml_voices_.begin(), xml_voices_.end());
        std::sort(v.begin(), v.end(), [](const std::string& a, const std::string& b) {
            if (a.size() != b.size()) return a.size() < b.size();
            return a < b;
        });
        return v;
    }

    std::string voice_id(const std::string& xml_voice) const {
        if (xml_voices_.size() <= 1) return part_;
        return part_ + ".v" + xml_voice;
    }

    void read_attributes(const pt::ptree& node) {
        divisions_ = std::max(1, int_of(node, "divisions", divisions_));
        if (const auto key = node.get_child_optional("key")) {
            key_.fifths = int_of(*key, "fifths", 0);
            key_.mode = mode_name(text_of(*key, "mode"));
        }
        if (const auto time = node.get_child_optional("time")) {
            if (time->get_child_optional("senza-misura")) {
                time_ = TimeSignature{4, 4, true};
            } else {
                TimeSignature t;
                // Compound beats such as "3+2" are summed.
                int beats = 0;
                std::stringstream parts(text_of(*time, "beats", "4"));
                std::string part;
                while (std::getline(parts, part, '+')) beats += std::max(0, std::atoi(part.c_str()));
                t.numerator = beats > 0 ? beats : 4;
                t.denominator = std::max(1, int_of(*time, "beat-type", 4));
                time_ = t;
            }
        }
    }

    void read_barline(const pt::ptree& node, Measure& out) {
        if (const auto repeat = node.get_child_optional("repeat")) {
            const std::string dir = attr(*repeat, "direction");
            if (dir == "forward") out.repeat_start = true;
            if (dir == "backward") out.repeat_end = true;
        }
        if (const auto ending = node.get_child_optional("ending")) {
            const std::string type = attr(*ending, "type");
            if (type == "start") {
                const std::string number = attr(*ending, "number");
                out.ending = std::max(1, std::atoi(number.c_str()));
            }
        }
    }

    std::optional<Pitch> pitch_of(const pt::ptree& note, int measure_number) const {
        if (note.get_child_optional("rest")) return std::nullopt;
        const auto pitch = note.get_child_optional("pitch");
        if (!pitch) {
            if (note.get_child_optional("unpitched"))
                warn(warnings_, "measure " + std::to_string(measure_number) + ": unpitched note read as a rest");
            return std::nullopt;
        }
        Pitch p;
        const std::string step = text_of(*pitch, "step");
        if (step.size() != 1 || step[0] < 'A' || step[0] > 'G')
            throw Error(ErrorCode::XmlSyntaxError, "invalid <step> '" + step + "' in measure " +
                                                       std::to_string(measure_number));
        p.step = step[0];
        p.alter = int_of(*pitch, "alter", 0);
        p.octave = int_of(*pitch, "octave", 4);
        return p;
    }

    // Each kind of ignored marking is reported once per part.
    void note_ignored(const std::string& what) {
        if (ignored_.insert(what).second) warn(warnings_, "part " + part_ + ": ignored <" + what + "> markings");
    }

    std::string part_;
    Warnings* warnings_;
    std::set<std::string> ignored_;
    std::set<std::string> xml_voices_;
    int divisions_ = 1;
    TimeSignature time_{4, 4, false};
    KeySignature key_;
};

// Tied notes across measures are marked with tie_end when the previous event
// in the same voice opened the tie; MusicXML usually already says so.
void reconcile_ties(Score& score) {
    std::map<std::string, NoteEvent*> previous;
    for (auto& m : score.measures)
        for (auto& e : m.events) {
            NoteEvent*& prev = previous[e.voice];
            if (prev && prev->tie_start && !e.is_rest()) {
                bool shared = false;
                for (const auto& p : e.pitches)
                    for (const auto& q : prev->pitches) shared |= p.midi() == q.midi();
                if (shared) e.tie_end = true;
            }
            if (e.tie_end && (!prev || !prev->tie_start)) e.tie_end = false;
            prev = &e;
        }
}

std::uint32_t le32(std::string_view s, size_t at) {
    if (at + 4 > s.size()) throw Error(ErrorCode::TruncatedFile, "zip structure truncated");
    return static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[at])) |
           static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[at + 1])) << 8 |
           static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[at + 2])) << 16 |
           static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[at + 3])) << 24;
}

std::uint32_t le16(std::string_view s, size_t at) {
    if (at + 2 > s.size()) throw Error(ErrorCode::TruncatedFile, "zip structure truncated");
    return static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[at])) |
           static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[at + 1])) << 8;
}

struct ZipEntry {
    std::string name;
    std::uint32_t method;
    std::uint32_t compressed;
    std::uint32_t size;
    std::uint32_t local_offset;
};

std::vector<ZipEntry> zip_directory(std::string_view zip) {
    if (zip.size() < 22) throw Error(ErrorCode::TruncatedFile, "archive too small");
    size_t eocd = std::string_view::npos;
    for (size_t i = zip.size() - 22 + 1; i-- > 0 && zip.size() - i <= 22 + 0xffff;)
        if (le32(zip, i) == 0x06054b50) {
            eocd = i;
            break;
        }
    if (eocd == std::string_view::npos) throw Error(ErrorCode::TruncatedFile, "zip end-of-directory not found");
    const std::uint32_t count = le16(zip, eocd + 10);
    size_t at = le32(zip, eocd + 16);
    std::vector<ZipEntry> entries;
    for (std::uint32_t i = 0; i < count; ++i) {
        if (le32(zip, at) != 0x02014b50) throw Error(ErrorCode::TruncatedFile, "corrupt zip directory");
        ZipEntry e;
        e.method = le16(zip, at + 10);
        e.compressed = le32(zip, at + 20);
        e.size = le32(zip, at + 24);
        const std::uint32_t name_len = le16(zip, at + 28);
        const std::uint32_t extra_len = le16(zip, at + 30);
        const std::uint32_t comment_len = le16(zip, at + 32);
        e.local_offset = le32(zip, at + 42);
        if (at + 46 + name_len > zip.size()) throw Error(ErrorCode::TruncatedFile, "zip entry name truncated");
        e.name = std::string(zip.substr(at + 46, name_len));
        entries.push_back(std::move(e));
        at += 46 + name_len + extra_len + comment_len;
    }
    return entries;
}

std::string zip_read(std::string_view zip, const ZipEntry& e) {
    const size_t at = e.local_offset;
    if (le32(zip, at) != 0x04034b50) throw Error(ErrorCode::TruncatedFile, "corrupt zip local header");
    const size_t data = at + 30 + le16(zip, at + 26) + le16(zip, at + 28);
    if (data + e.compressed > zip.size()) throw Error(ErrorCode::TruncatedFile, "zip entry data truncated");
    const auto payload = zip.substr(data, e.compressed);
    if (e.method == 0) return std::string(payload);
    if (e.method != 8)
        throw Error(ErrorCode::UnsupportedCodec, "zip compression method " + std::to_string(e.method));

    std::string out(e.size, '\0');
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw Error(ErrorCode::UnsupportedCodec, "zlib init failed");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(payload.data()));
    zs.avail_in = static_cast<uInt>(payload.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END) throw Error(ErrorCode::TruncatedFile, "compressed entry " + e.name + " is damaged");
    out.resize(zs.total_out);
    return out;
}

}  // namespace

Score parse_musicxml(std::string_view document, Warnings* warnings) {
    pt::ptree tree;
    try {
        std::istringstream in{std::string(document)};
        pt::read_xml(in, tree, pt::xml_parser::no_comments);
    } catch (const pt::xml_parser_error& e) {
        throw Error(ErrorCode::XmlSyntaxError, std::string("malformed XML: ") + e.what());
    }
    if (tree.get_child_optional("score-timewise"))
        throw Error(ErrorCode::UnsupportedLayout, "timewise MusicXML is not supported; convert to partwise");
    const auto root_opt = tree.get_child_optional("score-partwise");
    if (!root_opt) throw Error(ErrorCode::UnsupportedLayout, "document root is not <score-partwise>");
    const pt::ptree& root = *root_opt;

    Score score;
    score.title = text_of(root, "work.work-title", text_of(root, "movement-title"));
    if (const auto ident = root.get_child_optional("identification"))
        for (const auto& [tag, node] : *ident)
            if (tag == "creator" && (attr(node, "type") == "composer" || score.composer.empty()))
                score.composer = text_of(node, "");
    score.default_unit_length = Fraction(1, 8);

    bool first_part = true;
    for (const auto& [tag, part] : root) {
        if (tag != "part") continue;
        const std::string id = attr(part, "id").empty() ? "P" + std::to_string(score.voices.size() + 1) : attr(part, "id");
        PartReader reader(id, warnings);
        reader.scan_voices(part);
        for (const auto& v : reader.voice_ids()) score.voices.push_back(v);

        size_t index = 0;
        for (const auto& [mtag, measure] : part) {
            if (mtag != "measure") continue;
            if (score.measures.size() <= index) {
                Measure m;
                m.index = static_cast<int>(index);
                score.measures.push_back(m);
            }
            Measure parsed;
            reader.read_measure(measure, parsed, static_cast<int>(index) + 1);
            Measure& target = score.measures[index];
            if (first_part) {
                // First part defines meter, key and repeat structure.
                target.time = parsed.time;
                target.key = parsed.key;
                target.pickup = parsed.pickup;
                target.repeat_start = parsed.repeat_start;
                target.repeat_end = parsed.repeat_end;
                target.ending = parsed.ending;
            } else {
                target.pickup = target.pickup && parsed.pickup;
            }
            for (auto& e : parsed.events) target.events.push_back(std::move(e));
            ++index;
        }
        first_part = false;
    }
    reconcile_ties(score);
    return score;
}

std::string extract_mxl(std::string_view archive) {
    const auto entries = zip_directory(archive);
    std::string root_path;
    for (const auto& e : entries)
        if (e.name == "META-INF/container.xml") {
            pt::ptree container;
            std::istringstream in(zip_read(archive, e));
            try {
                pt::read_xml(in, container);
            } catch (const pt::xml_parser_error& err) {
                throw Error(ErrorCode::XmlSyntaxError, std::string("malformed container.xml: ") + err.what());
            }
            if (const auto rootfiles = container.get_child_optional("container.rootfiles"))
                for (const auto& [tag, node] : *rootfiles)
                    if (tag == "rootfile" && root_path.empty()) root_path = attr(node, "full-path");
        }
    for (const auto& e : entries) {
        const bool is_root = root_path.empty()
                                 ? e.name.find('/') == std::string::npos &&
                                       (e.name.ends_with(".xml") || e.name.ends_with(".musicxml"))
                                 : e.name == root_path;
        if (is_root) return zip_read(archive, e);
    }
    throw Error(ErrorCode::TruncatedFile, "archive has no score document");
}

Score load_musicxml(const std::filesystem::path& path, Warnings* warnings) {
    const std::string bytes = read_file(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == 'K') return parse_musicxml(extract_mxl(bytes), warnings);
    return parse_musicxml(bytes, warnings);
}

}  // namespace muse::io
