#include "muse/io/midi.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include "muse/common/file.hpp"

namespace muse::io {

namespace {

class Reader {
public:
    Reader(std::string_view bytes, size_t begin, size_t end) : bytes_(bytes), pos_(begin), end_(end) {}

    bool done() const { return pos_ >= end_; }
    size_t position() const { return pos_; }

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }
    std::uint8_t peek() {
        need(1);
        return static_cast<std::uint8_t>(bytes_[pos_]);
    }
    std::uint32_t u16() {
        const std::uint32_t hi = u8();
        return (hi << 8) | u8();
    }
    std::uint32_t u32() {
        const std::uint32_t hi = u16();
        return (hi << 16) | u16();
    }
    std::uint32_t varlen() {
        std::uint32_t value = 0;
        for (int i = 0; i < 4; ++i) {
            const std::uint8_t b = u8();
            value = (value << 7) | (b & 0x7f);
            if (!(b & 0x80)) return value;
        }
        throw Error(ErrorCode::TruncatedFile, "variable-length quantity longer than 4 bytes");
    }
    std::string_view take(size_t n) {
        need(n);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

private:
    void need(size_t n) const {
        if (pos_ + n > end_) throw Error(ErrorCode::TruncatedFile, "unexpected end of MIDI data");
    }

    std::string_view bytes_;
    size_t pos_;
    size_t end_;
};

struct TempoChange {
    std::uint64_t tick;
    double us_per_quarter;
};

struct RawNote {
    int pitch;
    int velocity;
    std::uint64_t on;
    std::uint64_t off;
};

// Converts ticks to seconds through a sorted tempo map.
class TempoMap {
public:
    TempoMap(std::vector<TempoChange> changes, double ticks_per_quarter, double smpte_ticks_per_sec)
        : ppq_(ticks_per_quarter), smpte_(smpte_ticks_per_sec) {
        std::stable_sort(changes.begin(), changes.end(),
                         [](const TempoChange& a, const TempoChange& b) { return a.tick < b.tick; });
        changes_.push_back({0, 500000.0});
        for (const auto& c : changes) {
            if (c.tick == changes_.back().tick) changes_.back().us_per_quarter = c.us_per_quarter;
            else changes_.push_back(c);
        }
        double sec = 0.0;
        for (size_t i = 0; i < changes_.size(); ++i) {
            starts_.push_back(sec);
            if (i + 1 < changes_.size())
                sec += static_cast<double>(changes_[i + 1].tick - changes_[i].tick) * changes_[i].us_per_quarter /
                       1e6 / ppq_;
        }
    }

    double seconds(std::uint64_t tick) const {
        if (smpte_ > 0.0) return static_cast<double>(tick) / smpte_;
        size_t i = static_cast<size_t>(
            std::upper_bound(changes_.begin(), changes_.end(), tick,
                             [](std::uint64_t t, const TempoChange& c) { return t < c.tick; }) -
            changes_.begin() - 1);
        return starts_[i] + static_cast<double>(tick - changes_[i].tick) * changes_[i].us_per_quarter / 1e6 / ppq_;
    }

private:
    std::vector<TempoChange> changes_;
    std::vector<double> starts_;
    double ppq_;
    double smpte_;
};

void parse_track(Reader& r, int track, std::vector<RawNote>& notes, std::vector<TempoChange>& tempi,
                 Warnings* warnings) {
    std::uint64_t tick = 0;
    std::uint8_t status = 0;
    std::map<std::pair<int, int>, std::deque<std::pair<std::uint64_t, int>>> open;  // (channel, pitch)
    while (!r.done()) {
        tick += r.varlen();
        std::uint8_t b = r.peek();
        if (b & 0x80) {
            status = b;
            r.u8();
        } else if (status == 0 || status >= 0xf0) {
            throw Error(ErrorCode::TruncatedFile, "running status without a previous status byte");
        }
        if (status == 0xff) {
            const std::uint8_t type = r.u8();
            const std::uint32_t len = r.varlen();
            const auto data = r.take(len);
            status = 0;
            if (type == 0x51 && len == 3) {
                const auto u = [&](size_t k) { return static_cast<std::uint8_t>(data[k]); };
                tempi.push_back({tick, static_cast<double>((u(0) << 16) | (u(1) << 8) | u(2))});
            } else if (type == 0x2f) {
                break;
            }
            continue;
        }
        if (status == 0xf0 || status == 0xf7) {
            r.take(r.varlen());
            status = 0;
            continue;
        }
        const int kind = status & 0xf0;
        const int channel = status & 0x0f;
        const int d1 = r.u8();
        const int d2 = (kind == 0xc0 || kind == 0xd0) ? 0 : r.u8();
        if (channel == 9) continue;  // percussion
        const bool on = kind == 0x90 && d2 > 0;
        const bool off = kind == 0x80 || (kind == 0x90 && d2 == 0);
        const auto key = std::make_pair(channel, d1);
        if (on) {
            open[key].emplace_back(tick, d2);
        } else if (off) {
            auto it = open.find(key);
            if (it == open.end() || it->second.empty()) continue;  // stray note-off
            const auto [start, velocity] = it->second.front();
            it->second.pop_front();
            notes.push_back({d1, velocity, start, std::max(tick, start + 1)});
        }
    }
    for (auto& [key, queue] : open)
        for (const auto& [start, velocity] : queue) {
            warn(warnings, "track " + std::to_string(track) + ": note " + std::to_string(key.second) +
                               " still sounding at end of track, closed there");
            notes.push_back({key.second, velocity, start, std::max(tick, start + 1)});
        }
}

void put_u16(std::string& out, std::uint32_t v) {
    out += static_cast<char>((v >> 8) & 0xff);
    out += static_cast<char>(v & 0xff);
}

void put_u32(std::string& out, std::uint32_t v) {
    put_u16(out, v >> 16);
    put_u16(out, v & 0xffff);
}

void put_varlen(std::string& out, std::uint64_t v) {
    char buf[10];
    int n = 0;
    buf[n++] = static_cast<char>(v & 0x7f);
    while (v >>= 7) buf[n++] = static_cast<char>((v & 0x7f) | 0x80);
    while (n > 0) out += buf[--n];
}

}  // namespace

PerformanceNotes parse_midi(std::string_view bytes, Warnings* warnings) {
    Reader header(bytes, 0, bytes.size());
    if (bytes.size() < 4 || bytes.substr(0, 4) != "MThd")
        throw Error(ErrorCode::UnsupportedLayout, "not a Standard MIDI File");
    header.take(4);
    const std::uint32_t header_len = header.u32();
    if (header_len < 6) throw Error(ErrorCode::TruncatedFile, "MIDI header too short");
    const std::uint32_t format = header.u16();
    const std::uint32_t track_count = header.u16();
    const std::uint32_t division = header.u16();
    header.take(header_len - 6);
    if (format > 1) throw Error(ErrorCode::UnsupportedLayout, "SMF format 2 is not supported");

    double ppq = 480.0, smpte = 0.0;
    if (division & 0x8000) {
        const int fps = 256 - static_cast<int>((division >> 8) & 0xff);
        smpte = static_cast<double>(fps == 29 ? 29.97 : fps) * static_cast<double>(division & 0xff);
    } else {
        ppq = static_cast<double>(division);
        if (ppq <= 0) throw Error(ErrorCode::UnsupportedLayout, "zero ticks per quarter note");
    }

    std::vector<RawNote> raw;
    std::vector<TempoChange> tempi;
    size_t pos = header.position();
    for (std::uint32_t t = 0; t < track_count; ++t) {
        Reader chunk(bytes, pos, bytes.size());
        const auto id = chunk.take(4);
        const std::uint32_t len = chunk.u32();
        const size_t begin = chunk.position();
        if (begin + len > bytes.size())
            throw Error(ErrorCode::TruncatedFile, "track " + std::to_string(t) + " extends past end of file");
        if (id == "MTrk") {
            Reader track(bytes, begin, begin + len);
            parse_track(track, static_cast<int>(t), raw, tempi, warnings);
        }
        pos = begin + len;
    }

    const TempoMap map(std::move(tempi), ppq, smpte);
    PerformanceNotes notes;
    notes.reserve(raw.size());
    for (const auto& n : raw) notes.push_back({n.pitch, map.seconds(n.on), map.seconds(n.off), n.velocity});
    sort_notes(notes);
    return notes;
}

std::string export_midi(const PerformanceNotes& notes, int ppq, double tempo_bpm) {
    if (ppq <= 0 || ppq > 0x7fff) throw Error(ErrorCode::InvalidArgument, "ppq must be in 1..32767");
    if (!(tempo_bpm > 0.0)) throw Error(ErrorCode::InvalidArgument, "tempo must be positive");
    const double ticks_per_sec = ppq * tempo_bpm / 60.0;
    const auto to_tick = [&](double sec) {
        return static_cast<std::uint64_t>(std::llround(std::max(0.0, sec) * ticks_per_sec));
    };

    struct Event {
        std::uint64_t tick;
        bool on;
        int pitch;
        int velocity;
    };
    std::vector<Event> events;
    for (const auto& n : notes) {
        const std::uint64_t on = to_tick(n.onset_sec);
        const std::uint64_t off = std::max(to_tick(n.offset_sec), on + 1);
        const int pitch = std::clamp(n.pitch, 0, 127);
        events.push_back({on, true, pitch, std::clamp(n.velocity, 1, 127)});
        events.push_back({off, false, pitch, 0});
    }
    // Note-offs first at equal ticks so repeated pitches pair correctly.
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        if (a.tick != b.tick) return a.tick < b.tick;
        return !a.on && b.on;
    });

    std::string track;
    const auto us_per_quarter = static_cast<std::uint32_t>(std::llround(60e6 / tempo_bpm));
    put_varlen(track, 0);
    track += "\xff\x51\x03";
    track += static_cast<char>((us_per_quarter >> 16) & 0xff);
    track += static_cast<char>((us_per_quarter >> 8) & 0xff);
    track += static_cast<char>(us_per_quarter & 0xff);
    std::uint64_t last = 0;
    for (const auto& e : events) {
        put_varlen(track, e.tick - last);
        last = e.tick;
        track += static_cast<char>(e.on ? 0x90 : 0x80);
        track += static_cast<char>(e.pitch);
        track += static_cast<char>(e.on ? e.velocity : 64);
    }
    put_varlen(track, 0);
    track += std::string("\xff\x2f\x00", 3);

    std::string out = "MThd";
    put_u32(out, 6);
    put_u16(out, 0);
    put_u16(out, 1);
    put_u16(out, static_cast<std::uint32_t>(ppq));
    out += "MTrk";
    put_u32(out, static_cast<std::uint32_t>(track.size()));
    out += track;
    return out;
}

PerformanceNotes load_midi(const std::filesystem::path& path, Warnings* warnings) {
    return parse_midi(read_file(path), warnings);
}

}  // namespace muse::io
