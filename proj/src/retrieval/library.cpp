#include "muse/retrieval/library.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "muse/common/error.hpp"
#include "muse/common/file.hpp"
#include "muse/io/midi.hpp"
#include "muse/io/musicxml.hpp"
#include "muse/symbolic/abc.hpp"
#include "muse/text/metrics.hpp"

namespace muse::retrieval {

namespace fs = std::filesystem;

namespace {

// Fingerprints only need the interval sequence; the tempo is arbitrary.
constexpr double kIndexTempo = 120.0;

std::string format_of(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".abc") return "abc";
    if (ext == ".xml" || ext == ".musicxml" || ext == ".mxl") return "musicxml";
    if (ext == ".mid" || ext == ".midi") return "midi";
    return "";
}

std::string fold(std::string_view s) {
    std::string out;
    bool space = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            space = !out.empty();
            continue;
        }
        if (space) out += ' ';
        space = false;
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

std::vector<std::string> words(const std::string& folded) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < folded.size()) {
        const size_t j = std::min(folded.find(' ', i), folded.size());
        out.push_back(folded.substr(i, j - i));
        i = j + 1;
    }
    return out;
}

void describe_score(LibraryEntry& e, const Score& score, const FingerprintOptions& options) {
    e.title = score.title;
    e.composer = score.composer;
    if (!score.measures.empty()) {
        e.key = score.measures[0].key.abc_name();
        e.meter = score.measures[0].time.str();
    }
    e.fingerprint = fingerprint(top_line(score_to_reference(score, kIndexTempo)), options);
}

LibraryEntry read_entry(const fs::path& file, const fs::path& root, const FingerprintOptions& options) {
    LibraryEntry e;
    e.format = format_of(file);
    e.path = fs::relative(file, root).generic_string();
    if (e.format == "abc") {
        describe_score(e, abc::parse(read_file(file)), options);
    } else if (e.format == "musicxml") {
        describe_score(e, io::load_musicxml(file), options);
    } else {
        e.fingerprint = fingerprint(top_line(io::load_midi(file)), options);
    }
    if (e.title.empty()) e.title = file.stem().string();
    return e;
}

std::vector<RetrievalHit> rank(std::vector<RetrievalHit> hits, size_t limit) {
    std::sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
        return a.score != b.score ? a.score > b.score : a.id < b.id;
    });
    if (limit != 0 && hits.size() > limit) hits.resize(limit);
    return hits;
}

// Best match of the field against the whole query or any contiguous span of
// its words.
double field_score(const std::string& field, const std::string& query, const std::vector<std::string>& query_words,
                   double window_scale) {
    if (field.empty() || query.empty()) return 0.0;
    double best = edit_ratio(field, query);
    const size_t field_words = words(field).size();
    const size_t max_span = std::min(query_words.size(), 2 * field_words + 1);
    for (size_t i = 0; i < query_words.size(); ++i) {
        std::string span;
        for (size_t len = 1; len <= max_span && i + len <= query_words.size(); ++len) {
            if (len > 1) span += ' ';
            span += query_words[i + len - 1];
            if (len == query_words.size()) break;  // the whole query, already scored
            best = std::max(best, window_scale * edit_ratio(field, span));
        }
    }
    return best;
}

}  // namespace

const LibraryEntry* LibraryIndex::find(std::string_view id) const {
    for (const auto& e : entries)
        if (e.id == id) return &e;
    return nullptr;
}

std::vector<int> top_line(const ReferenceEvents& reference) {
    std::vector<int> out;
    for (const auto& e : reference.events)
        if (!e.pitches.empty()) out.push_back(e.pitches.back());
    return out;
}

std::vector<int> top_line(const PerformanceNotes& notes, double chord_window_sec) {
    PerformanceNotes sorted = notes;
    sort_notes(sorted);
    std::vector<int> out;
    for (size_t i = 0; i < sorted.size();) {
        int high = sorted[i].pitch;
        size_t j = i;
        while (j < sorted.size() && sorted[j].onset_sec - sorted[i].onset_sec <= chord_window_sec)
            high = std::max(high, sorted[j++].pitch);
        out.push_back(high);
        i = j;
    }
    return out;
}

Fingerprint fingerprint(const std::vector<int>& melody, const FingerprintOptions& options) {
    if (options.min_order < 1 || options.max_order < options.min_order)
        throw Error(ErrorCode::InvalidArgument, "n-gram orders must satisfy 1 <= min <= max");
    std::vector<int> intervals;
    for (size_t i = 1; i < melody.size(); ++i) intervals.push_back(melody[i] - melody[i - 1]);
    Fingerprint fp;
    const auto key_of = [](const std::vector<int>& ivs, std::string key) {
        for (size_t k = 0; k < ivs.size(); ++k) {
            if (k > 0) key += ' ';
            if (ivs[k] > 0) key += '+';
            key += std::to_string(ivs[k]);
        }
        return key;
    };
    // A window of max_order + 1 notes with one interior note dropped: a single
    // wrong note leaves some of these intact where every contiguous gram
    // spanning it breaks.
    if (options.skip_grams) {
        const auto width = static_cast<size_t>(options.max_order) + 1;
        for (size_t i = 0; i + width <= melody.size(); ++i)
            for (size_t drop = 1; drop + 1 < width; ++drop) {
                std::vector<int> ivs;
                int prev = melody[i];
                for (size_t k = 1; k < width; ++k) {
                    if (k == drop) continue;
                    ivs.push_back(melody[i + k] - prev);
                    prev = melody[i + k];
                }
                ++fp[key_of(ivs, "~" + std::to_string(drop) + " ")];
            }
    }
    for (int n = options.min_order; n <= options.max_order; ++n) {
        const auto order = static_cast<size_t>(n);
        for (size_t i = 0; i + order <= intervals.size(); ++i) {
            ++fp[key_of({intervals.begin() + static_cast<long>(i), intervals.begin() + static_cast<long>(i + order)}, "")];
        }
    }
    return fp;
}

LibraryIndex index_library(const fs::path& directory, const FingerprintOptions& options) {
    std::error_code ec;
    if (!fs::is_directory(directory, ec)) throw Error(ErrorCode::DirectoryUnreadable, directory.string() + " is not a readable directory");
    std::vector<fs::path> files;
    fs::recursive_directory_iterator it(directory, ec), end;
    if (ec) throw Error(ErrorCode::DirectoryUnreadable, directory.string() + ": " + ec.message());
    for (; it != end; it.increment(ec)) {
        if (ec) throw Error(ErrorCode::DirectoryUnreadable, directory.string() + ": " + ec.message());
        if (it->is_regular_file(ec) && !format_of(it->path()).empty()) files.push_back(it->path());
    }
    std::sort(files.begin(), files.end());

    LibraryIndex index;
    index.fingerprint = options;
    for (const auto& f : files) {
        try {
            index.entries.push_back(read_entry(f, directory, options));
        } catch (const std::exception& e) {
            index.skipped.push_back({fs::relative(f, directory).generic_string(), e.what()});
        }
    }
    // Ids are extension-free paths unless two files would collide.
    std::map<std::string, int> uses;
    const auto stem_id = [](const std::string& path) { return fs::path(path).replace_extension().generic_string(); };
    for (const auto& e : index.entries) ++uses[stem_id(e.path)];
    for (auto& e : index.entries) e.id = uses[stem_id(e.path)] > 1 ? e.path : stem_id(e.path);
    return index;
}

nlohmann::json to_json(const LibraryIndex& index) {
    nlohmann::json j;
    j["version"] = index.version;
    j["fingerprint"] = {{"min_order", index.fingerprint.min_order},
                        {"max_order", index.fingerprint.max_order},
                        {"skip_grams", index.fingerprint.skip_grams}};
    j["entries"] = nlohmann::json::array();
    for (const auto& e : index.entries)
        j["entries"].push_back({{"id", e.id},
                                {"title", e.title},
                                {"composer", e.composer},
                                {"format", e.format},
                                {"path", e.path},
                                {"metadata", {{"key", e.key}, {"meter", e.meter}}},
                                {"fingerprint", e.fingerprint}});
    j["skipped"] = nlohmann::json::array();
    for (const auto& s : index.skipped) j["skipped"].push_back({{"path", s.path}, {"reason", s.reason}});
    return j;
}

LibraryIndex index_from_json(const nlohmann::json& j) {
    try {
        LibraryIndex index;
        index.version = j.at("version");
        if (index.version != 1) throw Error(ErrorCode::InvalidArgument, "unsupported library index version");
        if (j.contains("fingerprint")) {
            index.fingerprint.min_order = j["fingerprint"].at("min_order");
            index.fingerprint.max_order = j["fingerprint"].at("max_order");
            index.fingerprint.skip_grams = j["fingerprint"].value("skip_grams", true);
        }
        for (const auto& e : j.at("entries")) {
            LibraryEntry entry;
            entry.id = e.at("id");
            entry.title = e.value("title", "");
            entry.composer = e.value("composer", "");
            entry.format = e.at("format");
            entry.path = e.at("path");
            if (e.contains("metadata")) {
                entry.key = e["metadata"].value("key", "");
                entry.meter = e["metadata"].value("meter", "");
            }
            entry.fingerprint = e.at("fingerprint").get<Fingerprint>();
            index.entries.push_back(std::move(entry));
        }
        if (j.contains("skipped"))
            for (const auto& s : j["skipped"]) index.skipped.push_back({s.at("path"), s.value("reason", "")});
        return index;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed library index: ") + e.what());
    }
}

void save_index(const LibraryIndex& index, const fs::path& file) { write_file(file, to_json(index).dump(1) + "\n"); }

LibraryIndex load_index(const fs::path& file) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(file));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, file.string() + ": " + e.what());
    }
    return index_from_json(j);
}

double edit_ratio(std::string_view a, std::string_view b) {
    const std::u32string x = text::decode_utf8(fold(a)), y = text::decode_utf8(fold(b));
    const size_t longest = std::max(x.size(), y.size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(text::levenshtein(x, y)) / static_cast<double>(longest);
}

std::vector<RetrievalHit> search_explicit(const LibraryIndex& index, std::string_view query,
                                          const ExplicitOptions& options) {
    const std::string q = fold(query);
    const auto q_words = words(q);
    std::vector<RetrievalHit> hits;
    for (const auto& e : index.entries) {
        const double score = std::max(field_score(fold(e.title), q, q_words, options.window_scale),
                                      field_score(fold(e.composer), q, q_words, options.window_scale));
        if (score >= options.threshold) hits.push_back({e.id, score, "explicit"});
    }
    return rank(std::move(hits), options.limit);
}

std::vector<RetrievalHit> match_melody(const LibraryIndex& index, const std::vector<int>& melody,
                                       const ImplicitOptions& options) {
    const int needed = index.fingerprint.max_order + 1;
    if (static_cast<int>(melody.size()) < needed)
        throw Error(ErrorCode::ProbeTooShort, "probe has " + std::to_string(melody.size()) + " top-line notes; " +
                                                  std::to_string(needed) + " required");
    const Fingerprint probe = fingerprint(melody, index.fingerprint);
    // Smoothed inverse document frequency over the library.
    const double n = static_cast<double>(index.entries.size());
    std::map<std::string, double> weight;
    for (const auto& [gram, count] : probe) {
        int df = 0;
        for (const auto& e : index.entries) df += e.fingerprint.count(gram) ? 1 : 0;
        weight[gram] = std::log((n + 1.0) / (df + 1.0)) + 1.0;
    }
    std::vector<RetrievalHit> hits;
    for (const auto& e : index.entries) {
        double shared = 0.0, total = 0.0;
        for (const auto& [gram, count] : probe) {
            const auto it = e.fingerprint.find(gram);
            const int other = it == e.fingerprint.end() ? 0 : it->second;
            shared += weight[gram] * std::min(count, other);
            total += weight[gram] * std::max(count, other);
        }
        if (shared > 0.0) hits.push_back({e.id, shared / total, "implicit"});
    }
    return rank(std::move(hits), options.limit);
}

std::vector<RetrievalHit> match_implicit(const LibraryIndex& index, const PerformanceNotes& probe,
                                         const ImplicitOptions& options) {
    return match_melody(index, top_line(probe), options);
}

std::vector<RetrievalHit> match_implicit(const LibraryIndex& index, const Score& probe,
                                         const ImplicitOptions& options) {
    return match_melody(index, top_line(score_to_reference(probe, kIndexTempo)), options);
}

nlohmann::json hits_to_json(const LibraryIndex& index, const std::vector<RetrievalHit>& hits) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& h : hits) {
        const auto* e = index.find(h.id);
        arr.push_back({{"id", h.id},
                       {"score", h.score},
                       {"kind", h.kind},
                       {"title", e ? e->title : ""},
                       {"composer", e ? e->composer : ""},
                       {"format", e ? e->format : ""},
                       {"path", e ? e->path : ""}});
    }
    return arr;
}

}  // namespace muse::retrieval
