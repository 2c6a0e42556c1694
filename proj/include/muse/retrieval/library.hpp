#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "muse/io/performance.hpp"
#include "muse/io/reference.hpp"
#include "muse/symbolic/score.hpp"

namespace muse::retrieval {

/// Pitch-interval n-gram -> count. Keys are signed intervals joined by spaces;
/// skip-grams carry a "~k " prefix naming the dropped note.
using Fingerprint = std::map<std::string, int>;

struct FingerprintOptions {
    int min_order = 2;
    int max_order = 4;  // probes need at least max_order + 1 notes
    bool skip_grams = true;
};

struct LibraryEntry {
    std::string id;
    std::string title;
    std::string composer;
    std::string format;  // abc | musicxml | midi
    std::string path;    // relative to the library root
    std::string key;
    std::string meter;
    Fingerprint fingerprint;
};

struct SkipRecord {
    std::string path;
    std::string reason;
};

struct LibraryIndex {
    int version = 1;
    std::vector<LibraryEntry> entries;
    std::vector<SkipRecord> skipped;
    FingerprintOptions fingerprint;

    const LibraryEntry* find(std::string_view id) const;
};

struct RetrievalHit {
    std::string id;
    double score = 0.0;
    std::string kind;  // explicit | implicit

    bool operator==(const RetrievalHit&) const = default;
};

inline constexpr const char* kIndexFileName = "library-index.json";

/// Highest sounding pitch per event.
std::vector<int> top_line(const ReferenceEvents& reference);
/// Notes starting within `chord_window_sec` of each other count as one event.
std::vector<int> top_line(const PerformanceNotes& notes, double chord_window_sec = 0.035);

Fingerprint fingerprint(const std::vector<int>& melody, const FingerprintOptions& options = {});

/// Reads every .abc, .xml, .musicxml, .mxl, .mid and .midi file below
/// `directory`. Files that fail to parse go to the skip report.
/// Throws DirectoryUnreadable.
LibraryIndex index_library(const std::filesystem::path& directory, const FingerprintOptions& options = {});

nlohmann::json to_json(const LibraryIndex& index);
LibraryIndex index_from_json(const nlohmann::json& j);
void save_index(const LibraryIndex& index, const std::filesystem::path& file);
LibraryIndex load_index(const std::filesystem::path& file);

/// 1 − levenshtein/maxlen after case folding.
double edit_ratio(std::string_view a, std::string_view b);

struct ExplicitOptions {
    double threshold = 0.5;
    double window_scale = 0.95;  // matches against a span of the query
    size_t limit = 0;            // 0 keeps every hit
};

/// Fuzzy match of the query against each title and composer. A query that
/// embeds the field ("give me a song of X") is matched span by span, scaled
/// so only the whole query equal to the field scores 1.0.
std::vector<RetrievalHit> search_explicit(const LibraryIndex& index, std::string_view query,
                                          const ExplicitOptions& options = {});

struct ImplicitOptions {
    size_t limit = 0;
};

/// IDF-weighted Jaccard between the probe's top-line n-grams and each entry,
/// over the n-grams the probe contains. Throws ProbeTooShort.
std::vector<RetrievalHit> match_implicit(const LibraryIndex& index, const PerformanceNotes& probe,
                                         const ImplicitOptions& options = {});
std::vector<RetrievalHit> match_implicit(const LibraryIndex& index, const Score& probe,
                                         const ImplicitOptions& options = {});
std::vector<RetrievalHit> match_melody(const LibraryIndex& index, const std::vector<int>& melody,
                                       const ImplicitOptions& options = {});

/// Hits with their entry metadata, as served to clients.
nlohmann::json hits_to_json(const LibraryIndex& index, const std::vector<RetrievalHit>& hits);

}  // namespace muse::retrieval
