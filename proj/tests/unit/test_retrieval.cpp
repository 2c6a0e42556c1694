#include <random>

#include "doctest.h"
#include "muse/common/error.hpp"
#include "muse/retrieval/library.hpp"
#include "muse/symbolic/abc.hpp"
#include "support/corpus.hpp"
#include "support/library_fixture.hpp"
#include "support/text_oracles.hpp"

using namespace muse;
using namespace muse::retrieval;
namespace fs = std::filesystem;

TEST_CASE("edit ratio of the fuzzy title example") {
    const std::string a = "kikujiro summer", b = "kikujiro's summer";
    const double expected = 1.0 - static_cast<double>(testing::recursive_levenshtein(a, b)) / 17.0;
    CHECK(expected == doctest::Approx(15.0 / 17.0));
    CHECK(edit_ratio("Kikujiro Summer", "Kikujiro's Summer") == doctest::Approx(expected));
    CHECK(edit_ratio("ABC", "abc") == 1.0);
    CHECK(edit_ratio("", "") == 1.0);
    CHECK(edit_ratio("abc", "") == 0.0);
}

TEST_CASE("fingerprint counts and transposition invariance") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> pitch(40, 90), len(0, 30), shift(-12, 12);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<int> melody(static_cast<size_t>(len(rng)));
        for (auto& p : melody) p = pitch(rng);
        const Fingerprint fp = fingerprint(melody);
        int total = 0;
        for (const auto& [g, c] : fp) total += c;
        int expected = 0;
        for (int n = 2; n <= 4; ++n) expected += std::max(0, static_cast<int>(melody.size()) - n);
        expected += 3 * std::max(0, static_cast<int>(melody.size()) - 4);
        CHECK(total == expected);
        std::vector<int> moved = melody;
        const int s = shift(rng);
        for (auto& p : moved) p += s;
        CHECK(fingerprint(moved) == fp);
    }
    const Fingerprint fp = fingerprint({60, 62, 64, 62, 60});
    CHECK(fp.at("+2 +2") == 1);
    CHECK(fp.at("+2 +2 -2 -2") == 1);
    CHECK(fp.at("-2 -2") == 1);
    CHECK(fp.at("~1 +4 -2 -2") == 1);
    CHECK(fp.at("~2 +2 0 -2") == 1);
    CHECK(fp.at("~3 +2 +2 -4") == 1);
    CHECK(fp.size() == 3 + 2 + 1 + 3);
}

TEST_CASE("top line takes the highest pitch per event") {
    PerformanceNotes notes{{48, 0.0, 1.0, 80}, {64, 0.01, 1.0, 80}, {60, 0.02, 1.0, 80}, {67, 0.5, 1.0, 80}};
    CHECK(top_line(notes) == std::vector<int>{64, 67});
    const Score s = abc::parse("X:1\nM:4/4\nL:1/4\nK:C\n[CEG] [DF] c2|\n");
    CHECK(top_line(score_to_reference(s, 120.0)) == std::vector<int>{67, 65, 72});
}

TEST_CASE("indexing the corpus") {
    const LibraryIndex index = index_library(std::string(MUSE_TEST_DATA) + "/corpus");
    CHECK(index.entries.size() == testing::corpus_files().size());
    CHECK(index.skipped.empty());
    const LibraryEntry* ode = index.find("02_ode_to_joy");
    REQUIRE(ode != nullptr);
    CHECK(ode->title == "Ode to Joy");
    CHECK(ode->composer == "Ludwig van Beethoven");
    CHECK(ode->format == "abc");
    CHECK(ode->path == "02_ode_to_joy.abc");
    CHECK(ode->meter == "4/4");
    CHECK(ode->key == "D");
    CHECK(!ode->fingerprint.empty());

    const auto hits = search_explicit(index, "ode to joy");
    REQUIRE(!hits.empty());
    CHECK(hits[0] == RetrievalHit{"02_ode_to_joy", 1.0, "explicit"});
}

TEST_CASE("corrupt files land in the skip report") {
    testing::ScopedDir dir("muse_retrieval");
    testing::write_library(dir.path());
    testing::write_text(dir.path() / "broken.abc", "X:1\nT:No key header\n");
    testing::write_text(dir.path() / "notes.txt", "not a score");
    const LibraryIndex index = index_library(dir.path());
    CHECK(index.entries.size() == 50);
    REQUIRE(index.skipped.size() == 1);
    CHECK(index.skipped[0].path == "broken.abc");
    CHECK(!index.skipped[0].reason.empty());
}

TEST_CASE("midi and musicxml entries") {
    testing::ScopedDir dir("muse_retrieval_formats");
    fs::copy_file(std::string(MUSE_TEST_DATA) + "/musicxml/chord.xml", dir.path() / "chord.xml");
    testing::write_text(dir.path() / "garbage.mid", "MThd nonsense");
    const LibraryIndex index = index_library(dir.path());
    REQUIRE(index.entries.size() == 1);
    CHECK(index.entries[0].format == "musicxml");
    CHECK(index.skipped.size() == 1);
}

TEST_CASE("index is idempotent and round trips") {
    testing::ScopedDir dir("muse_retrieval_idem");
    testing::write_library(dir.path());
    const LibraryIndex a = index_library(dir.path());
    save_index(a, dir.path() / kIndexFileName);
    const LibraryIndex b = index_library(dir.path());  // the saved index is not itself indexed
    CHECK(to_json(a) == to_json(b));
    const LibraryIndex c = load_index(dir.path() / kIndexFileName);
    CHECK(to_json(c) == to_json(a));
    CHECK(to_json(c)["version"] == 1);
    CHECK_THROWS_AS(index_library(dir.path() / "missing"), Error);
    try {
        index_library(dir.path() / "missing");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DirectoryUnreadable);
    }
}

TEST_CASE("explicit search") {
    testing::ScopedDir dir("muse_retrieval_explicit");
    const auto pieces = testing::write_library(dir.path());
    const LibraryIndex index = index_library(dir.path());

    for (const auto& p : pieces) {
        const auto hits = search_explicit(index, p.title);
        REQUIRE(!hits.empty());
        CHECK(hits[0].score == 1.0);
        CHECK(index.find(hits[0].id)->title == p.title);
        for (size_t i = 1; i < hits.size(); ++i) CHECK(hits[i].score < 1.0);
    }

    auto hits = search_explicit(index, "Kikujiro Summer");
    REQUIRE(!hits.empty());
    CHECK(hits[0].id == "piece_00");
    CHECK(hits[0].score > 0.8);

    hits = search_explicit(index, "Give me a song of Kikujiro's Summer");
    REQUIRE(!hits.empty());
    CHECK(hits[0].id == "piece_00");
    CHECK(hits[0].score == doctest::Approx(0.95));

    CHECK(search_explicit(index, "KIKUJIRO'S SUMMER")[0].score == 1.0);
    CHECK(search_explicit(index, "xq zzv").empty());

    // Ordering: score descending, ties by id.
    hits = search_explicit(index, "B. Okafor");
    REQUIRE(hits.size() == 10);
    for (size_t i = 1; i < hits.size(); ++i) {
        CHECK(hits[i - 1].score >= hits[i].score);
        if (hits[i - 1].score == hits[i].score) CHECK(hits[i - 1].id < hits[i].id);
    }
    CHECK(search_explicit(index, "B. Okafor") == hits);
}

TEST_CASE("explicit score is 1.0 only for the folded field") {
    testing::ScopedDir dir("muse_retrieval_iff");
    testing::write_library(dir.path());
    const LibraryIndex index = index_library(dir.path());
    std::mt19937_64 rng(11);
    for (const auto& e : index.entries) {
        // Any single-character edit of the title drops below 1.0 for that entry.
        std::string q = e.title;
        const size_t pos = rng() % q.size();
        q[pos] = q[pos] == 'q' ? 'w' : 'q';
        for (const auto& h : search_explicit(index, q, {0.0, 0.95, 0}))
            if (h.id == e.id) CHECK(h.score < 1.0);
        std::string upper = e.title;
        for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        bool found = false;
        for (const auto& h : search_explicit(index, upper))
            if (h.id == e.id) found = h.score == 1.0;
        CHECK(found);
    }
}

TEST_CASE("implicit matching") {
    testing::ScopedDir dir("muse_retrieval_implicit");
    const auto pieces = testing::write_library(dir.path());
    const LibraryIndex index = index_library(dir.path());

    SUBCASE("whole-piece self match") {
        for (size_t i = 0; i < pieces.size(); ++i) {
            const auto hits = match_implicit(index, testing::melody_notes(pieces[i].melody));
            REQUIRE(!hits.empty());
            CHECK(hits[0].id == index.entries[i].id);
            CHECK(hits[0].score == doctest::Approx(1.0));
        }
    }

    SUBCASE("score probes behave like note probes") {
        const Score s = abc::parse(testing::piece_abc(pieces[5]));
        CHECK(match_implicit(index, s) == match_implicit(index, testing::melody_notes(pieces[5].melody)));
    }

    SUBCASE("transposition leaves the ranking unchanged") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 100; ++trial) {
            const auto& p = pieces[rng() % pieces.size()];
            const auto probe = testing::excerpt(p.melody, rng() % 24, 8);
            CHECK(match_implicit(index, testing::melody_notes(probe, 2)) == match_implicit(index, testing::melody_notes(probe)));
        }
    }

    SUBCASE("clean excerpts") {
        int top1 = 0, total = 0;
        for (size_t i = 0; i < pieces.size(); ++i)
            for (size_t offset = 0; offset + 8 <= 32; offset += 4, ++total) {
                const auto hits = match_implicit(index, testing::melody_notes(testing::excerpt(pieces[i].melody, offset, 8)));
                top1 += !hits.empty() && hits[0].id == index.entries[i].id;
            }
        CHECK(top1 == total);
    }

    SUBCASE("one wrong note of eight") {
        std::mt19937_64 rng(17);
        int top1 = 0, total = 0;
        for (size_t i = 0; i < pieces.size(); ++i)
            for (size_t offset = 0; offset + 8 <= 32; offset += 4)
                for (size_t wrong = 0; wrong < 8; ++wrong, ++total) {
                    auto probe = testing::excerpt(pieces[i].melody, offset, 8);
                    probe[wrong] += (rng() % 2 ? 1 : -1) * static_cast<int>(1 + rng() % 3);
                    const auto hits = match_implicit(index, testing::melody_notes(probe));
                    top1 += !hits.empty() && hits[0].id == index.entries[i].id;
                }
        const double rate = static_cast<double>(top1) / total;
        MESSAGE("one-wrong-note top-1 rate " << rate << " over " << total << " probes");
        CHECK(rate >= 0.9);
    }

    SUBCASE("short probes") {
        CHECK_THROWS_AS(match_implicit(index, testing::melody_notes({60, 62, 64, 65})), Error);
        CHECK_NOTHROW(match_implicit(index, testing::melody_notes({60, 62, 64, 65, 67})));
    }
}
