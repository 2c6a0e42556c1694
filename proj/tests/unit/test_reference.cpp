#include "doctest.h"
#include "muse/io/reference.hpp"
#include "muse/symbolic/abc.hpp"
#include "support/corpus.hpp"

using namespace muse;

TEST_CASE("reference: quarter notes at 120 BPM") {
    const auto ref = score_to_reference(abc::parse("X:1\nM:4/4\nL:1/4\nK:C\nCDEF|\n"), 120.0);
    REQUIRE(ref.events.size() == 4);
    const double expected[] = {0.0, 0.5, 1.0, 1.5};
    for (size_t i = 0; i < 4; ++i) {
        CHECK(ref.events[i].onset_sec == doctest::Approx(expected[i]));
        CHECK(ref.events[i].score_index == static_cast<int>(i));
    }
}

TEST_CASE("reference: chord measure is one event") {
    const auto ref = score_to_reference(abc::parse("X:1\nM:4/4\nL:1/4\nK:C\n[CEG]4|\n"), 100.0);
    REQUIRE(ref.events.size() == 1);
    CHECK(ref.events[0].pitches == std::vector<int>{60, 64, 67});
    CHECK(ref.events[0].durations_beats == std::vector<double>{4.0, 4.0, 4.0});
}

TEST_CASE("reference: simultaneous notes in two voices merge") {
    const Score s = abc::parse("X:1\nM:2/4\nL:1/4\nV:1\nV:2\nK:C\nV:1\ncd|\nV:2\nC,2|\n");
    const auto ref = score_to_reference(s, 60.0);
    REQUIRE(ref.events.size() == 2);
    CHECK(ref.events[0].pitches == std::vector<int>{48, 72});
    CHECK(ref.events[1].pitches == std::vector<int>{74});
    CHECK(ref.events[1].onset_sec == doctest::Approx(1.0));
}

TEST_CASE("reference: invalid tempo") {
    CHECK_THROWS_AS(score_to_reference(Score{}, 0.0), Error);
}

TEST_CASE("reference: monotone, affine in beats, indices map to measures") {
    for (const auto& path : testing::corpus_files()) {
        CAPTURE(path.filename().string());
        const Score s = abc::parse(testing::read_file(path));
        for (double tempo : {72.0, 120.0}) {
            const auto ref = score_to_reference(s, tempo);
            for (size_t i = 0; i < ref.events.size(); ++i) {
                const auto& e = ref.events[i];
                CHECK(e.score_index == static_cast<int>(i));
                CHECK(e.onset_sec == doctest::Approx(e.onset_beats * 60.0 / tempo));
                CHECK(e.measure_index >= 0);
                CHECK(e.measure_index < ref.measure_count);
                if (i > 0) CHECK(e.onset_beats > ref.events[i - 1].onset_beats);
            }
        }
    }
}

TEST_CASE("reference: render plays every note") {
    const auto ref = score_to_reference(abc::parse("X:1\nM:4/4\nL:1/4\nK:C\n[CE]2 G2|\n"), 120.0);
    const auto notes = render(ref);
    REQUIRE(notes.size() == 3);
    CHECK(notes[0].pitch == 60);
    CHECK(notes[0].offset_sec == doctest::Approx(1.0));
    CHECK(notes[2].pitch == 67);
    CHECK(notes[2].onset_sec == doctest::Approx(1.0));
}
