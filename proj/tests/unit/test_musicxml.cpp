#include "doctest.h"
#include "muse/io/musicxml.hpp"
#include "muse/io/reference.hpp"
#include "support/corpus.hpp"

using namespace muse;

namespace {

std::string fixture(const std::string& name) { return std::string(MUSE_TEST_DATA) + "/musicxml/" + name; }

}  // namespace

TEST_CASE("musicxml: one whole note") {
    const Score s = io::load_musicxml(fixture("whole_note.xml"));
    REQUIRE(s.measures.size() == 1);
    REQUIRE(s.measures[0].events.size() == 1);
    CHECK(s.measures[0].events[0].pitches.at(0).midi() == 60);
    CHECK(s.measures[0].events[0].duration == Fraction(1));
    CHECK(s.voices == std::vector<std::string>{"P1"});
    CHECK_FALSE(s.measures[0].pickup);
}

TEST_CASE("musicxml: chord on the second note") {
    Warnings warnings;
    const Score s = io::load_musicxml(fixture("chord.xml"), &warnings);
    REQUIRE(s.measures.size() == 1);
    const auto& events = s.measures[0].events;
    REQUIRE(events.size() == 2);
    REQUIRE(events[0].pitches.size() == 2);
    CHECK(events[0].pitches[0].midi() == 67);
    CHECK(events[0].pitches[1].midi() == 71);
    CHECK(events[1].is_rest());
    CHECK(s.title == "Chord Test");
    CHECK(s.composer == "Anon");
    CHECK(s.measures[0].key.fifths == 1);
    CHECK(s.measures[0].time.str() == "2/4");
    // Dynamics and the fermata are reported, not silently dropped.
    CHECK(warnings.size() == 2);
}

TEST_CASE("musicxml: compressed archive matches the plain document") {
    const Score plain = io::load_musicxml(fixture("chord.xml"));
    const Score packed = io::load_musicxml(fixture("chord.mxl"));
    CHECK(event_equivalent(plain, packed));
    CHECK(packed.title == plain.title);
}

TEST_CASE("musicxml: tie across a barline sounds once") {
    const Score s = io::load_musicxml(fixture("tie_across_bar.xml"));
    REQUIRE(s.measures.size() == 2);
    CHECK(s.measures[0].events[0].tie_start);
    CHECK(s.measures[1].events[0].tie_end);
    const auto notes = sounding_notes(s);
    REQUIRE(notes.size() == 1);
    CHECK(notes[0].midi == 64);
    CHECK(notes[0].duration == Fraction(1));
}

TEST_CASE("musicxml: parts and voices become score voices") {
    const Score s = io::load_musicxml(fixture("two_parts.xml"));
    CHECK(s.voices == std::vector<std::string>{"P1.v1", "P1.v2", "P2"});
    REQUIRE(s.measures.size() == 1);
    CHECK(s.measures[0].repeat_start);
    CHECK(s.measures[0].repeat_end);
    CHECK(s.measures[0].events.size() == 3 + 1 + 2);
    CHECK_NOTHROW(validate(s));
    // Played twice because of the repeat; the first beat is a three-note chord.
    const auto ref = score_to_reference(s, 120.0);
    REQUIRE(ref.events.size() == 6);
    CHECK(ref.events[0].pitches == std::vector<int>{45, 69, 76});
    CHECK(ref.events[1].pitches == std::vector<int>{74});
    CHECK(ref.events[2].pitches == std::vector<int>{73});
    CHECK(ref.events[3].onset_beats == doctest::Approx(3.0));
}

TEST_CASE("musicxml: errors") {
    try {
        io::load_musicxml(fixture("timewise.xml"));
        FAIL("expected UnsupportedLayout");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedLayout);
    }
    try {
        io::parse_musicxml("<score-partwise><part id='P1'><measure></part></score-partwise>");
        FAIL("expected XmlSyntaxError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::XmlSyntaxError);
    }
    try {
        io::extract_mxl("PK\x03\x04 definitely not a zip");
        FAIL("expected TruncatedFile");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TruncatedFile);
    }
}
