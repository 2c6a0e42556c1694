#include <sys/wait.h>

#include <cstdlib>

#include "doctest.h"
#include "muse/common/file.hpp"
#include "muse/symbolic/abc.hpp"
#include "support/library_fixture.hpp"
#include "support/melody_fixture.hpp"

using namespace muse;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

// Runs the CLI in `dir` with optional stdin text and environment prefix.
Run muse_cli(const fs::path& dir, const std::string& args, const std::string& input = "",
             const std::string& env = "") {
    write_file(dir / "stdin.txt", input);
    const std::string cmd = "cd '" + dir.string() + "' && " + env + " '" + MUSE_CLI + "' " + args +
                            " < stdin.txt > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(dir / "stdout.txt");
    r.err = read_file(dir / "stderr.txt");
    return r;
}

// Fixture files plus a writable copy of the library.
struct Workspace {
    testing::ScopedDir dir{"muse_cli"};

    Workspace() {
        write_file(path() / "melody.xml", testing::melody_xml());
        write_file(path() / "melody.mid", testing::melody_midi());
        write_file(path() / "melody.wav", testing::melody_wav());
        fs::create_directories(path() / "library");
        for (const auto& e : fs::directory_iterator(testing::agent_data() / "library"))
            fs::copy_file(e.path(), path() / "library" / e.path().filename());
    }
    const fs::path& path() const { return dir.path(); }
    Run run(const std::string& args, const std::string& input = "", const std::string& env = "") const {
        return muse_cli(path(), args, input, env);
    }
};

}  // namespace

TEST_CASE("cli: metrics") {
    Workspace ws;
    const auto r = ws.run("metrics levenshtein --ref kitten --hyp sitting");
    CHECK(r.code == 0);
    CHECK(r.out == "3\n");
    CHECK(r.err.empty());

    const auto j = ws.run("metrics rougel --ref 'the cat sat' --hyp 'the cat' --json");
    REQUIRE(j.code == 0);
    const auto parsed = json::parse(j.out);
    CHECK(parsed["metric"] == "rougel");
    CHECK(parsed["values"]["precision"] == 1.0);
    CHECK(parsed.contains("config"));

    CHECK(ws.run("metrics bleu --ref a --hyp b").code == 1);
    CHECK(ws.run("metrics meteor --ref a --hyp b --no-svd").code == 1);
    CHECK(ws.run("metrics lsa --ref a --hyp b --no-svd --components 3").code == 1);
    const auto lsa = ws.run("metrics lsa --ref 'tonic chord' --hyp 'tonic chord'");
    CHECK(lsa.code == 0);
    CHECK(std::stod(lsa.out) == doctest::Approx(1.0));
}

TEST_CASE("cli: usage and data errors keep stdout clean") {
    Workspace ws;
    const auto missing = ws.run("align --performance melody.mid");
    CHECK(missing.code == 1);
    CHECK(missing.out.empty());
    CHECK(missing.err.find("--score") != std::string::npos);

    CHECK(ws.run("").code == 1);
    CHECK(ws.run("frobnicate").code == 1);
    CHECK(ws.run("library search tonic").code == 1);  // no library configured

    write_file(ws.path() / "broken.abc", "X:1\nT:no key\nCDEF|\n");
    const auto broken = ws.run("parse-abc broken.abc");
    CHECK(broken.code == 2);
    CHECK(broken.out.empty());
    CHECK(broken.err.find("error: MalformedHeader") == 0);

    write_file(ws.path() / "notes.json", "[{\"pitch\": 60}]");
    CHECK(ws.run("evaluate --score melody.xml --performance notes.json").code == 2);
}

TEST_CASE("cli: evaluate on the self-rendered fixture") {
    Workspace ws;
    const auto r = ws.run("evaluate --score melody.xml --performance melody.mid --tempo 120");
    REQUIRE(r.code == 0);
    const auto report = json::parse(r.out);
    CHECK(report["piece"] == "Evening Study");
    REQUIRE(report["measures"].size() == 4);
    for (const auto& m : report["measures"]) CHECK(m["eva_note"] == 1.0);

    // Byte-identical on a second run.
    CHECK(ws.run("evaluate --score melody.xml --performance melody.mid --tempo 120").out == r.out);

    const auto audio = ws.run("evaluate --score melody.xml --performance melody.wav --tempo 100");
    REQUIRE(audio.code == 0);
    for (const auto& m : json::parse(audio.out)["measures"]) CHECK(m["eva_note"] == 1.0);

    const auto symbolic = ws.run("align --score melody.xml --performance melody.wav --symbolic --tempo 100");
    REQUIRE(symbolic.code == 0);
    CHECK(json::parse(symbolic.out)["correspondences"]["missing"].empty());
}

TEST_CASE("cli: tempo precedence is flag, env, file, default") {
    Workspace ws;
    write_file(ws.path() / "muse.toml", "tempo_bpm = 60\n");
    const std::string base = "evaluate --score melody.xml --performance melody.mid";
    const auto tempo = [&](const std::string& extra, const std::string& env) {
        const auto r = ws.run(base + extra, "", env);
        REQUIRE(r.code == 0);
        return json::parse(r.out)["tempo_bpm"].get<double>();
    };
    CHECK(tempo("", "") == 120.0);
    CHECK(tempo(" --config muse.toml", "") == 60.0);
    CHECK(tempo(" --config muse.toml", "MUSE_TEMPO_BPM=90") == 90.0);
    CHECK(tempo(" --config muse.toml --tempo 100", "MUSE_TEMPO_BPM=90") == 100.0);
}

TEST_CASE("cli: abc, transcription and output files") {
    Workspace ws;
    const std::string ode = read_file(testing::agent_data() / "library" / "ode_to_joy.abc");
    const auto canonical = ws.run("parse-abc library/ode_to_joy.abc");
    REQUIRE(canonical.code == 0);
    CHECK(event_equivalent(abc::parse(canonical.out), abc::parse(ode)));
    const auto as_json = ws.run("parse-abc library/ode_to_joy.abc --json");
    REQUIRE(as_json.code == 0);
    CHECK(json::parse(as_json.out).is_object());

    const auto split = ws.run("abc-split library/ode_to_joy.abc");
    REQUIRE(split.code == 0);
    const auto joined = ws.run("abc-concat -", split.out);
    REQUIRE(joined.code == 0);
    CHECK(event_equivalent(abc::parse(joined.out), abc::parse(ode)));

    const auto tr = ws.run("transcribe melody.wav --midi-out take.mid");
    REQUIRE(tr.code == 0);
    CHECK(json::parse(tr.out)["notes"].size() == 16);
    CHECK(fs::file_size(ws.path() / "take.mid") > 0);
    const auto realigned = ws.run("evaluate --score melody.xml --performance take.mid --tempo 100");
    REQUIRE(realigned.code == 0);
    for (const auto& m : json::parse(realigned.out)["measures"]) CHECK(m["eva_note"] == 1.0);

    const auto to_file = ws.run("metrics levenshtein --ref abc --hyp abd -o distance.txt");
    CHECK(to_file.code == 0);
    CHECK(to_file.out.empty());
    CHECK(read_file(ws.path() / "distance.txt") == "1\n");
}

TEST_CASE("cli: library") {
    Workspace ws;
    const auto index = ws.run("library index library");
    REQUIRE(index.code == 0);
    CHECK(json::parse(index.out)["entries"] == 3);
    CHECK(fs::exists(ws.path() / "library" / "library-index.json"));

    const auto search = ws.run("library search \"Kikujiro's Summer\" --library library --limit 1");
    REQUIRE(search.code == 0);
    const auto hits = json::parse(search.out)["hits"];
    REQUIRE(hits.size() == 1);
    CHECK(hits[0]["id"] == "kikujiro_summer");
    CHECK(hits[0]["score"] == 1.0);

    const auto match = ws.run("library match melody.wav --limit 1", "", "MUSE_LIBRARY_PATH=library");
    REQUIRE(match.code == 0);
    CHECK(json::parse(match.out)["hits"][0]["id"] == "evening_study");
}

TEST_CASE("cli: agent repl") {
    Workspace ws;
    const std::string input = "What is a dominant seventh?\n"
                              ":attach melody.xml\n"
                              "Summarize this score.\n"
                              ":quit\n";
    const auto r = ws.run("agent --json --library library --sessions-dir sessions", input);
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::vector<json> turns;
    for (std::string line; std::getline(lines, line);) turns.push_back(json::parse(line));
    REQUIRE(turns.size() == 2);
    CHECK(turns[0]["intent"]["kind"] == "theory");
    CHECK(turns[1]["intent"]["kind"] == "score_analysis");
    const std::string session = turns[0]["session_id"];
    CHECK(fs::exists(ws.path() / "sessions" / session / "memory.jsonl"));

    // Resumed sessions continue the turn count.
    const auto resumed = ws.run("agent --json --sessions-dir sessions --session " + session, "And a ninth?\n");
    REQUIRE(resumed.code == 0);
    CHECK(json::parse(resumed.out)["turn"] == 3);
    CHECK(ws.run("agent --sessions-dir sessions --session nope", "hi\n").code == 2);

    write_file(ws.path() / "remote.toml",
               "[llm]\nbackend = \"openai\"\nurl = \"http://127.0.0.1:1\"\ntimeout_sec = 5\n");
    const auto offline = ws.run("agent --config remote.toml --sessions-dir sessions", "What is a fifth?\n");
    CHECK(offline.code == 3);
    CHECK(offline.out.empty());
    CHECK(offline.err.find("BackendError") != std::string::npos);
}

TEST_CASE("cli: stdout matches the golden transcript") {
    Workspace ws;
    const std::vector<std::string> commands = {
        "metrics levenshtein --ref kitten --hyp sitting",
        "metrics rouge1 --ref 'the cat sat on the mat' --hyp 'the cat lay on a mat' --json",
        "metrics rougel --ref 'the cat sat on the mat' --hyp 'the cat lay on a mat' --json",
        "metrics meteor --ref 'the cat sat on the mat' --hyp 'on the mat the cat sat' --json",
        "metrics lsa --ref 'tonic dominant tonic' --hyp 'dominant tonic' --no-svd --json",
        "parse-abc library/ode_to_joy.abc",
        "abc-split library/evening_study.abc",
        "align --score melody.xml --performance melody.mid",
        "evaluate --score melody.xml --performance melody.mid",
        "library search 'Ode to Joy' --library library",
        "library match library/ode_to_joy.abc --library library --limit 2",
    };
    nlohmann::ordered_json transcript = nlohmann::ordered_json::array();
    for (const auto& c : commands) {
        const auto r = ws.run(c);
        INFO(c);
        CHECK(r.code == 0);
        CHECK(r.err.empty());
        transcript.push_back({{"command", c}, {"stdout", r.out}});
    }
    const auto golden_file = fs::path(MUSE_TEST_DATA) / "cli" / "golden_stdout.json";
    const std::string text = transcript.dump(2) + "\n";
    if (std::getenv("MUSE_UPDATE_GOLDEN") || !fs::exists(golden_file)) {
        fs::create_directories(golden_file.parent_path());
        write_file(golden_file, text);
        FAIL("golden transcript written to " << golden_file << "; rerun to compare");
    }
    CHECK(text == read_file(golden_file));
}
