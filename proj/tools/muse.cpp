#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "muse/agent/agent.hpp"
#include "muse/common/error.hpp"
#include "muse/common/file.hpp"
#include "muse/eval/evaluation.hpp"
#include "muse/io/midi.hpp"
#include "muse/pipeline/analysis.hpp"
#include "muse/retrieval/library.hpp"
#include "muse/service/config.hpp"
#include "muse/service/server.hpp"
#include "muse/symbolic/abc.hpp"
#include "muse/symbolic/score_json.hpp"
#include "muse/text/lsa.hpp"
#include "muse/text/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace muse;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kBackend = 3 };

// Bad invocation detected after parsing (missing library, conflicting inputs).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int exit_code(const Error& e) {
    return e.code() == ErrorCode::BackendTimeout || e.code() == ErrorCode::BackendError ? kBackend : kData;
}

// Machine output goes to --output or stdout, nothing else does.
struct Output {
    std::string path;

    void emit(const std::string& text) const {
        const std::string line = text.empty() || text.back() == '\n' ? text : text + "\n";
        if (path.empty()) {
            std::cout << line << std::flush;
        } else {
            write_file(path, line);
        }
    }
    void emit(const json& j) const { emit(j.dump(2)); }
};

std::string file_name(const std::string& path) { return fs::path(path).filename().string(); }

// Settings shared by every subcommand that reads configuration.
struct Settings {
    std::string config_file;
    std::string library;
    std::optional<double> tempo;

    service::ServiceConfig resolve() const {
        auto c = service::load_config(config_file);
        if (!library.empty()) c.library_path = library;
        if (tempo) c.tempo_bpm = *tempo;
        if (c.tempo_bpm <= 0.0) throw UsageError("tempo must be positive");
        return c;
    }
};

struct AlignArgs {
    std::string score;
    std::string performance;
    bool symbolic = false;
};

std::pair<ReferenceEvents, align::AlignmentResult> run_alignment(const AlignArgs& a, double tempo,
                                                                 std::string* piece) {
    const Score score = pipeline::parse_score(read_file(a.score), file_name(a.score));
    if (piece) *piece = score.title.empty() ? file_name(a.score) : score.title;
    const auto reference = score_to_reference(score, tempo);
    const std::string bytes = read_file(a.performance);
    const std::string name = file_name(a.performance);
    pipeline::AnalysisOptions options;
    options.tempo_bpm = tempo;
    if (!a.symbolic) return {reference, pipeline::align_file(reference, bytes, name, options)};
    // Symbolic route: recordings are transcribed first.
    const auto notes = pipeline::kind_of(name) == pipeline::FileKind::Audio
                           ? dsp::baseline_transcribe(dsp::load_wav(bytes)).notes
                           : pipeline::parse_performance(bytes, name);
    return {reference, align::align_symbolic(notes, reference, options.symbolic)};
}

PerformanceNotes load_probe(const std::string& path) {
    const std::string bytes = read_file(path);
    const std::string name = file_name(path);
    if (pipeline::kind_of(name) == pipeline::FileKind::Audio) return dsp::baseline_transcribe(dsp::load_wav(bytes)).notes;
    return pipeline::parse_performance(bytes, name);
}

std::shared_ptr<const retrieval::LibraryIndex> require_library(const service::ServiceConfig& c) {
    if (c.library_path.empty()) throw UsageError("no library configured (use --library, MUSE_LIBRARY_PATH or library_path)");
    return service::open_library(c.library_path);
}

nlohmann::ordered_json metric_json(const std::string& metric, const std::string& ref, const std::string& hyp,
                                   const text::LsaOptions& lsa, const std::string& corpus_file, double* plain) {
    const auto r = text::tokenize(ref);
    const auto h = text::tokenize(hyp);
    const auto prf = [](const text::Prf& p) {
        return nlohmann::ordered_json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
    };
    nlohmann::ordered_json out{{"metric", metric}};
    if (metric == "levenshtein") {
        const auto d = text::levenshtein(std::string_view(ref), std::string_view(hyp));
        *plain = static_cast<double>(d);
        out["value"] = d;
        out["config"] = {{"unit", "code point"}};
    } else if (metric == "rouge1" || metric == "rougel") {
        const auto p = metric == "rouge1" ? text::rouge1(r, h) : text::rougeL(r, h);
        *plain = p.f1;
        out["values"] = prf(p);
        out["config"] = {{"lowercase", true}, {"strip_punctuation", true}};
    } else if (metric == "meteor") {
        const auto d = text::meteor_lite_detail(r, h);
        *plain = d.score;
        out["value"] = d.score;
        out["values"] = nlohmann::ordered_json{{"precision", d.precision}, {"recall", d.recall},
                                               {"f_mean", d.f_mean},       {"penalty", d.penalty},
                                               {"matches", d.matches},     {"chunks", d.chunks}};
        out["config"] = {{"synonyms", false}};
    } else {
        std::vector<std::string> corpus;
        if (!corpus_file.empty()) {
            std::istringstream in(read_file(corpus_file));
            for (std::string line; std::getline(in, line);)
                if (!line.empty()) corpus.push_back(line);
        } else {
            corpus = {ref, hyp};
        }
        const auto v = text::LsaVectorizer::fit(corpus, lsa);
        *plain = v.similarity(ref, hyp);
        out["value"] = *plain;
        out["config"] = {{"use_svd", lsa.use_svd}, {"components", v.dims()}, {"corpus_size", corpus.size()}};
    }
    return out;
}

std::string format_plain(double v) {
    if (v == static_cast<double>(static_cast<long long>(v))) return std::to_string(static_cast<long long>(v));
    std::ostringstream s;
    s.precision(6);
    s << std::fixed << v;
    return s.str();
}

std::string read_stdin_or_file(const std::string& path) {
    if (path != "-") return read_file(path);
    return std::string(std::istreambuf_iterator<char>(std::cin), {});
}

// Interactive loop: a line is a message, ":attach PATH" queues a file for
// the next message, ":quit" leaves.
int repl(agent::Agent& agent, std::string session_id, bool as_json, const Output& out) {
    const bool tty = isatty(STDIN_FILENO);
    if (session_id.empty()) session_id = agent.open_session();
    else agent.session(session_id);
    std::cerr << "session " << session_id << "\n";
    std::vector<agent::Attachment> pending;
    int status = kOk;
    for (std::string line;;) {
        if (tty) std::cerr << "> " << std::flush;
        if (!std::getline(std::cin, line)) break;
        if (line.empty()) continue;
        if (line == ":quit" || line == ":q") break;
        if (line.rfind(":attach ", 0) == 0) {
            const std::string path = line.substr(8);
            try {
                pending.push_back({file_name(path), read_file(path)});
                std::cerr << "attached " << path << "\n";
            } catch (const Error& e) {
                std::cerr << "error: " << e.what() << "\n";
                status = kData;
            }
            continue;
        }
        try {
            const auto turn = agent.run_turn(session_id, line, pending);
            if (as_json) {
                auto j = agent::to_json(turn);
                j["session_id"] = session_id;
                out.emit(j.dump());
            } else {
                out.emit(turn.response);
            }
            status = kOk;
        } catch (const Error& e) {
            std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
            status = exit_code(e);
        }
        pending.clear();
    }
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Score, recording and practice analysis toolkit", "muse"};
    app.require_subcommand(1);
    app.fallthrough();
    Output out;
    app.add_option("-o,--output", out.path, "Write machine output to this file instead of stdout");

    std::function<void()> action;
    Settings settings;
    const auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("--config", settings.config_file, "TOML configuration file")->check(CLI::ExistingFile);
    };

    // parse-abc
    auto* parse_cmd = app.add_subcommand("parse-abc", "Parse ABC and print it canonically or as JSON");
    std::string abc_file;
    bool abc_json = false;
    parse_cmd->add_option("file", abc_file, "ABC file")->required()->check(CLI::ExistingFile);
    parse_cmd->add_flag("--json", abc_json, "Print the parsed score as JSON");
    parse_cmd->callback([&] {
        action = [&] {
            const Score score = abc::parse(read_file(abc_file));
            if (abc_json) out.emit(to_json(score));
            else out.emit(abc::serialize(score));
        };
    });

    auto* split_cmd = app.add_subcommand("abc-split", "Split an ABC score into per-measure fragments (JSON)");
    split_cmd->add_option("file", abc_file, "ABC file")->required()->check(CLI::ExistingFile);
    split_cmd->callback([&] {
        action = [&] {
            json arr = json::array();
            for (const auto& f : abc::split_measures(abc::parse(read_file(abc_file))))
                arr.push_back({{"abc", f.abc},
                               {"time", {{"numerator", f.time.numerator}, {"denominator", f.time.denominator},
                                         {"free", f.time.free}}}});
            out.emit(arr);
        };
    });

    auto* concat_cmd = app.add_subcommand("abc-concat", "Rebuild a score from abc-split fragments (- reads stdin)");
    std::string fragments_file;
    concat_cmd->add_option("file", fragments_file, "Fragment JSON file or -")->required();
    concat_cmd->callback([&] {
        action = [&] {
            std::vector<abc::MeasureFragment> fragments;
            try {
                for (const auto& f : json::parse(read_stdin_or_file(fragments_file))) {
                    abc::MeasureFragment m;
                    m.abc = f.at("abc").get<std::string>();
                    const auto& t = f.at("time");
                    m.time.numerator = t.at("numerator").get<int>();
                    m.time.denominator = t.at("denominator").get<int>();
                    m.time.free = t.value("free", false);
                    fragments.push_back(m);
                }
            } catch (const json::exception& e) {
                throw Error(ErrorCode::InvalidArgument, std::string("malformed fragment JSON: ") + e.what());
            }
            out.emit(abc::serialize(abc::concat_measures(fragments)));
        };
    });

    // transcribe
    auto* transcribe_cmd = app.add_subcommand("transcribe", "Transcribe a WAV recording to notes JSON");
    std::string wav_file, midi_out;
    transcribe_cmd->add_option("wav", wav_file, "WAV file")->required()->check(CLI::ExistingFile);
    transcribe_cmd->add_option("--midi-out", midi_out, "Also write the notes as a MIDI file");
    transcribe_cmd->callback([&] {
        action = [&] {
            const auto tr = dsp::baseline_transcribe(dsp::load_wav(read_file(wav_file)));
            if (!midi_out.empty()) write_file(midi_out, io::export_midi(tr.notes));
            out.emit(json{{"notes", pipeline::notes_to_json(tr.notes)}});
        };
    });

    // align / evaluate
    AlignArgs align_args;
    const auto add_align_args = [&](CLI::App* cmd) {
        cmd->add_option("--score", align_args.score, "Score file (ABC or MusicXML)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--performance", align_args.performance, "WAV, MIDI or notes JSON")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_flag("--symbolic", align_args.symbolic, "Use the note-level aligner (recordings are transcribed)");
        cmd->add_option("--tempo", settings.tempo, "Nominal score tempo in BPM");
        add_config(cmd);
    };
    auto* align_cmd = app.add_subcommand("align", "Align a performance to a score (AlignmentResult JSON)");
    add_align_args(align_cmd);
    align_cmd->callback([&] {
        action = [&] {
            const auto c = settings.resolve();
            out.emit(align::to_json(run_alignment(align_args, c.tempo_bpm, nullptr).second));
        };
    });
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Per-measure evaluation report (JSON)");
    add_align_args(evaluate_cmd);
    evaluate_cmd->callback([&] {
        action = [&] {
            const auto c = settings.resolve();
            std::string piece;
            const auto [reference, alignment] = run_alignment(align_args, c.tempo_bpm, &piece);
            out.emit(eval::to_json(eval::evaluate_performance(reference, alignment, piece)).dump(2));
        };
    });

    // metrics
    auto* metrics_cmd = app.add_subcommand("metrics", "Text similarity between a reference and a hypothesis");
    std::string metric, ref, hyp, corpus_file;
    bool metric_json_out = false;
    text::LsaOptions lsa;
    bool no_svd = false;
    metrics_cmd->add_option("metric", metric, "levenshtein, rouge1, rougel, meteor or lsa")
        ->required()
        ->check(CLI::IsMember({"levenshtein", "rouge1", "rougel", "meteor", "lsa"}));
    metrics_cmd->add_option("--ref", ref, "Reference text")->required();
    metrics_cmd->add_option("--hyp", hyp, "Hypothesis text")->required();
    metrics_cmd->add_flag("--json", metric_json_out, "Print {metric, value(s), config}");
    auto* corpus_opt = metrics_cmd->add_option("--corpus", corpus_file, "LSA fitting corpus, one document per line")
                           ->check(CLI::ExistingFile);
    auto* components_opt =
        metrics_cmd->add_option("--components", lsa.components, "LSA dimensions")->check(CLI::PositiveNumber);
    auto* no_svd_opt = metrics_cmd->add_flag("--no-svd", no_svd, "Plain TF-IDF cosine");
    no_svd_opt->excludes(components_opt);
    metrics_cmd->callback([&] {
        if (metric != "lsa" && (corpus_opt->count() || components_opt->count() || no_svd_opt->count()))
            throw CLI::ValidationError("--corpus, --components and --no-svd apply to lsa only");
        action = [&] {
            lsa.use_svd = !no_svd;
            double plain = 0.0;
            const auto j = metric_json(metric, ref, hyp, lsa, corpus_file, &plain);
            out.emit(metric_json_out ? j.dump(2) : format_plain(plain));
        };
    });

    // library
    auto* library_cmd = app.add_subcommand("library", "Index and query a score library");
    library_cmd->require_subcommand(1);
    size_t limit = 10;
    auto* index_cmd = library_cmd->add_subcommand("index", "Index a directory and write library-index.json into it");
    std::string library_dir;
    index_cmd->add_option("dir", library_dir, "Library directory")->required()->check(CLI::ExistingDirectory);
    index_cmd->callback([&] {
        action = [&] {
            const auto index = retrieval::index_library(library_dir);
            retrieval::save_index(index, fs::path(library_dir) / retrieval::kIndexFileName);
            json skipped = json::array();
            for (const auto& s : index.skipped) skipped.push_back({{"path", s.path}, {"reason", s.reason}});
            out.emit(json{{"entries", index.entries.size()}, {"skipped", skipped}});
        };
    });
    auto* search_cmd = library_cmd->add_subcommand("search", "Fuzzy title/composer search");
    std::string query;
    search_cmd->add_option("query", query, "Search text")->required();
    auto* match_cmd = library_cmd->add_subcommand("match", "Find pieces resembling a recording, MIDI, notes or score");
    std::string probe_file;
    match_cmd->add_option("file", probe_file, "Probe file")->required()->check(CLI::ExistingFile);
    for (auto* cmd : {search_cmd, match_cmd}) {
        cmd->add_option("--library", settings.library, "Library directory")->check(CLI::ExistingDirectory);
        cmd->add_option("--limit", limit, "Maximum number of hits (0 = all)");
        add_config(cmd);
    }
    search_cmd->callback([&] {
        action = [&] {
            const auto index = require_library(settings.resolve());
            const auto hits = retrieval::search_explicit(*index, query, {0.5, 0.95, limit});
            out.emit(json{{"query", query}, {"hits", retrieval::hits_to_json(*index, hits)}});
        };
    });
    match_cmd->callback([&] {
        action = [&] {
            const auto index = require_library(settings.resolve());
            const std::string name = file_name(probe_file);
            const auto hits = pipeline::kind_of(name) == pipeline::FileKind::Score
                                  ? retrieval::match_implicit(*index, pipeline::parse_score(read_file(probe_file), name),
                                                              {limit})
                                  : retrieval::match_implicit(*index, load_probe(probe_file), {limit});
            out.emit(json{{"hits", retrieval::hits_to_json(*index, hits)}});
        };
    });

    // agent
    auto* agent_cmd = app.add_subcommand("agent", "Interactive assistant over stdin/stdout");
    std::string session_id, sessions_dir;
    bool agent_json = false;
    add_config(agent_cmd);
    agent_cmd->add_option("--library", settings.library, "Library directory")->check(CLI::ExistingDirectory);
    agent_cmd->add_option("--session", session_id, "Resume a persisted session");
    agent_cmd->add_option("--sessions-dir", sessions_dir, "Where sessions are stored");
    agent_cmd->add_option("--tempo", settings.tempo, "Nominal score tempo in BPM");
    agent_cmd->add_flag("--json", agent_json, "Print each turn as one JSON line");
    int repl_status = kOk;
    agent_cmd->callback([&] {
        action = [&] {
            auto c = settings.resolve();
            if (!sessions_dir.empty()) c.sessions_dir = sessions_dir;
            agent::Agent agent(service::agent_config(c));
            repl_status = repl(agent, session_id, agent_json, out);
        };
    });

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    std::optional<std::string> host;
    std::optional<int> port;
    add_config(serve_cmd);
    serve_cmd->add_option("--library", settings.library, "Library directory")->check(CLI::ExistingDirectory);
    serve_cmd->add_option("--host", host, "Bind address");
    serve_cmd->add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
    serve_cmd->callback([&] {
        action = [&] {
            auto c = settings.resolve();
            if (host) c.host = *host;
            if (port) c.port = *port;
            service::Service service(c);
            const int bound = service.bind();
            std::cerr << "listening on http://" << c.host << ":" << bound << "\n";
            service.listen();
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        action();
        return repl_status;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    }
}
