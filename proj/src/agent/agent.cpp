#include "muse/agent/agent.hpp"

#include <ctime>
#include <iomanip>
#include <random>
#include <sstream>

#include "muse/common/file.hpp"
#include "muse/symbolic/abc.hpp"

namespace muse::agent {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

std::string random_id() {
    std::random_device rd;
    std::mt19937_64 rng((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << rng();
    return out.str();
}

bool valid_id(const std::string& id) {
    if (id.empty() || id.size() > 64) return false;
    for (unsigned char c : id)
        if (!std::isalnum(c) && c != '-' && c != '_') return false;
    return true;
}

// The alignment without the echoed performance and frame path.
std::string alignment_context(const align::AlignmentResult& r) {
    auto j = align::to_json(r);
    j.erase("performance");
    j.erase("path");
    return j.dump();
}

// The whole report, or one measure row plus the summary when the question
// names a measure the report has.
std::string evaluation_context(const nlohmann::json& report, std::optional<int> measure) {
    if (measure && report.contains("measures"))
        for (const auto& row : report["measures"])
            if (row.value("measure_id", -1) == *measure) {
                nlohmann::ordered_json j;
                j["piece"] = report.value("piece", "");
                j["measure"] = row;
                j["summary"] = report.value("summary", nlohmann::json::object());
                return j.dump();
            }
    return report.dump();
}

const Attachment* first_of(const std::vector<Attachment>& attachments, std::initializer_list<pipeline::FileKind> kinds) {
    for (const auto& a : attachments)
        for (auto k : kinds)
            if (pipeline::kind_of(a.name) == k) return &a;
    return nullptr;
}

class TurnRunner {
public:
    TurnRunner(const AgentConfig& config, Session& session, int turn)
        : config_(config), session_(session), turn_(turn) {}

    TurnResult run(const std::string& message, const std::vector<Attachment>& attachments) {
        message_ = message;
        record(MemoryKind::UserMessage, "user", message);
        intent_ = route_intent(message, attachments);
        add_history();
        switch (intent_.kind) {
            case IntentKind::Theory: break;
            case IntentKind::ScoreAnalysis: parse_score(*first_of(attachments, {pipeline::FileKind::Score})); break;
            case IntentKind::PerformanceAnalysis: performance(attachments); break;
            case IntentKind::RetrievalExplicit: explicit_retrieval(); break;
            case IntentKind::RetrievalImplicit: implicit_retrieval(attachments); break;
            case IntentKind::Followup: followup(); break;
        }
        TurnResult result;
        result.turn = turn_;
        result.intent = intent_;
        result.prompt = compose_prompt(intent_, context_, message, config_.prompt);
        result.response =
            complete_with_timeout(config_.backend, result.prompt, config_.generation, config_.backend_timeout);
        record(MemoryKind::ModelResponse, "response", result.response);
        result.trace = std::move(trace_);
        result.memory_delta = std::move(delta_);
        return result;
    }

private:
    template <class F>
    auto invoke(const char* module, const std::string& operation, const std::string& input, F&& body) {
        trace_.push_back({module, operation, input, ""});
        try {
            return body(trace_.back());
        } catch (const ModuleFailure&) {
            throw;
        } catch (const std::exception& e) {
            throw ModuleFailure(module, e.what());
        }
    }

    void record(MemoryKind kind, const std::string& label, const std::string& content) {
        MemoryEntry e;
        e.turn = turn_;
        e.kind = kind;
        e.label = label;
        e.content = content;
        e.timestamp = config_.clock ? config_.clock() : utc_now();
        delta_.push_back(session_.memory.append(std::move(e)));
    }

    void add_history() {
        std::string text;
        int first_turn = turn_ - static_cast<int>(config_.history_turns);
        for (const auto& e : session_.memory.entries()) {
            if (e.turn >= turn_ || e.turn < first_turn) continue;
            if (e.kind == MemoryKind::UserMessage)
                text += "turn " + std::to_string(e.turn) + " user: " + session_.memory.payload(e) + "\n";
            else if (e.kind == MemoryKind::ModelResponse)
                text += "turn " + std::to_string(e.turn) + " assistant: " + session_.memory.payload(e) + "\n";
        }
        if (!text.empty()) context_.push_back({"HISTORY", text});
    }

    void score_context(const Score& score) {
        std::string abc;
        try {
            abc = abc::serialize(score);
        } catch (const Error& e) {
            abc = "% not representable in ABC: " + std::string(e.what()) + "\n";
        }
        record(MemoryKind::ModuleOutput, "SCORE_ABC", abc);
        context_.push_back({"SCORE_ABC", abc});
    }

    ReferenceEvents parse_score(const std::string& name, const std::string& bytes) {
        return invoke(kSymbolicIo, "parse_score", name, [&](TraceStep& step) {
            const Score score = pipeline::parse_score(bytes, name);
            piece_ = score.title.empty() ? name : score.title;
            score_context(score);
            step.output = "SCORE_ABC";
            return score_to_reference(score, config_.analysis.tempo_bpm);
        });
    }
    ReferenceEvents parse_score(const Attachment& a) { return parse_score(a.name, a.bytes); }

    dsp::Transcription transcribe(const Attachment& a) {
        return invoke(kAudioDsp, "transcribe", a.name, [&](TraceStep& step) {
            auto tr = dsp::baseline_transcribe(dsp::load_wav(a.bytes), config_.analysis.transcriber);
            record(MemoryKind::ModuleOutput, "TRANSCRIPTION_JSON", pipeline::notes_to_json(tr.notes).dump());
            step.output = "TRANSCRIPTION_JSON (" + std::to_string(tr.notes.size()) + " notes)";
            return tr;
        });
    }

    PerformanceNotes parse_performance(const Attachment& a) {
        return invoke(kSymbolicIo, "parse_performance", a.name, [&](TraceStep& step) {
            auto notes = pipeline::parse_performance(a.bytes, a.name);
            step.output = std::to_string(notes.size()) + " notes";
            return notes;
        });
    }

    void evaluate(const ReferenceEvents& reference, const align::AlignmentResult& alignment) {
        record(MemoryKind::ModuleOutput, "ALIGNMENT_JSON", align::to_json(alignment).dump());
        context_.push_back({"ALIGNMENT_JSON", alignment_context(alignment)});
        invoke(kPerfEval, "evaluate_performance", "ALIGNMENT_JSON", [&](TraceStep& step) {
            const auto report = eval::evaluate_performance(reference, alignment, piece_);
            const nlohmann::json j = eval::to_json(report);
            record(MemoryKind::ModuleOutput, "EVALUATION_JSON", j.dump());
            context_.push_back({"EVALUATION_JSON", evaluation_context(j, mentioned_measure(message_))});
            step.output = "EVALUATION_JSON (" + std::to_string(report.measures.size()) + " measures)";
        });
    }

    void align_audio_and_evaluate(const ReferenceEvents& reference, const dsp::Transcription& tr) {
        const auto alignment = invoke(kHmmAlign, "align_audio", "TRANSCRIPTION_JSON", [&](TraceStep& step) {
            const auto bank = align::train_gmm_bank(
                {align::reference_frames(reference), align::energy_frames(tr.features)}, config_.analysis.bank);
            auto r = align::align_audio(tr.features, reference, bank, config_.analysis.audio, &tr);
            step.output = "ALIGNMENT_JSON";
            return r;
        });
        evaluate(reference, alignment);
    }

    void align_notes_and_evaluate(const ReferenceEvents& reference, const PerformanceNotes& notes) {
        const auto alignment = invoke(kHmmAlign, "align_symbolic", "performance notes", [&](TraceStep& step) {
            auto r = align::align_symbolic(notes, reference, config_.analysis.symbolic);
            step.output = "ALIGNMENT_JSON";
            return r;
        });
        evaluate(reference, alignment);
    }

    void performance(const std::vector<Attachment>& attachments) {
        const auto reference = parse_score(*first_of(attachments, {pipeline::FileKind::Score}));
        if (const Attachment* audio = first_of(attachments, {pipeline::FileKind::Audio}))
            align_audio_and_evaluate(reference, transcribe(*audio));
        else
            align_notes_and_evaluate(
                reference, parse_performance(*first_of(attachments, {pipeline::FileKind::Midi, pipeline::FileKind::Notes})));
    }

    const retrieval::LibraryIndex& library() const {
        if (!config_.library) throw ModuleFailure(kRetrieval, "no library index loaded");
        return *config_.library;
    }

    // Lists the hits and stores the top file. Returns the top entry.
    const retrieval::LibraryEntry* retrieved(const std::vector<retrieval::RetrievalHit>& hits) {
        nlohmann::ordered_json list = nlohmann::ordered_json::array();
        for (size_t i = 0; i < hits.size() && i < config_.retrieved_hits; ++i) {
            const auto* e = library().find(hits[i].id);
            list.push_back({{"id", hits[i].id},
                            {"title", e ? e->title : ""},
                            {"composer", e ? e->composer : ""},
                            {"format", e ? e->format : ""},
                            {"score", hits[i].score}});
        }
        std::string text = list.dump() + "\n";
        const retrieval::LibraryEntry* top = hits.empty() ? nullptr : library().find(hits[0].id);
        if (top) {
            std::string content;
            if (top->format != "midi") {
                try {
                    content = read_file(config_.library_root / top->path);
                } catch (const Error& e) {
                    throw ModuleFailure(kRetrieval, e.what());
                }
            }
            record(MemoryKind::RetrievedFile, top->path, content);
            if (!content.empty() && top->path.size() > 4 && top->path.substr(top->path.size() - 4) == ".abc")
                text += "top match " + top->path + ":\n" + content;
        }
        context_.push_back({"RETRIEVED", text});
        return top;
    }

    void explicit_retrieval() {
        const auto hits = invoke(kRetrieval, "search_explicit", message_, [&](TraceStep& step) {
            auto h = retrieval::search_explicit(library(), message_, {0.5, 0.95, config_.retrieved_hits});
            step.output = std::to_string(h.size()) + " hits" + (h.empty() ? "" : ", top " + h[0].id);
            return h;
        });
        retrieved(hits);
    }

    // A score for the top hit when it is a score file.
    std::optional<ReferenceEvents> retrieved_reference(const retrieval::LibraryEntry* top) {
        if (!top || top->format == "midi") return std::nullopt;
        const std::string bytes = read_file(config_.library_root / top->path);
        return parse_score(top->path, bytes);
    }

    template <class Probe>
    std::vector<retrieval::RetrievalHit> match(const Probe& probe, const std::string& input) {
        return invoke(kRetrieval, "match_implicit", input, [&](TraceStep& step) {
            auto h = retrieval::match_implicit(library(), probe, {config_.retrieved_hits});
            step.output = std::to_string(h.size()) + " hits" + (h.empty() ? "" : ", top " + h[0].id);
            return h;
        });
    }

    void implicit_retrieval(const std::vector<Attachment>& attachments) {
        if (const Attachment* audio = first_of(attachments, {pipeline::FileKind::Audio})) {
            const auto tr = transcribe(*audio);
            const auto reference = retrieved_reference(retrieved(match(tr.notes, "TRANSCRIPTION_JSON")));
            if (reference) align_audio_and_evaluate(*reference, tr);
        } else if (const Attachment* perf = first_of(attachments, {pipeline::FileKind::Midi, pipeline::FileKind::Notes})) {
            const auto notes = parse_performance(*perf);
            const auto reference = retrieved_reference(retrieved(match(notes, perf->name)));
            if (reference) align_notes_and_evaluate(*reference, notes);
        } else {
            const Attachment& a = *first_of(attachments, {pipeline::FileKind::Score});
            const Score score = invoke(kSymbolicIo, "parse_score", a.name, [&](TraceStep& step) {
                auto s = pipeline::parse_score(a.bytes, a.name);
                score_context(s);
                step.output = "SCORE_ABC";
                return s;
            });
            retrieved(match(score, "SCORE_ABC"));
        }
    }

    void followup() {
        invoke(kMemory, "query", "module_output", [&](TraceStep& step) {
            for (const auto& e : session_.memory.query(MemoryKind::ModuleOutput)) {
                if (e.label != "EVALUATION_JSON") continue;
                const auto report = nlohmann::json::parse(session_.memory.payload(e));
                context_.push_back({"EVALUATION_JSON", evaluation_context(report, mentioned_measure(message_))});
                step.output = "EVALUATION_JSON from turn " + std::to_string(e.turn);
                return;
            }
            step.output = "no prior evaluation";
        });
    }

    const AgentConfig& config_;
    Session& session_;
    int turn_;
    std::string message_;
    std::string piece_;
    Intent intent_;
    std::vector<ContextPiece> context_;
    std::vector<TraceStep> trace_;
    std::vector<MemoryEntry> delta_;
};

}  // namespace

nlohmann::ordered_json to_json(const TraceStep& step) {
    nlohmann::ordered_json j;
    j["module"] = step.module;
    j["operation"] = step.operation;
    j["input"] = step.input;
    j["output"] = step.output;
    return j;
}

nlohmann::ordered_json to_json(const TurnResult& result) {
    nlohmann::ordered_json j;
    j["turn"] = result.turn;
    j["intent"] = to_json(result.intent);
    j["response"] = result.response;
    j["trace"] = nlohmann::ordered_json::array();
    for (const auto& s : result.trace) j["trace"].push_back(to_json(s));
    j["memory_delta"] = nlohmann::ordered_json::array();
    for (const auto& e : result.memory_delta) j["memory_delta"].push_back(to_json(e));
    return j;
}

Agent::Agent(AgentConfig config) : config_(std::move(config)) {
    if (!config_.sessions_dir.empty()) fs::create_directories(config_.sessions_dir);
}

std::string Agent::open_session() {
    std::lock_guard lock(sessions_mutex_);
    std::string id;
    do {
        id = config_.id_generator ? config_.id_generator() : random_id();
    } while (sessions_.count(id) ||
             (!config_.sessions_dir.empty() && fs::exists(config_.sessions_dir / id)));
    if (!valid_id(id)) throw Error(ErrorCode::InvalidArgument, "invalid session id '" + id + "'");
    MemoryBank bank(config_.sessions_dir.empty() ? fs::path{} : config_.sessions_dir / id, config_.inline_limit);
    sessions_.emplace(id, std::make_shared<Session>(id, std::move(bank)));
    return id;
}

std::shared_ptr<Session> Agent::session(const std::string& id) {
    std::lock_guard lock(sessions_mutex_);
    if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
    if (valid_id(id) && !config_.sessions_dir.empty() && fs::exists(config_.sessions_dir / id / "memory.jsonl")) {
        auto s = std::make_shared<Session>(id, MemoryBank::load(config_.sessions_dir / id, config_.inline_limit));
        sessions_.emplace(id, s);
        return s;
    }
    throw Error(ErrorCode::UnknownSession, "unknown session '" + id + "'");
}

bool Agent::has_session(const std::string& id) {
    try {
        session(id);
        return true;
    } catch (const Error&) {
        return false;
    }
}

TurnResult Agent::run_turn(const std::string& session_id, const std::string& message,
                           const std::vector<Attachment>& attachments) {
    const auto s = session(session_id);
    std::lock_guard lock(s->mutex);
    return TurnRunner(config_, *s, s->memory.last_turn() + 1).run(message, attachments);
}

std::vector<MemoryEntry> Agent::memory_query(const std::string& session_id, std::optional<MemoryKind> kind,
                                             size_t limit) {
    const auto s = session(session_id);
    std::lock_guard lock(s->mutex);
    return s->memory.query(kind, limit);
}

}  // namespace muse::agent
