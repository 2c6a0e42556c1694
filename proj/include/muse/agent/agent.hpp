#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "muse/agent/backend.hpp"
#include "muse/agent/intent.hpp"
#include "muse/agent/memory.hpp"
#include "muse/agent/prompt.hpp"
#include "muse/common/error.hpp"
#include "muse/pipeline/analysis.hpp"
#include "muse/retrieval/library.hpp"

namespace muse::agent {

/// A module raised during a turn; `stage` names it.
class ModuleFailure : public Error {
public:
    ModuleFailure(std::string stage, const std::string& message)
        : Error(ErrorCode::ModuleFailure, stage + ": " + message), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct AgentConfig {
    std::shared_ptr<const retrieval::LibraryIndex> library;
    std::filesystem::path library_root;
    std::filesystem::path sessions_dir;  // empty keeps memory in process only
    std::shared_ptr<CompletionBackend> backend = std::make_shared<StubBackend>();
    std::chrono::milliseconds backend_timeout{60000};
    GenerationParams generation;
    pipeline::AnalysisOptions analysis;
    PromptOptions prompt;
    size_t history_turns = 3;
    size_t retrieved_hits = 5;
    size_t inline_limit = 16384;
    std::function<std::string()> clock;         // ISO-8601 timestamps; UTC now when unset
    std::function<std::string()> id_generator;  // random hex when unset
};

/// One module invocation: what went in, what came out (names, not payloads).
struct TraceStep {
    std::string module;
    std::string operation;
    std::string input;
    std::string output;
};

struct TurnResult {
    int turn = 0;
    Intent intent;
    std::string response;
    std::vector<TraceStep> trace;
    std::vector<MemoryEntry> memory_delta;
    std::string prompt;
};

nlohmann::ordered_json to_json(const TraceStep& step);
nlohmann::ordered_json to_json(const TurnResult& result);

struct Session {
    std::string id;
    MemoryBank memory;
    std::mutex mutex;  // one turn at a time

    Session(std::string session_id, MemoryBank bank) : id(std::move(session_id)), memory(std::move(bank)) {}
};

class Agent {
public:
    explicit Agent(AgentConfig config);

    std::string open_session();
    /// Known in this process or persisted under sessions_dir; UnknownSession
    /// otherwise.
    std::shared_ptr<Session> session(const std::string& id);
    bool has_session(const std::string& id);

    /// Route, run the routed modules, compose the prompt, complete, and
    /// record everything in the session memory.
    /// Errors: UnknownSession, ModuleFailure, BackendTimeout, BackendError.
    TurnResult run_turn(const std::string& session_id, const std::string& message,
                        const std::vector<Attachment>& attachments = {});

    std::vector<MemoryEntry> memory_query(const std::string& session_id, std::optional<MemoryKind> kind = std::nullopt,
                                          size_t limit = 0);

    const AgentConfig& config() const { return config_; }

private:
    AgentConfig config_;
    std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace muse::agent
