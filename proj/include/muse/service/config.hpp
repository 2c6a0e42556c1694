#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>

#include "muse/agent/agent.hpp"

namespace muse::service {

using TomlValue = std::variant<std::string, std::int64_t, double, bool>;

/// Flat TOML subset: `key = value` lines, `[table]` headers (keys become
/// "table.key"), basic strings, integers, floats, booleans and `#`
/// comments. Errors: InvalidArgument with the line number.
std::map<std::string, TomlValue> parse_toml(std::string_view text);

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::filesystem::path library_path;
    std::filesystem::path sessions_dir = "sessions";
    std::string cors_origin = "*";
    size_t max_body_bytes = 50u << 20;
    int request_timeout_sec = 120;
    double tempo_bpm = 120.0;
    std::string llm_backend = "stub";  // stub | openai
    agent::OpenAiConfig llm;
};

/// Defaults, then the file, then environment variables (MUSE_HOST,
/// MUSE_PORT, MUSE_LIBRARY_PATH, MUSE_SESSIONS_DIR, MUSE_CORS_ORIGIN,
/// MUSE_TEMPO_BPM, MUSE_LLM_BACKEND, MUSE_LLM_URL, MUSE_LLM_KEY, MUSE_LLM_MODEL).
ServiceConfig load_config(const std::filesystem::path& file = {});
ServiceConfig config_from_toml(std::string_view text, ServiceConfig base = {});
void apply_env(ServiceConfig& config);

/// Loads library-index.json next to the library or builds (and tries to
/// save) it.
std::shared_ptr<const retrieval::LibraryIndex> open_library(const std::filesystem::path& library_path);

/// Agent settings shared by the service and the CLI REPL.
agent::AgentConfig agent_config(const ServiceConfig& config);

}  // namespace muse::service
