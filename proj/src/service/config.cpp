#include "muse/service/config.hpp"

#include <cctype>
#include <cstdlib>

#include "muse/common/error.hpp"
#include "muse/common/file.hpp"

namespace muse::service {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw Error(ErrorCode::InvalidArgument, "config line " + std::to_string(line) + ": " + what);
}

// Strips a trailing comment that is not inside a string.
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

TomlValue parse_value(const std::string& raw, int line) {
    if (raw.empty()) fail(line, "missing value");
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"') fail(line, "unterminated string");
        std::string out;
        for (size_t i = 1; i + 1 < raw.size(); ++i) {
            if (raw[i] != '\\') {
                out += raw[i];
                continue;
            }
            if (++i + 1 >= raw.size()) fail(line, "dangling escape");
            switch (raw[i]) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: fail(line, std::string("unsupported escape \\") + raw[i]);
            }
        }
        return out;
    }
    if (raw == "true") return true;
    if (raw == "false") return false;
    std::string digits;
    for (char c : raw)
        if (c != '_') digits += c;
    try {
        size_t used = 0;
        if (digits.find_first_of(".eE") == std::string::npos) {
            const long long v = std::stoll(digits, &used);
            if (used == digits.size()) return static_cast<std::int64_t>(v);
        } else {
            const double v = std::stod(digits, &used);
            if (used == digits.size()) return v;
        }
    } catch (const std::exception&) {
    }
    fail(line, "unsupported value '" + raw + "'");
}

const TomlValue* lookup(const std::map<std::string, TomlValue>& m, const std::string& key) {
    const auto it = m.find(key);
    return it == m.end() ? nullptr : &it->second;
}

template <class T>
T as(const TomlValue& v, const std::string& key) {
    if constexpr (std::is_same_v<T, double>) {
        if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    }
    if (const auto* x = std::get_if<T>(&v)) return *x;
    throw Error(ErrorCode::InvalidArgument, "config key '" + key + "' has the wrong type");
}

}  // namespace

std::map<std::string, TomlValue> parse_toml(std::string_view text) {
    std::map<std::string, TomlValue> out;
    std::string table;
    int number = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        const size_t end = std::min(text.find('\n', pos), text.size());
        const std::string line = trim(strip_comment(std::string(text.substr(pos, end - pos))));
        pos = end + 1;
        ++number;
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) fail(number, "malformed table header");
            table = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(number, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) fail(number, "empty key");
        const std::string full = table.empty() ? key : table + "." + key;
        if (out.count(full)) fail(number, "duplicate key '" + full + "'");
        out[full] = parse_value(trim(line.substr(eq + 1)), number);
    }
    return out;
}

ServiceConfig config_from_toml(std::string_view text, ServiceConfig c) {
    const auto m = parse_toml(text);
    if (auto* v = lookup(m, "host")) c.host = as<std::string>(*v, "host");
    if (auto* v = lookup(m, "port")) c.port = static_cast<int>(as<std::int64_t>(*v, "port"));
    if (auto* v = lookup(m, "library_path")) c.library_path = as<std::string>(*v, "library_path");
    if (auto* v = lookup(m, "sessions_dir")) c.sessions_dir = as<std::string>(*v, "sessions_dir");
    if (auto* v = lookup(m, "cors_origin")) c.cors_origin = as<std::string>(*v, "cors_origin");
    if (auto* v = lookup(m, "max_body_mb"))
        c.max_body_bytes = static_cast<size_t>(as<double>(*v, "max_body_mb") * 1024.0 * 1024.0);
    if (auto* v = lookup(m, "request_timeout_sec"))
        c.request_timeout_sec = static_cast<int>(as<std::int64_t>(*v, "request_timeout_sec"));
    if (auto* v = lookup(m, "tempo_bpm")) c.tempo_bpm = as<double>(*v, "tempo_bpm");
    if (auto* v = lookup(m, "llm.backend")) c.llm_backend = as<std::string>(*v, "llm.backend");
    if (auto* v = lookup(m, "llm.url")) c.llm.url = as<std::string>(*v, "llm.url");
    if (auto* v = lookup(m, "llm.model")) c.llm.model = as<std::string>(*v, "llm.model");
    if (auto* v = lookup(m, "llm.timeout_sec"))
        c.llm.timeout = std::chrono::milliseconds(static_cast<long>(as<double>(*v, "llm.timeout_sec") * 1000.0));
    if (c.port < 0 || c.port > 65535) throw Error(ErrorCode::InvalidArgument, "port out of range");
    if (c.llm_backend != "stub" && c.llm_backend != "openai")
        throw Error(ErrorCode::InvalidArgument, "llm.backend must be \"stub\" or \"openai\"");
    return c;
}

void apply_env(ServiceConfig& c) {
    const auto env = [](const char* name) -> const char* { return std::getenv(name); };
    if (const char* v = env("MUSE_HOST")) c.host = v;
    if (const char* v = env("MUSE_PORT")) {
        try {
            c.port = std::stoi(v);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "MUSE_PORT is not a number");
        }
    }
    if (const char* v = env("MUSE_LIBRARY_PATH")) c.library_path = v;
    if (const char* v = env("MUSE_SESSIONS_DIR")) c.sessions_dir = v;
    if (const char* v = env("MUSE_CORS_ORIGIN")) c.cors_origin = v;
    if (const char* v = env("MUSE_TEMPO_BPM")) {
        try {
            c.tempo_bpm = std::stod(v);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "MUSE_TEMPO_BPM is not a number");
        }
    }
    if (const char* v = env("MUSE_LLM_BACKEND")) c.llm_backend = v;
    c.llm = agent::openai_config_from_env(c.llm);
}

ServiceConfig load_config(const fs::path& file) {
    ServiceConfig c;
    if (!file.empty()) c = config_from_toml(read_file(file));
    apply_env(c);
    return c;
}

std::shared_ptr<const retrieval::LibraryIndex> open_library(const fs::path& library_path) {
    if (library_path.empty()) return nullptr;
    const fs::path index_file = library_path / retrieval::kIndexFileName;
    if (fs::exists(index_file)) return std::make_shared<retrieval::LibraryIndex>(retrieval::load_index(index_file));
    auto index = std::make_shared<retrieval::LibraryIndex>(retrieval::index_library(library_path));
    try {
        retrieval::save_index(*index, index_file);
    } catch (const Error&) {
        // A read-only library still works from the in-memory index.
    }
    return index;
}

agent::AgentConfig agent_config(const ServiceConfig& config) {
    agent::AgentConfig a;
    a.library_root = config.library_path;
    a.library = open_library(config.library_path);
    a.sessions_dir = config.sessions_dir;
    a.analysis.tempo_bpm = config.tempo_bpm;
    a.backend_timeout = config.llm.timeout;
    if (config.llm_backend == "openai")
        a.backend = std::make_shared<agent::OpenAiBackend>(config.llm);
    else
        a.backend = std::make_shared<agent::StubBackend>();
    return a;
}

}  // namespace muse::service
