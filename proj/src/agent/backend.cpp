#include "muse/agent/backend.hpp"

#include <cstdlib>
#include <future>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "muse/common/error.hpp"

namespace muse::agent {

std::string StubBackend::complete(const std::string& prompt, const GenerationParams&) {
    std::istringstream in(prompt);
    std::string line, preamble, question, out;
    std::vector<std::pair<std::string, size_t>> sections;
    std::string open;
    size_t size = 0;
    bool in_preamble = true;
    while (std::getline(in, line)) {
        if (in_preamble) {
            if (line.empty()) {
                in_preamble = false;
            } else if (preamble.empty()) {
                preamble = line;
            }
            continue;
        }
        if (!open.empty()) {
            if (line == "[/" + open + "]") {
                sections.emplace_back(open, size);
                open.clear();
            } else {
                size += line.size() + 1;
            }
        } else if (line.size() > 2 && line.front() == '[' && line.back() == ']' && line[1] != '/' &&
                   line.rfind("[TRUNCATED", 0) != 0) {
            open = line.substr(1, line.size() - 2);
            size = 0;
        } else if (line.rfind("[TRUNCATED", 0) == 0) {
            sections.emplace_back("TRUNCATED", 0);
        } else if (line.rfind("Question: ", 0) == 0) {
            question = line.substr(10);
        }
    }
    out = "[stub] " + (preamble.size() > 40 ? preamble.substr(0, 40) + "..." : preamble) + "\n";
    for (const auto& [label, chars] : sections) out += "context " + label + " (" + std::to_string(chars) + " chars)\n";
    out += "answer to: " + question;
    return out;
}

OpenAiConfig openai_config_from_env(OpenAiConfig base) {
    if (const char* v = std::getenv("MUSE_LLM_URL")) base.url = v;
    if (const char* v = std::getenv("MUSE_LLM_KEY")) base.key = v;
    if (const char* v = std::getenv("MUSE_LLM_MODEL")) base.model = v;
    return base;
}

OpenAiBackend::OpenAiBackend(OpenAiConfig config) : config_(std::move(config)) {
    const std::string scheme = "http://";
    if (config_.url.rfind(scheme, 0) != 0)
        throw Error(ErrorCode::BackendError, "backend URL must start with http:// (got '" + config_.url + "')");
    const auto slash = config_.url.find('/', scheme.size());
    host_ = config_.url.substr(0, slash);
    path_ = slash == std::string::npos ? "/v1/chat/completions" : config_.url.substr(slash);
}

std::string OpenAiBackend::complete(const std::string& prompt, const GenerationParams& params) {
    const auto split = prompt.find("\n\n");
    nlohmann::json messages = nlohmann::json::array();
    if (split != std::string::npos) {
        messages.push_back({{"role", "system"}, {"content", prompt.substr(0, split)}});
        messages.push_back({{"role", "user"}, {"content", prompt.substr(split + 2)}});
    } else {
        messages.push_back({{"role", "user"}, {"content", prompt}});
    }
    const nlohmann::json body = {{"model", config_.model},
                                 {"messages", messages},
                                 {"temperature", params.temperature},
                                 {"max_tokens", params.max_tokens}};
    httplib::Client client(host_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!config_.key.empty()) headers.emplace("Authorization", "Bearer " + config_.key);
    const auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
            throw Error(ErrorCode::BackendTimeout, "backend timed out: " + httplib::to_string(err));
        throw Error(ErrorCode::BackendError, "backend request failed: " + httplib::to_string(err));
    }
    if (res->status != 200)
        throw Error(ErrorCode::BackendError, "backend returned HTTP " + std::to_string(res->status));
    try {
        const auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BackendError, std::string("unexpected backend response: ") + e.what());
    }
}

std::string complete_with_timeout(const std::shared_ptr<CompletionBackend>& backend, const std::string& prompt,
                                  const GenerationParams& params, std::chrono::milliseconds timeout) {
    if (!backend) throw Error(ErrorCode::BackendError, "no completion backend configured");
    auto promise = std::make_shared<std::promise<std::string>>();
    auto future = promise->get_future();
    std::thread([backend, prompt, params, promise] {
        try {
            promise->set_value(backend->complete(prompt, params));
        } catch (...) {
            promise->set_exception(std::current_exception());
        }
    }).detach();
    if (future.wait_for(timeout) != std::future_status::ready)
        throw Error(ErrorCode::BackendTimeout,
                    "backend gave no answer within " + std::to_string(timeout.count()) + " ms");
    return future.get();
}

}  // namespace muse::agent
