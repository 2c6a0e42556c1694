#pragma once

#include <chrono>
#include <memory>
#include <string>

namespace muse::agent {

struct GenerationParams {
    double temperature = 0.0;
    int max_tokens = 1024;
};

/// Text completion. Implementations keep no state between calls.
class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual std::string complete(const std::string& prompt, const GenerationParams& params) = 0;
    virtual std::string name() const = 0;
};

/// Deterministic test backend: echoes the intent-relevant structure of the
/// prompt (preamble, section labels and sizes, the question).
class StubBackend : public CompletionBackend {
public:
    std::string complete(const std::string& prompt, const GenerationParams& params) override;
    std::string name() const override { return "stub"; }
};

struct OpenAiConfig {
    std::string url;    // http://host:port[/path]; the path defaults to /v1/chat/completions
    std::string key;    // sent as a bearer token when non-empty
    std::string model = "gpt-4.1";
    std::chrono::milliseconds timeout{60000};
};

/// Reads MUSE_LLM_URL, MUSE_LLM_KEY and MUSE_LLM_MODEL over `base`.
OpenAiConfig openai_config_from_env(OpenAiConfig base = {});

/// Chat-completion client: POST {model, messages} and read
/// choices[0].message.content. The preamble (text before the first blank
/// line) goes in a system message. Plain HTTP only.
/// Errors: BackendTimeout, BackendError.
class OpenAiBackend : public CompletionBackend {
public:
    explicit OpenAiBackend(OpenAiConfig config);
    std::string complete(const std::string& prompt, const GenerationParams& params) override;
    std::string name() const override { return "openai"; }

private:
    OpenAiConfig config_;
    std::string host_;
    std::string path_;
};

/// Runs the call on its own thread and gives up after `timeout`
/// (BackendTimeout). A timed-out call finishes in the background.
std::string complete_with_timeout(const std::shared_ptr<CompletionBackend>& backend, const std::string& prompt,
                                  const GenerationParams& params, std::chrono::milliseconds timeout);

}  // namespace muse::agent
