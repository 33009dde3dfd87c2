#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "ppmkit/error.hpp"

namespace ppm {

/// Endpoint settings for a chat-completion style HTTP API. The API key is
/// read from the named environment variable at call time and is never
/// written to disk or logs.
struct LlmEndpointConfig {
    std::string base_url = "http://127.0.0.1:8080";
    std::string endpoint_path = "/v1/chat/completions";
    std::string model_name = "mock-model";
    std::string api_key_env = "PPM_LLM_API_KEY";
    double temperature = 0.0;
    int timeout_seconds = 60;
    int max_retries = 3;
    int max_concurrency = 4;
};

enum class LlmMode { Live, Record, Replay };

LlmMode parse_llm_mode(const std::string& text);
const char* to_string(LlmMode mode);

/// Directory of recorded replies, one file per entry, keyed by
/// digest(prompt || model || temperature). A hit returns the recorded bytes
/// unchanged.
class ReplayCache {
public:
    explicit ReplayCache(std::filesystem::path directory);

    static std::string digest(std::string_view prompt, std::string_view model, double temperature);

    std::optional<std::string> get(const std::string& digest) const;
    void put(const std::string& digest, std::string_view reply);

    const std::filesystem::path& directory() const { return directory_; }
    std::size_t entry_count() const;
    /// Digest over the sorted entry digests, for provenance manifests.
    std::string content_digest() const;

private:
    std::filesystem::path entry_path(const std::string& digest) const;

    std::filesystem::path directory_;
    mutable std::mutex write_mutex_;
};

/// A completion transport. Implementations must be safe to call from
/// multiple threads.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string complete(const std::string& prompt) = 0;
};

/// Plain HTTP transport. Request bodies use a minimal chat-completion shape
/// (model, one user message, temperature); replies are unwrapped from the
/// common provider response layouts. Transient failures are retried with
/// jittered exponential backoff; at most max_concurrency requests are in
/// flight at once.
class HttpLlmClient : public LlmClient {
public:
    explicit HttpLlmClient(LlmEndpointConfig config);
    ~HttpLlmClient() override;

    std::string complete(const std::string& prompt) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Serves recorded replies only; unseen prompts are an error.
class ReplayLlmClient : public LlmClient {
public:
    ReplayLlmClient(const ReplayCache* cache, LlmEndpointConfig config)
        : cache_(cache), config_(std::move(config)) {}

    std::string complete(const std::string& prompt) override;

private:
    const ReplayCache* cache_;
    LlmEndpointConfig config_;
};

/// Wraps another client and persists every reply into the cache.
class RecordingLlmClient : public LlmClient {
public:
    RecordingLlmClient(std::unique_ptr<LlmClient> inner, ReplayCache* cache,
                       LlmEndpointConfig config)
        : inner_(std::move(inner)), cache_(cache), config_(std::move(config)) {}

    std::string complete(const std::string& prompt) override;

private:
    std::unique_ptr<LlmClient> inner_;
    ReplayCache* cache_;
    LlmEndpointConfig config_;
};

/// Deterministic in-memory stand-in. Replies come from a script keyed by
/// sha256(prompt); a generator, when given, answers unscripted prompts.
class ScriptedLlmClient : public LlmClient {
public:
    using Generator = std::function<std::string(const std::string& prompt)>;

    explicit ScriptedLlmClient(std::map<std::string, std::string> script,
                               Generator generator = {})
        : script_(std::move(script)), generator_(std::move(generator)) {}

    static std::string prompt_digest(std::string_view prompt);

    std::string complete(const std::string& prompt) override;

private:
    std::map<std::string, std::string> script_;
    Generator generator_;
};

/// live -> HTTP; record -> HTTP with replies persisted; replay -> cache only.
std::unique_ptr<LlmClient> make_llm_client(const LlmEndpointConfig& config, ReplayCache* cache,
                                           LlmMode mode);

}  // namespace ppm
