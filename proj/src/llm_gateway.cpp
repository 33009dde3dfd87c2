#include "ppmkit/llm_gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <semaphore>
#include <sstream>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ppmkit/rng.hpp"
#include "ppmkit/sha256.hpp"

namespace ppm {

LlmMode parse_llm_mode(const std::string& text) {
    if (text == "live") return LlmMode::Live;
    if (text == "record") return LlmMode::Record;
    if (text == "replay") return LlmMode::Replay;
    raise(ErrorKind::Config, "unknown llm mode '", text, "' (expected live|record|replay)");
}

const char* to_string(LlmMode mode) {
    switch (mode) {
        case LlmMode::Live: return "live";
        case LlmMode::Record: return "record";
        case LlmMode::Replay: return "replay";
    }
    return "?";
}

ReplayCache::ReplayCache(std::filesystem::path directory) : directory_(std::move(directory)) {
    std::filesystem::create_directories(directory_);
}

std::string ReplayCache::digest(std::string_view prompt, std::string_view model,
                                double temperature) {
    char temp[32];
    std::snprintf(temp, sizeof(temp), "%.6g", temperature);
    std::string material;
    material.reserve(prompt.size() + model.size() + 34);
    material.append(prompt);
    material.push_back('\x1f');
    material.append(model);
    material.push_back('\x1f');
    material.append(temp);
    return sha256_hex(material);
}

std::filesystem::path ReplayCache::entry_path(const std::string& digest) const {
    return directory_ / (digest + ".reply.txt");
}

std::optional<std::string> ReplayCache::get(const std::string& digest) const {
    std::ifstream in(entry_path(digest), std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void ReplayCache::put(const std::string& digest, std::string_view reply) {
    std::lock_guard lock(write_mutex_);
    auto path = entry_path(digest);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) raise(ErrorKind::Io, "cannot write cache entry '", tmp.string(), "'");
        out.write(reply.data(), static_cast<std::streamsize>(reply.size()));
    }
    std::filesystem::rename(tmp, path);
}

std::size_t ReplayCache::entry_count() const {
    std::size_t count = 0;
    if (!std::filesystem::exists(directory_)) return 0;
    for (const auto& entry : std::filesystem::directory_iterator(directory_)) {
        if (entry.path().extension() == ".txt") ++count;
    }
    return count;
}

std::string ReplayCache::content_digest() const {
    std::vector<std::string> names;
    if (std::filesystem::exists(directory_)) {
        for (const auto& entry : std::filesystem::directory_iterator(directory_)) {
            if (entry.path().extension() == ".txt") names.push_back(entry.path().filename().string());
        }
    }
    std::sort(names.begin(), names.end());
    std::string all;
    for (const auto& name : names) {
        all += name;
        all.push_back('\n');
    }
    return sha256_hex(all);
}

// ---------------------------------------------------------------------------
// HTTP transport

struct HttpLlmClient::Impl {
    LlmEndpointConfig config;
    std::counting_semaphore<64> slots;
    std::mutex jitter_mutex;
    Rng jitter_rng{0x9e3779b97f4a7c15ull};

    explicit Impl(LlmEndpointConfig cfg)
        : config(std::move(cfg)),
          slots(std::max(1, std::min(64, config.max_concurrency))) {}

    double jitter() {
        std::lock_guard lock(jitter_mutex);
        return 0.8 + 0.4 * uniform01(jitter_rng);
    }
};

HttpLlmClient::HttpLlmClient(LlmEndpointConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpLlmClient::~HttpLlmClient() = default;

namespace {

/// Pulls the completion text out of the common provider response layouts.
std::string extract_reply_text(const nlohmann::json& body) {
    // OpenAI-style: choices[0].message.content
    if (body.contains("choices") && body["choices"].is_array() && !body["choices"].empty()) {
        const auto& choice = body["choices"][0];
        if (choice.contains("message") && choice["message"].contains("content")) {
            return choice["message"]["content"].get<std::string>();
        }
        if (choice.contains("text")) return choice["text"].get<std::string>();
    }
    // Gemini-style: candidates[0].content.parts[*].text
    if (body.contains("candidates") && body["candidates"].is_array() && !body["candidates"].empty()) {
        const auto& content = body["candidates"][0]["content"];
        if (content.contains("parts") && content["parts"].is_array()) {
            std::string text;
            for (const auto& part : content["parts"]) {
                if (part.contains("text")) text += part["text"].get<std::string>();
            }
            return text;
        }
    }
    if (body.contains("content") && body["content"].is_string()) {
        return body["content"].get<std::string>();
    }
    if (body.contains("text") && body["text"].is_string()) {
        return body["text"].get<std::string>();
    }
    raise(ErrorKind::Http, "unrecognized completion response: ", body.dump());
}

}  // namespace

std::string HttpLlmClient::complete(const std::string& prompt) {
    const LlmEndpointConfig& config = impl_->config;

    const char* key = std::getenv(config.api_key_env.c_str());
    if (!key || !*key) {
        raise(ErrorKind::Config, "API key environment variable ", config.api_key_env,
              " is not set");
    }

    nlohmann::json request = {
        {"model", config.model_name},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", config.temperature},
    };
    std::string body = request.dump();

    impl_->slots.acquire();
    struct Release {
        Impl* impl;
        ~Release() { impl->slots.release(); }
    } release{impl_.get()};

    std::string last_error;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        if (attempt > 0) {
            double delay = 0.5 * static_cast<double>(1 << (attempt - 1)) * impl_->jitter();
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }

        httplib::Client client(impl_->config.base_url);
        client.set_connection_timeout(config.timeout_seconds);
        client.set_read_timeout(config.timeout_seconds);
        client.set_default_headers({{"Authorization", std::string("Bearer ") + key}});

        auto result = client.Post(config.endpoint_path, body, "application/json");
        if (!result) {
            last_error = strcat("transport error: ", httplib::to_string(result.error()));
            continue;
        }
        if (result->status >= 200 && result->status < 300) {
            nlohmann::json parsed;
            try {
                parsed = nlohmann::json::parse(result->body);
            } catch (const nlohmann::json::exception& e) {
                raise(ErrorKind::Http, "malformed completion response: ", e.what());
            }
            return extract_reply_text(parsed);
        }
        // Provider error payloads are surfaced verbatim; only transient
        // statuses are retried.
        last_error = strcat("HTTP ", result->status, ": ", result->body);
        bool transient = result->status == 429 || result->status >= 500;
        if (!transient) break;
    }
    raise(ErrorKind::Http, "completion request failed after retries: ", last_error);
}

// ---------------------------------------------------------------------------

std::string ReplayLlmClient::complete(const std::string& prompt) {
    std::string digest = ReplayCache::digest(prompt, config_.model_name, config_.temperature);
    if (auto reply = cache_->get(digest)) return *reply;
    raise(ErrorKind::CacheMiss, "no cache entry for prompt digest ", digest,
          " in ", cache_->directory().string());
}

std::string RecordingLlmClient::complete(const std::string& prompt) {
    std::string reply = inner_->complete(prompt);
    cache_->put(ReplayCache::digest(prompt, config_.model_name, config_.temperature), reply);
    return reply;
}

std::string ScriptedLlmClient::prompt_digest(std::string_view prompt) {
    return sha256_hex(prompt);
}

std::string ScriptedLlmClient::complete(const std::string& prompt) {
    auto it = script_.find(prompt_digest(prompt));
    if (it != script_.end()) return it->second;
    if (generator_) return generator_(prompt);
    raise(ErrorKind::CacheMiss, "scripted responder has no entry for prompt digest ",
          prompt_digest(prompt));
}

std::unique_ptr<LlmClient> make_llm_client(const LlmEndpointConfig& config, ReplayCache* cache,
                                           LlmMode mode) {
    switch (mode) {
        case LlmMode::Live:
            return std::make_unique<HttpLlmClient>(config);
        case LlmMode::Record:
            if (!cache) raise(ErrorKind::Config, "record mode requires a cache directory");
            return std::make_unique<RecordingLlmClient>(std::make_unique<HttpLlmClient>(config),
                                                        cache, config);
        case LlmMode::Replay:
            if (!cache) raise(ErrorKind::Config, "replay mode requires a cache directory");
            return std::make_unique<ReplayLlmClient>(cache, config);
    }
    raise(ErrorKind::Config, "unreachable llm mode");
}

}  // namespace ppm
