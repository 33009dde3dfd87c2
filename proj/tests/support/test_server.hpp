#pragma once

// In-process chat-completion server for transport tests. Replies are
// produced by a caller-supplied function of the prompt; the first
// `fail_first` requests return 503 to exercise retry paths.

#include <atomic>
#include <functional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace ppm::testing {

class ChatCompletionTestServer {
public:
    using ReplyFn = std::function<std::string(const std::string& prompt)>;

    explicit ChatCompletionTestServer(ReplyFn reply_fn, int fail_first = 0)
        : reply_fn_(std::move(reply_fn)), fail_first_(fail_first) {
        server_.Post("/v1/chat/completions",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         ++hits_;
                         if (fail_first_ > 0) {
                             --fail_first_;
                             res.status = 503;
                             res.set_content("overloaded", "text/plain");
                             return;
                         }
                         auto body = nlohmann::json::parse(req.body);
                         std::string prompt = body["messages"][0]["content"];
                         nlohmann::json reply = {
                             {"choices",
                              {{{"message",
                                 {{"role", "assistant"}, {"content", reply_fn_(prompt)}}}}}}};
                         res.set_content(reply.dump(), "application/json");
                     });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~ChatCompletionTestServer() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int port() const { return port_; }
    int hits() const { return hits_; }

private:
    httplib::Server server_;
    std::thread thread_;
    ReplyFn reply_fn_;
    int port_ = 0;
    std::atomic<int> fail_first_;
    std::atomic<int> hits_{0};
};

}  // namespace ppm::testing
