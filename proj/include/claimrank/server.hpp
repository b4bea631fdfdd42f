#pragma once

#include <memory>
#include <string>

#include "claimrank/engine.hpp"

namespace claimrank {

struct HttpReply {
    int status = 200;
    std::string body;
};

/// Handles a POST /rank body: {"text": ..., "top_k": 10, "stage": "bm25",
/// "id": optional, "vector": optional [floats]}. Returns JSON with the ranked
/// claims or an {"error": ...} object with a 4xx/5xx status.
HttpReply handle_rank(const Engine& engine, const std::string& request_body);
HttpReply handle_health(const Engine& engine);

/// HTTP front end over a shared read-only Engine.
class RankServer {
public:
    explicit RankServer(const Engine& engine);
    ~RankServer();
    RankServer(const RankServer&) = delete;
    RankServer& operator=(const RankServer&) = delete;

    /// Binds and serves until stop(); returns false if the bind failed.
    bool listen(const std::string& host, int port);
    /// Binds to an ephemeral port; returns it, or -1 on failure. Call listen_after_bind next.
    int bind_any_port(const std::string& host);
    bool listen_after_bind();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace claimrank
