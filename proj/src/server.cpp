#include "claimrank/server.hpp"

#include <httplib.h>

#include <json.hpp>
#include <stdexcept>

#include "claimrank/error.hpp"

namespace claimrank {

using nlohmann::json;

namespace {

HttpReply error_reply(int status, const std::string& message) {
    return {status, json{{"error", message}}.dump()};
}

}  // namespace

HttpReply handle_rank(const Engine& engine, const std::string& request_body) {
    json req;
    try {
        req = json::parse(request_body);
    } catch (const json::parse_error& e) {
        return error_reply(400, std::string("malformed JSON: ") + e.what());
    }
    if (!req.is_object()) return error_reply(400, "request must be a JSON object");
    if (!req.contains("text") || !req["text"].is_string()) return error_reply(400, "'text' must be a string");
    const auto text = req["text"].get<std::string>();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return error_reply(400, "'text' is empty");

    std::size_t top_k = 10;
    if (req.contains("top_k")) {
        if (!req["top_k"].is_number_integer() || req["top_k"].get<long long>() < 1)
            return error_reply(400, "'top_k' must be a positive integer");
        top_k = req["top_k"].get<std::size_t>();
    }
    std::string stage = engine.config().rank_stage;
    if (req.contains("stage")) {
        if (!req["stage"].is_string()) return error_reply(400, "'stage' must be a string");
        stage = req["stage"].get<std::string>();
    }
    std::vector<float> vector;
    if (req.contains("vector")) {
        if (!req["vector"].is_array()) return error_reply(400, "'vector' must be an array of numbers");
        for (const auto& v : req["vector"]) {
            if (!v.is_number()) return error_reply(400, "'vector' must be an array of numbers");
            vector.push_back(v.get<float>());
        }
        if (engine.vectors() && vector.size() != engine.vectors()->dim())
            return error_reply(400, "'vector' has length " + std::to_string(vector.size()) + ", expected " +
                                        std::to_string(engine.vectors()->dim()));
    }
    const auto id = req.contains("id") && req["id"].is_string() ? req["id"].get<std::string>() : std::string("query");

    try {
        const auto query = engine.query_for_text(id, text, std::move(vector));
        const auto ranked = engine.rank(query, stage, top_k);
        json results = json::array();
        for (std::size_t r = 0; r < ranked.size(); ++r) {
            const auto& claim = *engine.claims().find(ranked[r].doc_id);
            json sources = json::object();
            for (const auto& [name, score] : engine.source_scores(query, ranked[r].doc_id)) sources[name] = score;
            results.push_back({{"rank", r + 1},
                               {"doc_id", claim.id},
                               {"score", ranked[r].score},
                               {"ver_claim", claim.ver_claim},
                               {"title", claim.title},
                               {"sources", std::move(sources)}});
        }
        return {200, json{{"query_id", id}, {"stage", stage}, {"results", std::move(results)}}.dump()};
    } catch (const MissingArtifactError& e) {
        return error_reply(409, e.what());
    } catch (const std::invalid_argument& e) {
        return error_reply(400, e.what());
    } catch (const std::exception& e) {
        return error_reply(500, e.what());
    }
}

HttpReply handle_health(const Engine& engine) {
    return {200, json{{"status", "ok"},
                      {"claims", engine.claims().size()},
                      {"stages", engine.available_stages()}}
                     .dump()};
}

struct RankServer::Impl {
    const Engine& engine;
    httplib::Server server;

    explicit Impl(const Engine& e) : engine(e) {
        server.Post("/rank", [this](const httplib::Request& req, httplib::Response& res) {
            const auto reply = handle_rank(engine, req.body);
            res.status = reply.status;
            res.set_content(reply.body, "application/json");
        });
        server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
            const auto reply = handle_health(engine);
            res.status = reply.status;
            res.set_content(reply.body, "application/json");
        });
    }
};

RankServer::RankServer(const Engine& engine) : impl_(std::make_unique<Impl>(engine)) {}
RankServer::~RankServer() { stop(); }

bool RankServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int RankServer::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool RankServer::listen_after_bind() { return impl_->server.listen_after_bind(); }
void RankServer::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace claimrank
