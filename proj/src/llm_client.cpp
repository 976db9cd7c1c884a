#include "ctrlforge/llm_client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace ctrlforge {

using nlohmann::json;

void LlmConfig::check() const {
    if (endpoint.empty()) throw ConfigError("llm.endpoint must be set");
    if (max_retries < 0) throw ConfigError("llm.max_retries must be non-negative");
    if (timeout_s <= 0) throw ConfigError("llm.timeout_s must be positive");
    if (backoff_ms < 0) throw ConfigError("llm.backoff_ms must be non-negative");
}

LlmClient::LlmClient(LlmConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.check();
    const auto scheme_end = cfg_.endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("llm.endpoint must include a scheme, e.g. http://host:port/path");
    const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        host_ = cfg_.endpoint;
        path_ = "/";
    } else {
        host_ = cfg_.endpoint.substr(0, path_start);
        path_ = cfg_.endpoint.substr(path_start);
    }
}

std::string LlmClient::complete(const std::vector<ChatMessage>& messages) const {
    json request{{"model", cfg_.model}, {"temperature", cfg_.temperature}};
    request["messages"] = json::array();
    for (const auto& m : messages)
        request["messages"].push_back({{"role", m.role}, {"content", m.content}});
    const std::string body = request.dump();

    httplib::Headers headers;
    if (!cfg_.auth_env.empty()) {
        if (const char* token = std::getenv(cfg_.auth_env.c_str()); token && *token)
            headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    httplib::Client client(host_);
    client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    client.set_write_timeout(std::chrono::duration<double>(cfg_.timeout_s));

    int last_status = 0;
    bool timed_out = false;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            const auto delay = std::chrono::milliseconds(
                static_cast<long>(cfg_.backoff_ms * std::pow(2.0, attempt - 1)));
            std::this_thread::sleep_for(delay);
        }

        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                        res.error() == httplib::Error::Read;
            last_status = 0;
            continue;  // transport failure, retry
        }
        last_status = res->status;
        timed_out = false;
        if (res->status == 401 || res->status == 403)
            throw LlmError(LlmError::Kind::Auth, "authentication rejected by endpoint",
                           res->status);
        if (res->status == 429 || res->status >= 500) continue;  // retryable
        if (res->status != 200)
            throw LlmError(LlmError::Kind::Http,
                           "endpoint returned status " + std::to_string(res->status),
                           res->status);

        try {
            const json reply = json::parse(res->body);
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw LlmError(LlmError::Kind::Http,
                           std::string("malformed completion response: ") + e.what(), res->status);
        }
    }

    if (timed_out)
        throw LlmError(LlmError::Kind::Timeout, "endpoint timed out after retries", last_status);
    throw LlmError(LlmError::Kind::Exhausted,
                   "retries exhausted (last status " + std::to_string(last_status) + ")",
                   last_status);
}

}  // namespace ctrlforge
