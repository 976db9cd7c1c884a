#pragma once

#include <string>
#include <vector>

#include "ctrlforge/errors.hpp"

namespace ctrlforge {

struct LlmConfig {
    std::string endpoint = "http://127.0.0.1:8080/v1/chat/completions";
    std::string model = "local";
    std::string auth_env = "CTRLFORGE_LLM_TOKEN";  // bearer token read from this variable
    double temperature = 0.2;
    int max_retries = 3;
    double timeout_s = 60.0;
    int backoff_ms = 250;  // first transport backoff; doubles per attempt

    void check() const;
};

struct ChatMessage {
    std::string role;
    std::string content;
};

// Minimal chat-completions client. Retries transport failures and HTTP
// 429/5xx with exponential backoff; 401/403 fail immediately.
class LlmClient {
public:
    explicit LlmClient(LlmConfig cfg);

    // One completion round-trip; returns the assistant text.
    std::string complete(const std::vector<ChatMessage>& messages) const;

private:
    LlmConfig cfg_;
    std::string host_;  // scheme://host:port
    std::string path_;
};

}  // namespace ctrlforge
