#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scalesearch/core.hpp"
#include "scalesearch/policy.hpp"
#include "scalesearch/verifier.hpp"

namespace scalesearch {

inline constexpr const char* kApiKeyEnv = "SCALESEARCH_API_KEY";

struct RemoteConfig {
    std::string base_url;  // e.g. "http://localhost:8089"
    std::string path = "/v1/chat/completions";
    std::string model;
    int max_attempts = 5;
    int backoff_base_ms = 250;
    int timeout_ms = 60000;
    int max_inflight = 8;
    std::string system_prompt =
        "You are a careful step-by-step reasoner. Produce one reasoning step per "
        "response. When you reach the answer, end with \"Final Answer: <answer>\".";

    void validate() const;  // throws ConfigError
};

struct MessagePart {
    std::string type;       // "text" or "image"
    std::string text;       // type == text
    std::string media_type; // type == image
    std::string data;       // type == image, base64 payload
};

struct ChatMessage {
    std::string role;  // system / user / assistant
    std::vector<MessagePart> parts;
};

struct Completion {
    std::string text;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
};

// One chat-completion round trip. Retries transient failures (throttling,
// server errors, transport drops) with exponential backoff up to
// max_attempts; credential rejection raises AuthError immediately. When the
// server omits usage, tokens are estimated as ceil(bytes/4) per part.
class RemoteClient {
public:
    explicit RemoteClient(RemoteConfig config);
    ~RemoteClient();

    Completion complete(const std::vector<ChatMessage>& messages, double temperature,
                        const std::vector<std::string>& stop) const;

    const RemoteConfig& config() const { return config_; }

private:
    struct Impl;
    RemoteConfig config_;
    std::unique_ptr<Impl> impl_;
};

Completion remote_complete(const RemoteClient& client, const std::vector<ChatMessage>& messages,
                           double temperature, const std::vector<std::string>& stop);

// Step-wise policy over a chat endpoint: one request per step with the step
// stop marker as a stop string; a response containing the answer marker is
// terminal. Multi-modal responses may carry a fenced code block, which
// becomes an external visual operation.
class RemotePolicy final : public PolicyBackend {
public:
    RemotePolicy(std::shared_ptr<RemoteClient> client, PolicyConfig config);

    ThoughtStep sample_step(const Problem& problem, const Chain& prefix,
                            const StepContext& ctx) override;
    long long image_token_cost(const ToyImage& image) const override;

private:
    std::shared_ptr<RemoteClient> client_;
    PolicyConfig config_;
};

// Verification trials over the same endpoint: the chain is rendered step by
// step followed by the instruction, one request per trial.
class RemoteVerifierBackend final : public TrialBackend {
public:
    RemoteVerifierBackend(std::shared_ptr<RemoteClient> client, double temperature = 1.0);

    std::string run_trial(const Problem& problem, const Chain& prefix,
                          const VerifierPrompt& prompt, std::uint64_t trial_key) override;

private:
    std::shared_ptr<RemoteClient> client_;
    double temperature_;
};

// ceil(bytes / 4); fallback token estimate when usage is missing.
long long estimate_tokens(std::size_t bytes);

std::string base64_encode(std::string_view bytes);

}  // namespace scalesearch
