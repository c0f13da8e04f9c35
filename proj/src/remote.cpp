#include "scalesearch/remote.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace scalesearch {

void RemoteConfig::validate() const {
    if (base_url.empty()) throw ConfigError("remote.base_url must be set");
    if (base_url.rfind("http://", 0) != 0)
        throw ConfigError("remote.base_url must start with http:// (TLS is not supported)");
    if (model.empty()) throw ConfigError("remote.model must be set");
    if (max_attempts < 1) throw ConfigError("remote.max_attempts must be >= 1");
    if (backoff_base_ms < 0) throw ConfigError("remote.backoff_base_ms must be >= 0");
    if (timeout_ms < 1) throw ConfigError("remote.timeout_ms must be >= 1");
    if (max_inflight < 1) throw ConfigError("remote.max_inflight must be >= 1");
}

long long estimate_tokens(std::size_t bytes) {
    return static_cast<long long>((bytes + 3) / 4);
}

std::string base64_encode(std::string_view bytes) {
    static const char table[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= bytes.size()) {
        const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                           (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                           static_cast<unsigned char>(bytes[i + 2]);
        out += table[(v >> 18) & 63];
        out += table[(v >> 12) & 63];
        out += table[(v >> 6) & 63];
        out += table[v & 63];
        i += 3;
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
        out += table[(v >> 18) & 63];
        out += table[(v >> 12) & 63];
        out += "==";
    } else if (rest == 2) {
        const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                           (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out += table[(v >> 18) & 63];
        out += table[(v >> 12) & 63];
        out += table[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

namespace {

struct HostPort {
    std::string host;
    int port = 80;
};

HostPort parse_base_url(const std::string& base_url) {
    std::string rest = base_url.substr(std::string("http://").size());
    const std::size_t slash = rest.find('/');
    if (slash != std::string::npos) rest = rest.substr(0, slash);
    HostPort hp;
    const std::size_t colon = rest.rfind(':');
    if (colon == std::string::npos) {
        hp.host = rest;
    } else {
        hp.host = rest.substr(0, colon);
        hp.port = std::atoi(rest.substr(colon + 1).c_str());
    }
    if (hp.host.empty() || hp.port <= 0) throw ConfigError("remote.base_url is malformed");
    return hp;
}

nlohmann::ordered_json message_to_json(const ChatMessage& message) {
    nlohmann::ordered_json j;
    j["role"] = message.role;
    if (message.parts.size() == 1 && message.parts[0].type == "text") {
        j["content"] = message.parts[0].text;
        return j;
    }
    nlohmann::ordered_json parts = nlohmann::json::array();
    for (const MessagePart& part : message.parts) {
        if (part.type == "text") {
            parts.push_back({{"type", "text"}, {"text", part.text}});
        } else {
            parts.push_back(
                {{"type", "image_url"},
                 {"image_url",
                  {{"url", "data:" + part.media_type + ";base64," + part.data}}}});
        }
    }
    j["content"] = std::move(parts);
    return j;
}

long long request_bytes(const std::vector<ChatMessage>& messages) {
    long long bytes = 0;
    for (const ChatMessage& message : messages)
        for (const MessagePart& part : message.parts)
            bytes += static_cast<long long>(part.text.size() + part.data.size());
    return bytes;
}

std::string content_text(const nlohmann::json& content) {
    if (content.is_string()) return content.get<std::string>();
    std::string text;
    if (content.is_array()) {
        for (const auto& part : content) {
            if (part.is_object() && part.value("type", "") == "text")
                text += part.value("text", "");
        }
    }
    return text;
}

}  // namespace

// Bounds in-flight requests; a fresh httplib client per request keeps the
// transport state per-call and trivially thread-safe.
struct RemoteClient::Impl {
    HostPort endpoint;
    std::string api_key;
    mutable std::mutex mutex;
    mutable std::condition_variable slot_freed;
    mutable int inflight = 0;

    struct SlotGuard {
        const Impl& impl;
        explicit SlotGuard(const Impl& impl, int limit) : impl(impl) {
            std::unique_lock<std::mutex> lock(impl.mutex);
            impl.slot_freed.wait(lock, [&] { return impl.inflight < limit; });
            ++impl.inflight;
        }
        ~SlotGuard() {
            {
                std::lock_guard<std::mutex> lock(impl.mutex);
                --impl.inflight;
            }
            impl.slot_freed.notify_one();
        }
    };
};

RemoteClient::RemoteClient(RemoteConfig config) : config_(std::move(config)) {
    config_.validate();
    impl_ = std::make_unique<Impl>();
    impl_->endpoint = parse_base_url(config_.base_url);
    if (const char* key = std::getenv(kApiKeyEnv)) impl_->api_key = key;
}

RemoteClient::~RemoteClient() = default;

Completion RemoteClient::complete(const std::vector<ChatMessage>& messages, double temperature,
                                  const std::vector<std::string>& stop) const {
    nlohmann::ordered_json body;
    body["model"] = config_.model;
    body["messages"] = nlohmann::json::array();
    for (const ChatMessage& message : messages) body["messages"].push_back(message_to_json(message));
    body["temperature"] = temperature;
    if (!stop.empty()) body["stop"] = stop;
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        if (attempt > 1) {
            const auto delay = std::chrono::milliseconds(
                static_cast<long long>(config_.backoff_base_ms) * (1ll << (attempt - 2)));
            std::this_thread::sleep_for(delay);
        }

        Impl::SlotGuard slot(*impl_, config_.max_inflight);
        httplib::Client client(impl_->endpoint.host, impl_->endpoint.port);
        client.set_connection_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
        client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
        client.set_write_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);

        httplib::Headers headers;
        if (!impl_->api_key.empty())
            headers.emplace("Authorization", "Bearer " + impl_->api_key);

        auto result = client.Post(config_.path, headers, payload, "application/json");
        if (!result) {
            last_error = "transport error: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status == 401 || result->status == 403)
            throw AuthError("remote endpoint rejected the credential (HTTP " +
                            std::to_string(result->status) + ")");
        if (result->status == 429 || result->status >= 500) {
            last_error = "HTTP " + std::to_string(result->status);
            continue;
        }
        if (result->status != 200)
            throw BackendError("remote endpoint returned HTTP " +
                               std::to_string(result->status) + ": " + result->body);

        nlohmann::json response;
        try {
            response = nlohmann::json::parse(result->body);
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("remote response is not JSON: ") + e.what());
        }
        if (!response.contains("choices") || !response["choices"].is_array() ||
            response["choices"].empty())
            throw BackendError("remote response carries no choices");

        Completion completion;
        completion.text = content_text(response["choices"][0].value("message",
                                                                    nlohmann::json::object())
                                           .value("content", nlohmann::json()));
        if (response.contains("usage") && response["usage"].is_object()) {
            completion.prompt_tokens = response["usage"].value("prompt_tokens", 0ll);
            completion.completion_tokens = response["usage"].value("completion_tokens", 0ll);
        } else {
            completion.prompt_tokens =
                estimate_tokens(static_cast<std::size_t>(request_bytes(messages)));
            completion.completion_tokens = estimate_tokens(completion.text.size());
        }
        return completion;
    }
    throw BackendError("remote request failed after " + std::to_string(config_.max_attempts) +
                       " attempts (" + last_error + ")");
}

Completion remote_complete(const RemoteClient& client, const std::vector<ChatMessage>& messages,
                           double temperature, const std::vector<std::string>& stop) {
    return client.complete(messages, temperature, stop);
}

namespace {

MessagePart text_part(std::string text) {
    MessagePart part;
    part.type = "text";
    part.text = std::move(text);
    return part;
}

MessagePart image_part(const ToyImage& image) {
    MessagePart part;
    part.type = "image";
    part.media_type = "application/json";
    part.data = base64_encode(to_json_string(image));
    return part;
}

ChatMessage user_message_with_images(const std::string& text,
                                     const std::vector<ToyImage>& images) {
    ChatMessage message;
    message.role = "user";
    message.parts.push_back(text_part(text));
    for (const ToyImage& image : images) message.parts.push_back(image_part(image));
    return message;
}

// A fenced code block in a response becomes an external visual operation.
std::optional<std::string> fenced_code(const std::string& text) {
    const std::size_t open = text.find("```");
    if (open == std::string::npos) return std::nullopt;
    std::size_t body = text.find('\n', open);
    if (body == std::string::npos) return std::nullopt;
    ++body;
    const std::size_t close = text.find("```", body);
    if (close == std::string::npos) return std::nullopt;
    return text.substr(body, close - body);
}

}  // namespace

RemotePolicy::RemotePolicy(std::shared_ptr<RemoteClient> client, PolicyConfig config)
    : client_(std::move(client)), config_(std::move(config)) {
    config_.validate();
}

ThoughtStep RemotePolicy::sample_step(const Problem& problem, const Chain& prefix,
                                      const StepContext&) {
    std::vector<ChatMessage> messages;
    ChatMessage system;
    system.role = "system";
    system.parts.push_back(text_part(client_->config().system_prompt));
    messages.push_back(std::move(system));

    messages.push_back(user_message_with_images(problem.question,
                                                gather_images(problem, prefix)));
    for (const ThoughtStep& step : prefix.steps) {
        ChatMessage assistant;
        assistant.role = "assistant";
        assistant.parts.push_back(text_part(step.text));
        messages.push_back(std::move(assistant));
    }
    if (!prefix.steps.empty()) {
        ChatMessage user;
        user.role = "user";
        user.parts.push_back(text_part("Continue with the next reasoning step."));
        messages.push_back(std::move(user));
    }

    const Completion completion =
        client_->complete(messages, config_.temperature, {config_.step_stop_marker});

    ThoughtStep step;
    step.modality = config_.modality;
    step.text = completion.text;
    const std::size_t stop = step.text.find(config_.step_stop_marker);
    if (stop != std::string::npos) step.text.resize(stop);
    step.prompt_tokens = completion.prompt_tokens;
    step.completion_tokens = completion.completion_tokens;

    if (config_.modality == Modality::multi_modal) {
        if (auto code = fenced_code(step.text)) step.op = VisualOp::external(*code);
    }
    return step;
}

long long RemotePolicy::image_token_cost(const ToyImage& image) const {
    return estimate_tokens(to_json_string(image).size());
}

RemoteVerifierBackend::RemoteVerifierBackend(std::shared_ptr<RemoteClient> client,
                                             double temperature)
    : client_(std::move(client)), temperature_(temperature) {}

std::string RemoteVerifierBackend::run_trial(const Problem& problem, const Chain& prefix,
                                             const VerifierPrompt& prompt, std::uint64_t) {
    std::string rendered = "Question: " + problem.question + "\n\nReasoning process:\n";
    for (std::size_t i = 0; i < prefix.steps.size(); ++i) {
        rendered += "Step " + std::to_string(i + 1) + ": " + prefix.steps[i].text + "\n";
        if (prefix.steps[i].exec_error)
            rendered += "(visual operation failed: " + *prefix.steps[i].exec_error + ")\n";
    }
    rendered += "\n" + prompt.instruction;

    std::vector<ChatMessage> messages;
    ChatMessage system;
    system.role = "system";
    system.parts.push_back(text_part("You are a strict verifier of reasoning chains."));
    messages.push_back(std::move(system));
    messages.push_back(user_message_with_images(rendered, gather_images(problem, prefix)));

    return client_->complete(messages, temperature_, {}).text;
}

}  // namespace scalesearch
