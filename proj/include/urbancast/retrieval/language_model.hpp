#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

namespace urbancast {

enum class PrototypeSource { language_model, canned_mock };

const char* to_string(PrototypeSource source);

// The language model's description r_i of what useful context regions look
// like for one (task, target) pair.
struct PrototypeQuery {
    std::string text;
    PrototypeSource source = PrototypeSource::language_model;
};

// Text-in/text-out model. Implementations must be safe to call concurrently.
class LanguageModelClient {
public:
    virtual ~LanguageModelClient() = default;

    // Raw response text; throws LlmError on failure.
    virtual std::string complete(const std::string& prompt) const = 0;
    virtual PrototypeSource source() const noexcept = 0;
};

// Calls the client and wraps the whitespace-trimmed reply. Throws InputError
// for an empty prompt and LlmError(empty_response) for a blank reply.
PrototypeQuery infer_prototype(const LanguageModelClient& client, const std::string& prompt);

// Offline stand-in: looks up the prompt's task phrase in a canned table.
// Unknown tasks get `fallback` (empty by default, which surfaces as an
// empty-response error).
using CannedResponses = std::map<std::string, std::string>;

class MockLanguageModel final : public LanguageModelClient {
public:
    explicit MockLanguageModel(CannedResponses canned, std::string fallback = {})
        : canned_(std::move(canned)), fallback_(std::move(fallback)) {}

    std::string complete(const std::string& prompt) const override;
    PrototypeSource source() const noexcept override { return PrototypeSource::canned_mock; }

private:
    CannedResponses canned_;
    std::string fallback_;
};

struct ChatEndpoint {
    std::string base_url;  // scheme://host[:port][/prefix]
    std::string model = "default";
    std::string api_key;   // sent as a bearer token when non-empty
    std::chrono::seconds timeout{60};
};

// POST {base_url}/v1/chat/completions with temperature 0; reads
// choices[0].message.content.
class ChatCompletionClient final : public LanguageModelClient {
public:
    explicit ChatCompletionClient(ChatEndpoint endpoint);

    std::string complete(const std::string& prompt) const override;
    PrototypeSource source() const noexcept override { return PrototypeSource::language_model; }

    const ChatEndpoint& endpoint() const noexcept { return endpoint_; }

private:
    ChatEndpoint endpoint_;
};

// Lowercase hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

// Append-only JSONL cache of {"prompt_sha256", "response_text"} lines.
class PrototypeCache {
public:
    explicit PrototypeCache(std::filesystem::path path);

    std::optional<std::string> get(const std::string& prompt) const;
    void put(const std::string& prompt, const std::string& response);
    std::size_t size() const;

private:
    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::string> entries_;
};

// Serves responses from a PrototypeCache, forwarding misses to `inner`.
class CachingLanguageModel final : public LanguageModelClient {
public:
    CachingLanguageModel(const LanguageModelClient& inner, PrototypeCache& cache)
        : inner_(inner), cache_(cache) {}

    std::string complete(const std::string& prompt) const override;
    PrototypeSource source() const noexcept override { return inner_.source(); }

private:
    const LanguageModelClient& inner_;
    PrototypeCache& cache_;
};

// Splits "scheme://host[:port][/prefix]" into the origin and path prefix.
struct ParsedUrl {
    std::string origin;
    std::string prefix;
};
ParsedUrl parse_base_url(const std::string& base_url);

}  // namespace urbancast
