#include "urbancast/retrieval/language_model.hpp"

#include <array>
#include <cctype>
#include <fstream>

#include <httplib.h>
#include <openssl/evp.h>

#include <json.hpp>

#include "urbancast/errors.hpp"
#include "urbancast/retrieval/prompt.hpp"

namespace urbancast {

using nlohmann::json;

const char* to_string(PrototypeSource source) {
    return source == PrototypeSource::canned_mock ? "canned_mock" : "language_model";
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

PrototypeQuery infer_prototype(const LanguageModelClient& client, const std::string& prompt) {
    if (prompt.empty()) throw InputError("infer_prototype: empty prompt");
    std::string text = trim(client.complete(prompt));
    if (text.empty()) throw LlmError(LlmErrorKind::empty_response, true, "model returned no text");
    return {std::move(text), client.source()};
}

std::string MockLanguageModel::complete(const std::string& prompt) const {
    const auto it = canned_.find(task_text_from_prompt(prompt));
    return it == canned_.end() ? fallback_ : it->second;
}

ParsedUrl parse_base_url(const std::string& base_url) {
    const auto scheme = base_url.find("://");
    if (scheme == std::string::npos) throw InputError("base url needs a scheme: " + base_url);
    const auto path = base_url.find('/', scheme + 3);
    ParsedUrl out;
    out.origin = base_url.substr(0, path);
    if (path != std::string::npos) out.prefix = base_url.substr(path);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    return out;
}

ChatCompletionClient::ChatCompletionClient(ChatEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    parse_base_url(endpoint_.base_url);
}

std::string ChatCompletionClient::complete(const std::string& prompt) const {
    const ParsedUrl url = parse_base_url(endpoint_.base_url);
    httplib::Client cli(url.origin);
    cli.set_connection_timeout(endpoint_.timeout);
    cli.set_read_timeout(endpoint_.timeout);
    cli.set_write_timeout(endpoint_.timeout);
    if (!endpoint_.api_key.empty()) cli.set_bearer_token_auth(endpoint_.api_key);

    const json body = {{"model", endpoint_.model},
                       {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                       {"temperature", 0}};
    auto res = cli.Post(url.prefix + "/v1/chat/completions", body.dump(), "application/json");
    if (!res) {
        throw LlmError(LlmErrorKind::transport, true,
                       url.origin + ": " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw LlmError(LlmErrorKind::status, retryable_status(res->status),
                       "HTTP " + std::to_string(res->status) + " from " + url.origin, res->status);
    }
    std::string content;
    try {
        const json reply = json::parse(res->body);
        const json& message = reply.at("choices").at(0).at("message");
        if (message.contains("content") && message["content"].is_string()) {
            content = message["content"].get<std::string>();
        }
    } catch (const json::exception& e) {
        throw LlmError(LlmErrorKind::malformed_response, false, e.what(), res->status);
    }
    if (trim(content).empty()) {
        throw LlmError(LlmErrorKind::empty_response, true, "empty completion", res->status);
    }
    return content;
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

PrototypeCache::PrototypeCache(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            const json obj = json::parse(line);
            entries_[obj.at("prompt_sha256").get<std::string>()] =
                obj.at("response_text").get<std::string>();
        } catch (const json::exception& e) {
            throw IoError("prototype cache " + path_.string() + ": " + e.what());
        }
    }
}

std::optional<std::string> PrototypeCache::get(const std::string& prompt) const {
    const std::string key = sha256_hex(prompt);
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void PrototypeCache::put(const std::string& prompt, const std::string& response) {
    const std::string key = sha256_hex(prompt);
    std::lock_guard lock(mutex_);
    if (!entries_.emplace(key, response).second) return;
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    out << json{{"prompt_sha256", key}, {"response_text", response}}.dump() << '\n';
    if (!out) throw IoError("cannot append to prototype cache " + path_.string());
}

std::size_t PrototypeCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::string CachingLanguageModel::complete(const std::string& prompt) const {
    if (auto hit = cache_.get(prompt)) return *hit;
    std::string response = inner_.complete(prompt);
    if (!trim(response).empty()) cache_.put(prompt, response);
    return response;
}

}  // namespace urbancast
