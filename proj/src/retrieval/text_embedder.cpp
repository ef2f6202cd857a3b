#include "urbancast/retrieval/text_embedder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>

#include <httplib.h>

#include <json.hpp>

#include "urbancast/errors.hpp"

namespace urbancast {

using nlohmann::json;

namespace {

bool token_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

template <typename T>
double norm_of(const std::vector<T>& v) {
    double s = 0.0;
    for (T x : v) s += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(s);
}

void normalize(std::vector<double>& v) {
    const double n = norm_of(v);
    if (!(n > 0.0) || !std::isfinite(n)) throw InputError("cannot normalise a zero or non-finite vector");
    for (double& x : v) x /= n;
}

template <typename T>
double cosine_impl(const std::vector<T>& a, const std::vector<T>& b) {
    if (a.size() != b.size()) {
        throw DimensionError("cosine_similarity: lengths " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()));
    }
    // Rescale by the largest magnitude so tiny or huge inputs neither
    // underflow nor overflow.
    double sa = 0.0;
    double sb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = static_cast<double>(a[i]);
        const double y = static_cast<double>(b[i]);
        if (!std::isfinite(x) || !std::isfinite(y)) throw InputError("cosine_similarity: non-finite input");
        sa = std::max(sa, std::abs(x));
        sb = std::max(sb, std::abs(y));
    }
    if (sa == 0.0 || sb == 0.0) throw InputError("cosine_similarity: zero vector");
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = static_cast<double>(a[i]) / sa;
        const double y = static_cast<double>(b[i]) / sb;
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace

std::vector<double> embed_text(const TextEmbedder& embedder, std::string_view text) {
    if (text.empty()) throw InputError("embed_text: empty text");
    std::vector<double> v = embedder.embed(text);
    if (v.size() != embedder.dimension()) {
        throw DimensionError("embedder returned " + std::to_string(v.size()) + " values, expected " +
                             std::to_string(embedder.dimension()));
    }
    const double n = norm_of(v);
    if (!(n > 0.0) || !std::isfinite(n)) throw InputError("embedder returned a zero or non-finite vector");
    return v;
}

HashingEmbedder::HashingEmbedder(std::size_t buckets) : buckets_(buckets) {
    if (buckets_ == 0) throw DimensionError("HashingEmbedder needs at least one bucket");
}

std::vector<std::string> HashingEmbedder::tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (token_byte(c)) {
            cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::size_t HashingEmbedder::bucket_of(std::string_view token) const {
    return static_cast<std::size_t>(fnv1a(token) % buckets_);
}

std::vector<double> HashingEmbedder::embed(std::string_view text) const {
    const auto tokens = tokenize(text);
    if (tokens.empty()) throw InputError("HashingEmbedder: text has no tokens");
    std::vector<double> v(buckets_, 0.0);
    for (const auto& t : tokens) v[bucket_of(t)] += 1.0;
    normalize(v);
    return v;
}

HttpEmbedder::HttpEmbedder(ChatEndpoint endpoint, std::size_t dimension)
    : endpoint_(std::move(endpoint)), dimension_(dimension) {
    parse_base_url(endpoint_.base_url);
}

std::vector<double> HttpEmbedder::embed(std::string_view text) const {
    return embed_batch({std::string(text)}).front();
}

std::vector<std::vector<double>> HttpEmbedder::embed_batch(const std::vector<std::string>& texts) const {
    const ParsedUrl url = parse_base_url(endpoint_.base_url);
    httplib::Client cli(url.origin);
    cli.set_connection_timeout(endpoint_.timeout);
    cli.set_read_timeout(endpoint_.timeout);
    if (!endpoint_.api_key.empty()) cli.set_bearer_token_auth(endpoint_.api_key);

    const json body = {{"model", endpoint_.model}, {"input", texts}};
    auto res = cli.Post(url.prefix + "/v1/embeddings", body.dump(), "application/json");
    if (!res) {
        throw LlmError(LlmErrorKind::transport, true, url.origin + ": " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw LlmError(LlmErrorKind::status, res->status == 429 || res->status >= 500,
                       "HTTP " + std::to_string(res->status) + " from embeddings endpoint", res->status);
    }
    std::vector<std::vector<double>> out;
    try {
        const json reply = json::parse(res->body);
        for (const auto& item : reply.at("data")) {
            out.push_back(item.at("embedding").get<std::vector<double>>());
        }
    } catch (const json::exception& e) {
        throw LlmError(LlmErrorKind::malformed_response, false, e.what(), res->status);
    }
    if (out.size() != texts.size()) {
        throw LlmError(LlmErrorKind::malformed_response, false,
                       "expected " + std::to_string(texts.size()) + " embeddings, got " +
                           std::to_string(out.size()));
    }
    for (auto& v : out) {
        if (v.size() != dimension_) {
            throw LlmError(LlmErrorKind::malformed_response, false,
                           "embedding length " + std::to_string(v.size()) + " != " +
                               std::to_string(dimension_));
        }
        normalize(v);
    }
    return out;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    return cosine_impl(a, b);
}

double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b) {
    return cosine_impl(a, b);
}

}  // namespace urbancast
