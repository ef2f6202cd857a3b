#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "urbancast/retrieval/language_model.hpp"

namespace urbancast {

// Sentence embedder producing fixed-length vectors. Implementations return
// unit L2 norm, are deterministic, and are safe to call concurrently.
class TextEmbedder {
public:
    virtual ~TextEmbedder() = default;
    virtual std::vector<double> embed(std::string_view text) const = 0;
    virtual std::size_t dimension() const noexcept = 0;
};

// Checks the input and the unit-norm contract around embedder.embed().
std::vector<double> embed_text(const TextEmbedder& embedder, std::string_view text);

// Offline bag-of-words embedder: lowercase, split on non-alphanumeric ASCII,
// FNV-1a hash each token into one of `buckets` slots, count, L2-normalise.
// Bytes >= 0x80 are kept inside tokens so UTF-8 words stay whole.
class HashingEmbedder final : public TextEmbedder {
public:
    explicit HashingEmbedder(std::size_t buckets = 256);

    std::vector<double> embed(std::string_view text) const override;
    std::size_t dimension() const noexcept override { return buckets_; }

    static std::vector<std::string> tokenize(std::string_view text);
    std::size_t bucket_of(std::string_view token) const;

private:
    std::size_t buckets_;
};

// POST {base_url}/v1/embeddings {model, input: [text]}; the vector is
// L2-normalised on receipt.
class HttpEmbedder final : public TextEmbedder {
public:
    HttpEmbedder(ChatEndpoint endpoint, std::size_t dimension);

    std::vector<double> embed(std::string_view text) const override;
    std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) const;
    std::size_t dimension() const noexcept override { return dimension_; }

private:
    ChatEndpoint endpoint_;
    std::size_t dimension_;
};

// a.b / (|a| |b|) clamped to [-1, 1]. Throws DimensionError on a length
// mismatch and InputError on a zero vector.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);
double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b);

}  // namespace urbancast
