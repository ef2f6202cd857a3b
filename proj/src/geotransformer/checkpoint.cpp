#include "urbancast/geotransformer/checkpoint.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "urbancast/errors.hpp"

namespace urbancast {

namespace {

constexpr std::array<char, 4> kMagic = {'U', 'C', 'G', 'T'};

class Writer {
public:
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
    const std::vector<char>& bytes() const { return bytes_; }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    std::vector<char> bytes_;
};

class Reader {
public:
    explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    double f64() { return std::bit_cast<double>(get(8)); }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    void expect(std::size_t n) const {
        if (remaining() < n) throw CheckpointError("checkpoint is truncated");
    }
    std::array<char, 4> magic() {
        expect(4);
        std::array<char, 4> m{};
        for (char& c : m) c = bytes_[pos_++];
        return m;
    }

private:
    std::uint64_t get(int n) {
        expect(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
        }
        return v;
    }
    std::vector<char> bytes_;
    std::size_t pos_ = 0;
};

template <typename E>
E enum_from(std::uint32_t v, std::uint32_t count, const char* what) {
    if (v >= count) throw CheckpointError(std::string("invalid ") + what + " code " + std::to_string(v));
    return static_cast<E>(v);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    const AttentionConfig& cfg = checkpoint.config;
    check_shapes(checkpoint.params, cfg);
    Writer w;
    w.raw(kMagic.data(), kMagic.size());
    w.u32(kCheckpointVersion);
    for (std::size_t v : {cfg.d_model, cfg.heads, cfg.layers, cfg.context_slots, cfg.key_dim(), cfg.value_dim()}) {
        w.u32(static_cast<std::uint32_t>(v));
    }
    w.f64(cfg.alpha);
    w.u32(static_cast<std::uint32_t>(cfg.weighting));
    w.u32(static_cast<std::uint32_t>(cfg.block));
    w.u32(cfg.renormalize ? 1u : 0u);
    w.u32(cfg.block == BlockStyle::pre_norm_ffn ? static_cast<std::uint32_t>(cfg.ffn_dim()) : 0u);
    w.u64(parameter_count(checkpoint.params));
    visit_params(
        [&](auto block) {
            for (double x : block) w.f64(x);
        },
        checkpoint.params);
    w.f64(checkpoint.scaler.mean);
    w.f64(checkpoint.scaler.scale);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out.flush()) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    Reader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}));

    if (r.magic() != kMagic) throw CheckpointError(path.string() + " is not a model checkpoint");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ck;
    AttentionConfig& cfg = ck.config;
    cfg.d_model = r.u32();
    cfg.heads = r.u32();
    cfg.layers = r.u32();
    cfg.context_slots = r.u32();
    cfg.d_k = r.u32();
    cfg.d_v = r.u32();
    cfg.alpha = r.f64();
    cfg.weighting = enum_from<Weighting>(r.u32(), 5, "weighting");
    cfg.block = enum_from<BlockStyle>(r.u32(), 2, "block style");
    const std::uint32_t renorm = r.u32();
    if (renorm > 1) throw CheckpointError("invalid renormalize flag");
    cfg.renormalize = renorm == 1;
    cfg.d_ff = r.u32();
    try {
        cfg.validate();
        ck.params = zero_params(cfg);
    } catch (const Error& e) {
        throw CheckpointError(std::string("invalid checkpoint header: ") + e.what());
    }

    const std::uint64_t count = r.u64();
    if (count != parameter_count(ck.params)) {
        throw CheckpointError("checkpoint holds " + std::to_string(count) + " parameters, header implies " +
                              std::to_string(parameter_count(ck.params)));
    }
    r.expect(count * 8 + 16);
    visit_params(
        [&](auto block) {
            for (double& x : block) x = r.f64();
        },
        ck.params);
    ck.scaler.mean = r.f64();
    ck.scaler.scale = r.f64();
    if (r.remaining() != 0) throw CheckpointError("trailing bytes after checkpoint payload");
    return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const AttentionConfig& expected) {
    Checkpoint ck = load_checkpoint(path);
    const AttentionConfig& c = ck.config;
    auto mismatch = [](const char* field) { throw CheckpointError(std::string("checkpoint ") + field +
                                                                  " does not match the configuration"); };
    if (c.d_model != expected.d_model) mismatch("d_model");
    if (c.heads != expected.heads) mismatch("heads");
    if (c.layers != expected.layers) mismatch("layers");
    if (c.context_slots != expected.context_slots) mismatch("context_slots");
    if (c.key_dim() != expected.key_dim()) mismatch("d_k");
    if (c.value_dim() != expected.value_dim()) mismatch("d_v");
    if (c.alpha != expected.alpha) mismatch("alpha");
    if (c.weighting != expected.weighting) mismatch("weighting");
    if (c.block != expected.block) mismatch("block style");
    if (c.renormalize != expected.renormalize) mismatch("renormalize flag");
    if (c.block == BlockStyle::pre_norm_ffn && c.ffn_dim() != expected.ffn_dim()) mismatch("d_ff");
    return ck;
}

}  // namespace urbancast
