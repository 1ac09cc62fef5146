#include <cmath>
#include <optional>

#include "numcolor/cta.hpp"
#include "numcolor/detail/binary_io.hpp"
#include "numcolor/error.hpp"

namespace numcolor {

namespace {

constexpr char kMagic[4] = {'N', 'C', 'T', 'A'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

std::vector<char> CtaModel::serialize() const {
    detail::ByteWriter w;
    w.raw({kMagic, 4});
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(cfg_.char_vocab));
    w.u32(static_cast<std::uint32_t>(cfg_.char_dim));
    w.u32(static_cast<std::uint32_t>(cfg_.kernel_sizes.size()));
    for (const auto k : cfg_.kernel_sizes) w.u32(static_cast<std::uint32_t>(k));
    w.u32(static_cast<std::uint32_t>(cfg_.token_dim));
    w.u32(static_cast<std::uint32_t>(cfg_.max_chars));
    w.u32(static_cast<std::uint32_t>(cfg_.layers));
    w.u32(static_cast<std::uint32_t>(cfg_.heads));
    w.u32(static_cast<std::uint32_t>(cfg_.ffn_dim));
    w.u32(static_cast<std::uint32_t>(cfg_.max_seq));
    w.f64(cfg_.dropout);
    w.u64(params_.size());
    for (const double v : params_) w.f32(static_cast<float>(v));
    return w.take();
}

CtaModel CtaModel::deserialize(const std::vector<char>& bytes) {
    using Kind = FormatError::Kind;
    detail::ByteReader r(bytes.data(), bytes.size(), "cta checkpoint");
    if (bytes.size() < 4 || r.raw(4) != std::string_view(kMagic, 4)) {
        throw FormatError(Kind::bad_magic, "cta checkpoint: bad magic");
    }
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw FormatError(Kind::version_mismatch, "cta checkpoint: version mismatch (file " +
                                                      std::to_string(version) + ", expected " +
                                                      std::to_string(kVersion) + ")");
    }
    CtaConfig cfg;
    cfg.char_vocab = r.u32();
    cfg.char_dim = r.u32();
    const std::uint32_t nk = r.u32();
    if (nk > 64) throw FormatError(Kind::malformed, "cta checkpoint: implausible kernel count");
    cfg.kernel_sizes.assign(nk, 0);
    for (auto& k : cfg.kernel_sizes) k = r.u32();
    cfg.token_dim = r.u32();
    cfg.max_chars = r.u32();
    cfg.layers = r.u32();
    cfg.heads = r.u32();
    cfg.ffn_dim = r.u32();
    cfg.max_seq = r.u32();
    cfg.dropout = r.f64();
    const std::uint64_t count = r.u64();

    std::optional<CtaModel> model;
    try {
        model.emplace(cfg);
    } catch (const Error& e) {
        throw FormatError(Kind::malformed, std::string("cta checkpoint: ") + e.what());
    }
    if (count != model->params_.size()) {
        throw FormatError(Kind::malformed, "cta checkpoint: parameter count does not match config");
    }
    if (r.remaining() < count * 4) throw FormatError(Kind::truncated, "cta checkpoint: truncated");
    if (r.remaining() > count * 4) throw FormatError(Kind::trailing_data, "cta checkpoint: trailing bytes");
    for (auto& v : model->params_) {
        const float f = r.f32();
        if (!std::isfinite(f)) throw FormatError(Kind::non_finite, "cta checkpoint: non-finite parameter");
        v = f;
    }
    for (const auto i : model->frozen_) {
        if (model->params_[i] != kForbiddenScore) {
            throw FormatError(Kind::malformed, "cta checkpoint: CRF constraint entries altered");
        }
    }
    return std::move(*model);
}

void CtaModel::save(const std::string& path) const { detail::write_file(path, serialize()); }

CtaModel CtaModel::load(const std::string& path) { return deserialize(detail::read_file(path)); }

}  // namespace numcolor
