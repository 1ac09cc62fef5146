#include "numcolor/cta.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "numcolor/detail/binary_io.hpp"
#include "numcolor/detail/random.hpp"
#include "numcolor/detail/utf8.hpp"
#include "numcolor/error.hpp"

namespace numcolor {

namespace {

using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;
using ConstRow = Eigen::Map<const Eigen::RowVectorXd>;
using MutRow = Eigen::Map<Eigen::RowVectorXd>;
using WindowMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

constexpr double kLayerNormEps = 1e-5;
constexpr std::size_t kGradientChunks = 8;

float to_f32(double v) { return static_cast<float>(v); }

// ---- parameter views ------------------------------------------------------

struct View {
    const std::vector<ParamInfo>* layout;
    const double* base;

    [[nodiscard]] ConstMap mat(std::size_t slot) const {
        const auto& p = (*layout)[slot];
        return {base + p.offset, static_cast<Eigen::Index>(p.rows), static_cast<Eigen::Index>(p.cols)};
    }
    [[nodiscard]] ConstRow row(std::size_t slot) const {
        const auto& p = (*layout)[slot];
        return {base + p.offset, static_cast<Eigen::Index>(p.size())};
    }
};

struct GradView {
    const std::vector<ParamInfo>* layout;
    double* base;

    [[nodiscard]] MutMap mat(std::size_t slot) const {
        const auto& p = (*layout)[slot];
        return {base + p.offset, static_cast<Eigen::Index>(p.rows), static_cast<Eigen::Index>(p.cols)};
    }
    [[nodiscard]] MutRow row(std::size_t slot) const {
        const auto& p = (*layout)[slot];
        return {base + p.offset, static_cast<Eigen::Index>(p.size())};
    }
};

// ---- dropout --------------------------------------------------------------

// Per-element multiplier (0 or 1/(1-p)); empty when dropout is inactive.
RowMatrix dropout_mask(const DropoutContext& ctx, double rate, std::uint64_t site, Eigen::Index rows,
                       Eigen::Index cols) {
    if (!ctx.training || rate <= 0.0) return {};
    RowMatrix mask(rows, cols);
    const double scale = 1.0 / (1.0 - rate);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            const auto element = static_cast<std::uint64_t>(i * cols + j);
            const double u =
                detail::to_unit(detail::hash_key(ctx.seed, ctx.step, ctx.sample, (site << 40) ^ element));
            mask(i, j) = u >= rate ? scale : 0.0;
        }
    }
    return mask;
}

void apply_mask(RowMatrix& x, const RowMatrix& mask) {
    if (mask.size() != 0) x.array() *= mask.array();
}

// ---- layer norm -----------------------------------------------------------

struct NormCache {
    RowMatrix xhat;
    Eigen::VectorXd rstd;
};

RowMatrix layer_norm(const RowMatrix& x, const ConstRow& gamma, const ConstRow& beta, NormCache* cache) {
    const Eigen::Index d = x.cols();
    RowMatrix xhat(x.rows(), d);
    Eigen::VectorXd rstd(x.rows());
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
        const double mean = x.row(t).mean();
        const double var = (x.row(t).array() - mean).square().sum() / static_cast<double>(d);
        rstd(t) = 1.0 / std::sqrt(var + kLayerNormEps);
        xhat.row(t) = (x.row(t).array() - mean) * rstd(t);
    }
    RowMatrix y = (xhat.array().rowwise() * gamma.array()).matrix();
    y.rowwise() += beta;
    if (cache != nullptr) {
        cache->xhat = std::move(xhat);
        cache->rstd = std::move(rstd);
    }
    return y;
}

RowMatrix layer_norm_backward(const RowMatrix& dy, const NormCache& c, const ConstRow& gamma,
                              MutRow dgamma, MutRow dbeta) {
    dgamma += (dy.array() * c.xhat.array()).colwise().sum().matrix();
    dbeta += dy.colwise().sum();
    const RowMatrix dxhat = (dy.array().rowwise() * gamma.array()).matrix();
    RowMatrix dx(dy.rows(), dy.cols());
    const double inv_d = 1.0 / static_cast<double>(dy.cols());
    for (Eigen::Index t = 0; t < dy.rows(); ++t) {
        const double m1 = dxhat.row(t).sum() * inv_d;
        const double m2 = dxhat.row(t).dot(c.xhat.row(t)) * inv_d;
        dx.row(t) = c.rstd(t) * (dxhat.row(t).array() - m1 - c.xhat.row(t).array() * m2).matrix();
    }
    return dx;
}

// ---- activations ----------------------------------------------------------

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

// ---- forward caches -------------------------------------------------------

struct TokenCache {
    std::vector<std::uint32_t> ids;
    std::vector<std::vector<int>> argmax;   // per kernel, per channel; -1 if ReLU inactive
};

struct LayerCache {
    NormCache ln1, ln2;
    RowMatrix a, q, k, v, o;
    std::vector<RowMatrix> probs;
    RowMatrix mask1, mask2;
    RowMatrix f, hpre, hact;
};

struct ForwardCache {
    std::vector<TokenCache> tokens;
    RowMatrix mask0;
    std::vector<LayerCache> layers;
    NormCache lnf;
    RowMatrix h;
};

class Net {
public:
    explicit Net(const CtaModel& m)
        : cfg_(m.config()), s_(m.slots()), p_{&m.layout(), m.parameters().data()},
          channels_(cfg_.channels()) {}

    Eigen::VectorXd encode_token(std::string_view surface, TokenCache* cache) const {
        const auto ids = char_ids(cfg_, surface);
        const auto n_chars = static_cast<std::size_t>(
            std::count_if(ids.begin(), ids.end(), [](std::uint32_t v) { return v != kPadChar; }));
        // A surface's real characters always form a prefix of `ids`.
        const std::size_t n = std::min(n_chars, cfg_.max_chars);
        const auto cd = static_cast<Eigen::Index>(cfg_.char_dim);
        RowMatrix x(static_cast<Eigen::Index>(cfg_.max_chars), cd);
        const auto emb = p_.mat(s_.char_emb);
        for (std::size_t i = 0; i < cfg_.max_chars; ++i) x.row(static_cast<Eigen::Index>(i)) = emb.row(ids[i]);

        Eigen::VectorXd out(static_cast<Eigen::Index>(cfg_.token_dim));
        if (cache != nullptr) {
            cache->ids = ids;
            cache->argmax.assign(channels_.size(), {});
        }
        Eigen::Index col = 0;
        for (std::size_t k = 0; k < channels_.size(); ++k) {
            const std::size_t s = cfg_.kernel_sizes[k];
            const std::size_t positions = cfg_.max_chars - s + 1;
            // Windows starting at or after the last real character are all PAD
            // and identical, so evaluating the first of them is enough.
            const std::size_t np = std::min(positions, n + 1);
            const WindowMap win(x.data(), static_cast<Eigen::Index>(np),
                                static_cast<Eigen::Index>(s) * cd, Eigen::OuterStride<>(cd));
            const auto w = p_.mat(s_.conv_w[k]);
            RowMatrix z = win * w.transpose();
            z.rowwise() += p_.row(s_.conv_b[k]);
            std::vector<int> arg(channels_[k], -1);
            for (Eigen::Index c = 0; c < z.cols(); ++c) {
                Eigen::Index best = 0;
                for (Eigen::Index p = 1; p < z.rows(); ++p) {
                    if (z(p, c) > z(best, c)) best = p;
                }
                const double v = z(best, c);
                out(col + c) = v > 0.0 ? v : 0.0;
                if (v > 0.0) arg[static_cast<std::size_t>(c)] = static_cast<int>(best);
            }
            col += z.cols();
            if (cache != nullptr) cache->argmax[k] = std::move(arg);
        }
        return out;
    }

    RowMatrix encode_tokens(const std::vector<Token>& tokens, ForwardCache* cache) const {
        RowMatrix out(static_cast<Eigen::Index>(tokens.size()), static_cast<Eigen::Index>(cfg_.token_dim));
        if (cache != nullptr) cache->tokens.assign(tokens.size(), {});
        std::string marked;
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            std::string_view surface = tokens[t].surface;
            if (starts_word(tokens, t)) {
                marked.assign(kWordStartMarker);
                marked.append(surface);
                surface = marked;
            }
            out.row(static_cast<Eigen::Index>(t)) =
                encode_token(surface, cache ? &cache->tokens[t] : nullptr).transpose();
        }
        return out;
    }

    RowMatrix contextualize(const RowMatrix& tv, const DropoutContext& ctx, ForwardCache* cache) const {
        const Eigen::Index T = tv.rows();
        const auto D = static_cast<Eigen::Index>(cfg_.token_dim);
        if (static_cast<std::size_t>(T) > cfg_.max_seq) {
            throw Error("cta: sequence length " + std::to_string(T) + " exceeds max_seq " +
                        std::to_string(cfg_.max_seq));
        }
        if (tv.cols() != D) throw Error("cta: token vector width mismatch");
        RowMatrix x = tv + positional(T);
        RowMatrix mask0 = dropout_mask(ctx, cfg_.dropout, 0, T, D);
        apply_mask(x, mask0);
        if (cache != nullptr) {
            cache->mask0 = std::move(mask0);
            cache->layers.assign(cfg_.layers, {});
        }
        const std::size_t heads = cfg_.heads;
        const Eigen::Index dh = D / static_cast<Eigen::Index>(heads);
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
        for (std::size_t l = 0; l < cfg_.layers; ++l) {
            const auto& ls = s_.layers[l];
            LayerCache local;
            LayerCache& lc = cache ? cache->layers[l] : local;
            lc.a = layer_norm(x, p_.row(ls.ln1_g), p_.row(ls.ln1_b), &lc.ln1);
            lc.q = lc.a * p_.mat(ls.wq);
            lc.q.rowwise() += p_.row(ls.bq);
            lc.k = lc.a * p_.mat(ls.wk);
            lc.k.rowwise() += p_.row(ls.bk);
            lc.v = lc.a * p_.mat(ls.wv);
            lc.v.rowwise() += p_.row(ls.bv);
            lc.o.resize(T, D);
            lc.probs.assign(heads, {});
            for (std::size_t h = 0; h < heads; ++h) {
                const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
                RowMatrix sc = (lc.q.middleCols(c0, dh) * lc.k.middleCols(c0, dh).transpose()) * scale;
                for (Eigen::Index i = 0; i < T; ++i) {
                    const double mx = sc.row(i).maxCoeff();
                    sc.row(i) = (sc.row(i).array() - mx).exp().matrix();
                    sc.row(i) /= sc.row(i).sum();
                }
                lc.o.middleCols(c0, dh) = sc * lc.v.middleCols(c0, dh);
                lc.probs[h] = std::move(sc);
            }
            RowMatrix y = lc.o * p_.mat(ls.wo);
            y.rowwise() += p_.row(ls.bo);
            lc.mask1 = dropout_mask(ctx, cfg_.dropout, 1 + 2 * l, T, D);
            apply_mask(y, lc.mask1);
            x += y;

            lc.f = layer_norm(x, p_.row(ls.ln2_g), p_.row(ls.ln2_b), &lc.ln2);
            lc.hpre = lc.f * p_.mat(ls.w1);
            lc.hpre.rowwise() += p_.row(ls.b1);
            lc.hact = lc.hpre.unaryExpr(&gelu);
            RowMatrix y2 = lc.hact * p_.mat(ls.w2);
            y2.rowwise() += p_.row(ls.b2);
            lc.mask2 = dropout_mask(ctx, cfg_.dropout, 2 + 2 * l, T, D);
            apply_mask(y2, lc.mask2);
            x += y2;
        }
        NormCache local_norm;
        RowMatrix h = layer_norm(x, p_.row(s_.lnf_g), p_.row(s_.lnf_b), cache ? &cache->lnf : &local_norm);
        if (cache != nullptr) cache->h = h;
        return h;
    }

    EmissionMatrix emit(const RowMatrix& h) const {
        if (h.cols() != static_cast<Eigen::Index>(cfg_.token_dim)) throw Error("cta: hidden width mismatch");
        RowMatrix s = h * p_.mat(s_.em_w).transpose();
        s.rowwise() += p_.row(s_.em_b);
        return s;
    }

    // Accumulates parameter gradients given dNLL/d emissions.
    void backward(const EmissionMatrix& dem, const ForwardCache& c, const CtaModel::Slots& s,
                  GradView g) const {
        const Eigen::Index T = dem.rows();
        const auto D = static_cast<Eigen::Index>(cfg_.token_dim);
        const RowMatrix ds = dem;
        g.mat(s.em_w) += ds.transpose() * c.h;
        g.row(s.em_b) += ds.colwise().sum();
        RowMatrix dh = ds * p_.mat(s.em_w);
        RowMatrix dx = layer_norm_backward(dh, c.lnf, p_.row(s.lnf_g), g.row(s.lnf_g), g.row(s.lnf_b));

        const std::size_t heads = cfg_.heads;
        const Eigen::Index dhd = D / static_cast<Eigen::Index>(heads);
        const double scale = 1.0 / std::sqrt(static_cast<double>(dhd));
        for (std::size_t li = cfg_.layers; li-- > 0;) {
            const auto& ls = s.layers[li];
            const LayerCache& lc = c.layers[li];

            RowMatrix dy2 = dx;
            apply_mask(dy2, lc.mask2);
            g.mat(ls.w2) += lc.hact.transpose() * dy2;
            g.row(ls.b2) += dy2.colwise().sum();
            RowMatrix dhpre = dy2 * p_.mat(ls.w2).transpose();
            dhpre.array() *= lc.hpre.unaryExpr(&gelu_grad).array();
            g.mat(ls.w1) += lc.f.transpose() * dhpre;
            g.row(ls.b1) += dhpre.colwise().sum();
            const RowMatrix df = dhpre * p_.mat(ls.w1).transpose();
            dx += layer_norm_backward(df, lc.ln2, p_.row(ls.ln2_g), g.row(ls.ln2_g), g.row(ls.ln2_b));

            RowMatrix dy = dx;
            apply_mask(dy, lc.mask1);
            g.mat(ls.wo) += lc.o.transpose() * dy;
            g.row(ls.bo) += dy.colwise().sum();
            const RowMatrix dout = dy * p_.mat(ls.wo).transpose();
            RowMatrix dq(T, D), dk(T, D), dv(T, D);
            for (std::size_t h = 0; h < heads; ++h) {
                const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dhd;
                const RowMatrix& pr = lc.probs[h];
                const RowMatrix dp = dout.middleCols(c0, dhd) * lc.v.middleCols(c0, dhd).transpose();
                dv.middleCols(c0, dhd) = pr.transpose() * dout.middleCols(c0, dhd);
                const Eigen::VectorXd rs = (dp.array() * pr.array()).rowwise().sum();
                const RowMatrix dsc = (pr.array() * (dp.array().colwise() - rs.array())).matrix() * scale;
                dq.middleCols(c0, dhd) = dsc * lc.k.middleCols(c0, dhd);
                dk.middleCols(c0, dhd) = dsc.transpose() * lc.q.middleCols(c0, dhd);
            }
            g.mat(ls.wq) += lc.a.transpose() * dq;
            g.row(ls.bq) += dq.colwise().sum();
            g.mat(ls.wk) += lc.a.transpose() * dk;
            g.row(ls.bk) += dk.colwise().sum();
            g.mat(ls.wv) += lc.a.transpose() * dv;
            g.row(ls.bv) += dv.colwise().sum();
            const RowMatrix da = dq * p_.mat(ls.wq).transpose() + dk * p_.mat(ls.wk).transpose() +
                                 dv * p_.mat(ls.wv).transpose();
            dx += layer_norm_backward(da, lc.ln1, p_.row(ls.ln1_g), g.row(ls.ln1_g), g.row(ls.ln1_b));
        }
        apply_mask(dx, c.mask0);

        auto demb = g.mat(s.char_emb);
        const auto cd = static_cast<Eigen::Index>(cfg_.char_dim);
        for (Eigen::Index t = 0; t < T; ++t) {
            const TokenCache& tc = c.tokens[static_cast<std::size_t>(t)];
            Eigen::Index col = 0;
            for (std::size_t k = 0; k < channels_.size(); ++k) {
                const auto ks = static_cast<Eigen::Index>(cfg_.kernel_sizes[k]);
                const auto w = p_.mat(s.conv_w[k]);
                auto gw = g.mat(s.conv_w[k]);
                auto gb = g.row(s.conv_b[k]);
                for (std::size_t ch = 0; ch < channels_[k]; ++ch) {
                    const int p = tc.argmax[k][ch];
                    const auto ci = static_cast<Eigen::Index>(ch);
                    if (p < 0) continue;
                    const double go = dx(t, col + ci);
                    gb(ci) += go;
                    for (Eigen::Index j = 0; j < ks; ++j) {
                        const auto id = tc.ids[static_cast<std::size_t>(p + j)];
                        const auto emb = p_.mat(s.char_emb).row(id);
                        gw.row(ci).segment(j * cd, cd) += go * emb;
                        demb.row(id) += go * w.row(ci).segment(j * cd, cd);
                    }
                }
                col += static_cast<Eigen::Index>(channels_[k]);
            }
        }
    }

private:
    RowMatrix positional(Eigen::Index T) const {
        const auto D = static_cast<Eigen::Index>(cfg_.token_dim);
        RowMatrix pe(T, D);
        for (Eigen::Index pos = 0; pos < T; ++pos) {
            for (Eigen::Index i = 0; i < D; ++i) {
                const double expo = static_cast<double>(2 * (i / 2)) / static_cast<double>(D);
                const double angle = static_cast<double>(pos) / std::pow(10000.0, expo);
                pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
            }
        }
        return pe;
    }

    const CtaConfig& cfg_;
    const CtaModel::Slots& s_;
    View p_;
    std::vector<std::size_t> channels_;
};

}  // namespace

// ---- config ---------------------------------------------------------------

CtaConfig CtaConfig::toy() {
    CtaConfig c;
    c.char_dim = 8;
    c.token_dim = 32;
    c.layers = 2;
    c.heads = 2;
    c.ffn_dim = 64;
    return c;
}

void CtaConfig::validate() const {
    if (char_vocab < 3) throw Error("cta config: char_vocab must be >= 3");
    if (char_dim == 0 || token_dim == 0 || heads == 0 || ffn_dim == 0 || max_chars == 0 || max_seq == 0) {
        throw Error("cta config: dimensions must be >= 1");
    }
    if (kernel_sizes.empty()) throw Error("cta config: no kernel sizes");
    for (const auto k : kernel_sizes) {
        if (k == 0 || k > max_chars) throw Error("cta config: kernel size must lie in [1, max_chars]");
    }
    if (token_dim < kernel_sizes.size()) throw Error("cta config: token_dim smaller than kernel count");
    if (token_dim % heads != 0) throw Error("cta config: token_dim must be divisible by heads");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("cta config: dropout must lie in [0, 1)");
}

std::vector<std::size_t> CtaConfig::channels() const {
    const std::size_t n = kernel_sizes.size();
    std::vector<std::size_t> ch(n, token_dim / n);
    const auto smallest = static_cast<std::size_t>(
        std::min_element(kernel_sizes.begin(), kernel_sizes.end()) - kernel_sizes.begin());
    ch[smallest] += token_dim % n;
    return ch;
}

std::vector<std::uint32_t> char_ids(const CtaConfig& cfg, std::string_view surface) {
    std::vector<std::uint32_t> ids(cfg.max_chars, static_cast<std::uint32_t>(kPadChar));
    const detail::Utf8Text text(surface);
    const std::size_t n = std::min(text.size(), cfg.max_chars);
    const std::uint64_t buckets = cfg.char_vocab - 2;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& sc = text[i];
        if (!sc.valid || sc.cp == 0) {
            ids[i] = static_cast<std::uint32_t>(kUnkChar);
            continue;
        }
        const auto bytes = text.bytes_of(i, i + 1);
        ids[i] = static_cast<std::uint32_t>(detail::fnv1a64(bytes.data(), bytes.size()) % buckets + 2);
    }
    return ids;
}

// ---- model ----------------------------------------------------------------

std::size_t CtaModel::add(std::string name, std::size_t rows, std::size_t cols) {
    const std::size_t offset = layout_.empty() ? 0 : layout_.back().offset + layout_.back().size();
    layout_.push_back({std::move(name), rows, cols, offset});
    return layout_.size() - 1;
}

CtaModel::CtaModel(CtaConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const std::size_t D = cfg_.token_dim;
    const std::size_t F = cfg_.ffn_dim;
    slots_.char_emb = add("char_embedding", cfg_.char_vocab, cfg_.char_dim);
    const auto ch = cfg_.channels();
    for (std::size_t k = 0; k < ch.size(); ++k) {
        const std::string base = "conv" + std::to_string(cfg_.kernel_sizes[k]);
        slots_.conv_w.push_back(add(base + ".weight", ch[k], cfg_.kernel_sizes[k] * cfg_.char_dim));
        slots_.conv_b.push_back(add(base + ".bias", 1, ch[k]));
    }
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        const std::string b = "layer" + std::to_string(l) + ".";
        LayerSlots s{};
        s.ln1_g = add(b + "ln1.gamma", 1, D);
        s.ln1_b = add(b + "ln1.beta", 1, D);
        s.wq = add(b + "attn.wq", D, D);
        s.bq = add(b + "attn.bq", 1, D);
        s.wk = add(b + "attn.wk", D, D);
        s.bk = add(b + "attn.bk", 1, D);
        s.wv = add(b + "attn.wv", D, D);
        s.bv = add(b + "attn.bv", 1, D);
        s.wo = add(b + "attn.wo", D, D);
        s.bo = add(b + "attn.bo", 1, D);
        s.ln2_g = add(b + "ln2.gamma", 1, D);
        s.ln2_b = add(b + "ln2.beta", 1, D);
        s.w1 = add(b + "ffn.w1", D, F);
        s.b1 = add(b + "ffn.b1", 1, F);
        s.w2 = add(b + "ffn.w2", F, D);
        s.b2 = add(b + "ffn.b2", 1, D);
        slots_.layers.push_back(s);
    }
    slots_.lnf_g = add("final_ln.gamma", 1, D);
    slots_.lnf_b = add("final_ln.beta", 1, D);
    slots_.em_w = add("emission.weight", kNumTags, D);
    slots_.em_b = add("emission.bias", 1, kNumTags);
    slots_.crf_trans = add("crf.transitions", kNumTags, kNumTags);
    slots_.crf_start = add("crf.start", 1, kNumTags);
    slots_.crf_end = add("crf.end", 1, kNumTags);
    params_.assign(layout_.back().offset + layout_.back().size(), 0.0);

    const auto O = static_cast<std::size_t>(Tag::O);
    const auto I = static_cast<std::size_t>(Tag::I);
    frozen_ = {layout_[slots_.crf_trans].offset + O * kNumTags + I, layout_[slots_.crf_start].offset + I};

    const auto fill = [&](std::size_t slot, double v) {
        const auto& p = layout_[slot];
        std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(p.offset), p.size(), v);
    };
    for (const auto& s : slots_.layers) {
        fill(s.ln1_g, 1.0);
        fill(s.ln2_g, 1.0);
    }
    fill(slots_.lnf_g, 1.0);
    normalize();
}

CtaModel CtaModel::initialized(CtaConfig cfg, std::uint64_t seed) {
    CtaModel m(std::move(cfg));
    detail::Rng rng(seed);
    const auto uniform_fill = [&](std::size_t slot, std::size_t fan_in, std::size_t fan_out) {
        const auto& p = m.layout_[slot];
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (std::size_t i = 0; i < p.size(); ++i) m.params_[p.offset + i] = rng.uniform(-a, a);
    };
    {
        const auto& p = m.layout_[m.slots_.char_emb];
        for (std::size_t i = 0; i < p.size(); ++i) m.params_[p.offset + i] = rng.normal();
    }
    const auto ch = m.cfg_.channels();
    for (std::size_t k = 0; k < ch.size(); ++k) {
        uniform_fill(m.slots_.conv_w[k], m.cfg_.kernel_sizes[k] * m.cfg_.char_dim, ch[k]);
    }
    const std::size_t D = m.cfg_.token_dim;
    const std::size_t F = m.cfg_.ffn_dim;
    for (const auto& s : m.slots_.layers) {
        uniform_fill(s.wq, D, D);
        uniform_fill(s.wk, D, D);
        uniform_fill(s.wv, D, D);
        uniform_fill(s.wo, D, D);
        uniform_fill(s.w1, D, F);
        uniform_fill(s.w2, F, D);
    }
    uniform_fill(m.slots_.em_w, D, kNumTags);
    m.normalize();
    return m;
}

const ParamInfo& CtaModel::param(std::string_view name) const {
    for (const auto& p : layout_) {
        if (p.name == name) return p;
    }
    throw Error("cta: no parameter named " + std::string(name));
}

bool CtaModel::is_frozen(std::size_t flat_index) const noexcept {
    return std::find(frozen_.begin(), frozen_.end(), flat_index) != frozen_.end();
}

void CtaModel::normalize() {
    for (auto& v : params_) v = static_cast<double>(to_f32(v));
    for (const auto i : frozen_) params_[i] = kForbiddenScore;
}

CrfScores CtaModel::crf() const {
    CrfScores s;
    const View v{&layout_, params_.data()};
    s.transitions = v.mat(slots_.crf_trans);
    s.start = v.row(slots_.crf_start).transpose();
    s.end = v.row(slots_.crf_end).transpose();
    return s;
}

void CtaModel::set_crf(const CrfScores& scores) {
    const GradView v{&layout_, params_.data()};
    v.mat(slots_.crf_trans) = scores.transitions;
    v.row(slots_.crf_start) = scores.start.transpose();
    v.row(slots_.crf_end) = scores.end.transpose();
    normalize();
}

// ---- inference ------------------------------------------------------------

Eigen::VectorXd encode_token_chars(const CtaModel& model, std::string_view surface) {
    return Net(model).encode_token(surface, nullptr);
}

std::uint64_t activation_pattern(const CtaModel& model, const std::vector<Token>& tokens) {
    ForwardCache cache;
    (void)Net(model).encode_tokens(tokens, &cache);
    std::uint64_t h = 0x9E3779B97F4A7C15ULL;
    for (const auto& tc : cache.tokens) {
        for (const auto& per_kernel : tc.argmax) {
            for (const int a : per_kernel) h = detail::hash_key(h, static_cast<std::uint64_t>(a + 1));
        }
    }
    return h;
}

bool starts_word(const std::vector<Token>& tokens, std::size_t t) {
    return t == 0 || tokens[t - 1].end < tokens[t].start;
}

RowMatrix encode_tokens(const CtaModel& model, const std::vector<Token>& tokens) {
    return Net(model).encode_tokens(tokens, nullptr);
}

RowMatrix contextualize(const CtaModel& model, const RowMatrix& token_vectors, const DropoutContext& dropout) {
    return Net(model).contextualize(token_vectors, dropout, nullptr);
}

EmissionMatrix emissions(const CtaModel& model, const RowMatrix& contextualized) {
    return Net(model).emit(contextualized);
}

EmissionMatrix forward(const CtaModel& model, const std::vector<Token>& tokens, const DropoutContext& dropout) {
    const Net net(model);
    return net.emit(net.contextualize(net.encode_tokens(tokens, nullptr), dropout, nullptr));
}

double crf_nll(const CtaModel& model, const EmissionMatrix& em, const std::vector<Tag>& gold) {
    return crf_nll(em, model.crf(), gold);
}

std::vector<Tag> viterbi_decode(const CtaModel& model, const EmissionMatrix& em) {
    return viterbi_decode(em, model.crf());
}

GroupParse predict_spans(const CtaModel& model, const std::vector<Token>& tokens) {
    if (tokens.empty()) return {};
    return parse_tag_groups(tokens, viterbi_decode(model, forward(model, tokens)));
}

double SpanScores::precision() const noexcept {
    const auto d = true_positives + false_positives;
    return d == 0 ? 1.0 : static_cast<double>(true_positives) / static_cast<double>(d);
}

double SpanScores::recall() const noexcept {
    const auto d = true_positives + false_negatives;
    return d == 0 ? 1.0 : static_cast<double>(true_positives) / static_cast<double>(d);
}

double SpanScores::f1() const noexcept {
    const double p = precision();
    const double r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

SpanScores& SpanScores::operator+=(const SpanScores& o) noexcept {
    true_positives += o.true_positives;
    false_positives += o.false_positives;
    false_negatives += o.false_negatives;
    dropped_groups += o.dropped_groups;
    return *this;
}

SpanScores score_spans(const std::vector<ColorSpan>& predicted, const std::vector<ColorSpan>& reference) {
    SpanScores s;
    std::vector<char> used(reference.size(), 0);
    for (const auto& p : predicted) {
        bool hit = false;
        for (std::size_t i = 0; i < reference.size(); ++i) {
            const auto& r = reference[i];
            if (!used[i] && r.start == p.start && r.end == p.end && r.parsed == p.parsed) {
                used[i] = 1;
                hit = true;
                break;
            }
        }
        ++(hit ? s.true_positives : s.false_positives);
    }
    s.false_negatives = reference.size() - s.true_positives;
    return s;
}

SpanScores evaluate_tagger(const CtaModel& model, std::span<const TaggedSequence> records,
                           parallel::Backend backend) {
    std::vector<SpanScores> per(records.size());
    parallel::for_each_index(
        records.size(),
        [&](std::size_t i) {
            const auto pred = predict_spans(model, records[i].tokens);
            per[i] = score_spans(pred.spans, find_color_spans(records[i].text));
            per[i].dropped_groups = pred.dropped;
        },
        backend);
    SpanScores total;
    for (const auto& s : per) total += s;
    return total;
}

// ---- training -------------------------------------------------------------

double loss_and_gradient(const CtaModel& model, const TaggedSequence& example, std::span<double> grad,
                         const DropoutContext& dropout) {
    if (grad.size() != model.parameter_count()) throw Error("cta: gradient buffer size mismatch");
    if (example.tokens.size() != example.tags.size()) throw Error("cta: tokens and tags differ in length");
    const Net net(model);
    ForwardCache cache;
    const RowMatrix tv = net.encode_tokens(example.tokens, &cache);
    const RowMatrix h = net.contextualize(tv, dropout, &cache);
    const EmissionMatrix em = net.emit(h);
    CrfGradient cg;
    const CrfScores crf = model.crf();
    const double nll = crf_nll_gradient(em, crf, example.tags, cg);

    const auto& s = model.slots();
    const GradView g{&model.layout(), grad.data()};
    g.mat(s.crf_trans) += cg.transitions;
    g.row(s.crf_start) += cg.start.transpose();
    g.row(s.crf_end) += cg.end.transpose();
    net.backward(cg.emissions, cache, s, g);
    for (const auto i : model.frozen_indices()) grad[i] = 0.0;
    return nll;
}

double batch_gradient(const CtaModel& model, std::span<const TaggedSequence> batch, std::span<double> grad,
                      const DropoutContext& dropout, parallel::Backend backend) {
    if (batch.empty()) throw Error("cta: empty batch");
    const std::size_t n = batch.size();
    const std::size_t chunks = std::min(n, kGradientChunks);
    const std::size_t P = model.parameter_count();
    std::vector<std::vector<double>> partial(chunks);
    std::vector<double> losses(chunks, 0.0);
    parallel::for_each_index(
        chunks,
        [&](std::size_t c) {
            partial[c].assign(P, 0.0);
            const std::size_t lo = c * n / chunks;
            const std::size_t hi = (c + 1) * n / chunks;
            for (std::size_t i = lo; i < hi; ++i) {
                DropoutContext ctx = dropout;
                ctx.sample = i;
                losses[c] += loss_and_gradient(model, batch[i], partial[c], ctx);
            }
        },
        backend);
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
        loss += losses[c];
        for (std::size_t j = 0; j < P; ++j) grad[j] += partial[c][j];
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& v : grad) v *= inv;
    return loss * inv;
}

double train_step(CtaModel& model, std::span<const TaggedSequence> batch, AdamWState& state,
                  const TrainStepOptions& opt) {
    std::vector<double> grad(model.parameter_count());
    DropoutContext ctx;
    ctx.training = true;
    ctx.seed = opt.seed;
    ctx.step = state.t;
    const double loss = batch_gradient(model, batch, grad, ctx, opt.backend);
    if (!std::isfinite(loss)) throw Error("cta: non-finite loss, step aborted");
    for (const double g : grad) {
        if (!std::isfinite(g)) throw Error("cta: non-finite gradient, step aborted");
    }
    adamw_update(model.parameters(), grad, state, opt.adam, model.frozen_indices());
    model.normalize();
    return loss;
}

std::vector<EpochLog> train_tagger(CtaModel& model, const std::vector<TaggedSequence>& data,
                                   const TaggerTrainOptions& opt) {
    if (data.empty()) throw Error("cta: empty training set");
    if (opt.batch_size == 0) throw Error("cta: batch size must be >= 1");
    AdamWState state;
    std::vector<EpochLog> log;
    std::vector<std::size_t> order(data.size());
    std::vector<TaggedSequence> batch;
    for (std::size_t e = 0; e < opt.epochs; ++e) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        detail::Rng rng(detail::hash_key(opt.step.seed, 0x5348554646ULL, e));
        rng.shuffle(order.begin(), order.end());
        double total = 0.0;
        std::size_t steps = 0;
        for (std::size_t i = 0; i < order.size(); i += opt.batch_size) {
            batch.clear();
            for (std::size_t j = i; j < std::min(order.size(), i + opt.batch_size); ++j) {
                batch.push_back(data[order[j]]);
            }
            total += train_step(model, batch, state, opt.step);
            ++steps;
        }
        log.push_back({e, total / static_cast<double>(steps)});
    }
    return log;
}

}  // namespace numcolor
