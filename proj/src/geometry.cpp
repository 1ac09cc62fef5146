#include "numcolor/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "numcolor/detail/random.hpp"
#include "numcolor/error.hpp"
#include "numcolor/optim.hpp"

namespace numcolor {

namespace {

using Vec = Eigen::VectorXd;
using ConstVecMap = Eigen::Map<const Vec>;
using VecMap = Eigen::Map<Vec>;

Eigen::Vector3d lab_vec(const LabColor& c) { return {c.L, c.a, c.b}; }

LabColor midpoint(const LabPair& p) {
    return {(p.first.L + p.second.L) / 2.0, (p.first.a + p.second.a) / 2.0, (p.first.b + p.second.b) / 2.0};
}

Vec phi_of(const NeighborQueryResult& nb, const double* emb, std::size_t d) {
    Vec v = Vec::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < nb.indices.size(); ++j) {
        v += nb.weights[j] * ConstVecMap(emb + std::size_t{nb.indices[j]} * d, static_cast<Eigen::Index>(d));
    }
    return v;
}

void scatter(const NeighborQueryResult& nb, const Vec& g, double scale, double* grad, std::size_t d) {
    for (std::size_t j = 0; j < nb.indices.size(); ++j) {
        VecMap(grad + std::size_t{nb.indices[j]} * d, static_cast<Eigen::Index>(d)) += (scale * nb.weights[j]) * g;
    }
}

double cosine_term(const Vec& u, const Vec& v, double& cos_out) {
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu < kDegenerateNorm || nv < kDegenerateNorm) return -1.0;
    cos_out = u.dot(v) / (nu * nv);
    return nu * nv;
}

void check_psi(const RowMatrix& psi, std::size_t d) {
    if (psi.rows() != static_cast<Eigen::Index>(d) || psi.cols() != 3) {
        throw Error("geometry: psi must be d x 3");
    }
}

std::vector<LabColor> pair_points(std::span<const LabPair> pairs) {
    std::vector<LabColor> pts;
    pts.reserve(pairs.size() * 3);
    for (const auto& p : pairs) {
        pts.push_back(p.first);
        pts.push_back(p.second);
        pts.push_back(midpoint(p));
    }
    return pts;
}

void fill_queries(SurrogateTask& t, std::size_t samples, detail::Rng& rng, double noise) {
    const auto dim = static_cast<std::size_t>(t.map.rows());
    t.queries.reserve(samples);
    t.targets.resize(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(dim));
    for (std::size_t s = 0; s < samples; ++s) {
        const Rgb8 c{static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
                     static_cast<std::uint8_t>(rng.below(256))};
        t.queries.push_back(srgb_to_lab(c));
    }
    for (std::size_t s = 0; s < samples; ++s) {
        const Eigen::VectorXd y = t.map * lab_vec(t.queries[s]);
        for (std::size_t j = 0; j < dim; ++j) {
            t.targets(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) =
                y(static_cast<Eigen::Index>(j)) + noise * rng.normal();
        }
    }
}

// Loss and gradient given precomputed neighborhoods.
LossBreakdown evaluate(const std::vector<NeighborQueryResult>& task_nb, const RowMatrix& targets,
                       std::span<const LabPair> pairs, const std::vector<NeighborQueryResult>& pair_nb,
                       const double* emb, std::size_t d, const GeometryParams& params,
                       GeometryGradient* grad) {
    LossBreakdown out;
    double* ge = grad ? grad->embeddings.data() : nullptr;
    const auto S = task_nb.size();
    if (S > 0) {
        const double scale = 1.0 / (static_cast<double>(S) * static_cast<double>(d));
        Vec r(static_cast<Eigen::Index>(d));
        for (std::size_t s = 0; s < S; ++s) {
            r = -targets.row(static_cast<Eigen::Index>(s)).transpose();
            const auto& nb = task_nb[s];
            for (std::size_t j = 0; j < nb.indices.size(); ++j) {
                r += nb.weights[j] * ConstVecMap(emb + std::size_t{nb.indices[j]} * d, static_cast<Eigen::Index>(d));
            }
            out.surr += r.squaredNorm();
            if (ge) scatter(task_nb[s], r, 2.0 * scale, ge, d);
        }
        out.surr *= scale;
    }
    const auto P = pairs.size();
    if (P > 0) {
        const double inv = 1.0 / static_cast<double>(P);
        for (std::size_t p = 0; p < P; ++p) {
            const auto& nb_i = pair_nb[3 * p];
            const auto& nb_j = pair_nb[3 * p + 1];
            const auto& nb_m = pair_nb[3 * p + 2];
            const Vec fi = phi_of(nb_i, emb, d);
            const Vec fj = phi_of(nb_j, emb, d);
            const Vec fm = phi_of(nb_m, emb, d);

            const Eigen::Vector3d dc = lab_vec(pairs[p].first) - lab_vec(pairs[p].second);
            const Vec u = fi - fj;
            const Vec v = params.psi * dc;
            double cos = 0.0;
            const double denom = cosine_term(u, v, cos);
            if (denom < 0.0) {
                out.dir += 1.0;
            } else {
                out.dir += 1.0 - std::clamp(cos, -1.0, 1.0);
                if (grad) {
                    const double c = params.lambda_d * inv;
                    const Vec du = -c * (v / denom - cos * u / u.squaredNorm());
                    const Vec dv = -c * (u / denom - cos * v / v.squaredNorm());
                    scatter(nb_i, du, 1.0, ge, d);
                    scatter(nb_j, du, -1.0, ge, d);
                    grad->psi += dv * dc.transpose();
                }
            }

            const Vec r = fm - 0.5 * (fi + fj);
            out.interp += r.squaredNorm();
            if (grad) {
                const Vec g = (2.0 * params.lambda_i * inv) * r;
                scatter(nb_m, g, 1.0, ge, d);
                scatter(nb_i, g, -0.5, ge, d);
                scatter(nb_j, g, -0.5, ge, d);
            }
        }
        out.dir *= inv;
        out.interp *= inv;
    }
    out.total = out.surr + params.lambda_d * out.dir + params.lambda_i * out.interp;
    return out;
}

}  // namespace

GeometryParams GeometryParams::random(std::size_t dim, std::uint64_t seed, double scale) {
    detail::Rng rng(seed);
    GeometryParams p;
    p.psi.resize(static_cast<Eigen::Index>(dim), 3);
    for (Eigen::Index i = 0; i < p.psi.size(); ++i) p.psi.data()[i] = scale * rng.normal();
    return p;
}

SurrogateTask make_surrogate_task(std::size_t dim, std::size_t samples, std::uint64_t seed, double noise) {
    if (dim == 0) throw Error("surrogate task: dim must be >= 1");
    detail::Rng rng(detail::hash_key(seed, 0x5355525247ULL));
    SurrogateTask t;
    t.map.resize(static_cast<Eigen::Index>(dim), 3);
    for (Eigen::Index i = 0; i < t.map.size(); ++i) t.map.data()[i] = rng.normal() / 50.0;
    fill_queries(t, samples, rng, noise);
    return t;
}

SurrogateTask held_out_task(const SurrogateTask& task, std::size_t samples, std::uint64_t seed, double noise) {
    detail::Rng rng(detail::hash_key(seed, 0x484F4C44ULL));
    SurrogateTask t;
    t.map = task.map;
    fill_queries(t, samples, rng, noise);
    return t;
}

PhiFn book_phi(const ColorBook& book) {
    return [&book](const LabColor& c) {
        const auto v = interpolate(book, c);
        return Eigen::VectorXd(ConstVecMap(v.data(), static_cast<Eigen::Index>(v.size())));
    };
}

double directional_loss(const PhiFn& phi, const RowMatrix& psi, std::span<const LabPair> pairs) {
    if (pairs.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& p : pairs) {
        const Vec u = phi(p.first) - phi(p.second);
        const Vec v = psi * (lab_vec(p.first) - lab_vec(p.second));
        double cos = 0.0;
        sum += cosine_term(u, v, cos) < 0.0 ? 1.0 : 1.0 - std::clamp(cos, -1.0, 1.0);
    }
    return sum / static_cast<double>(pairs.size());
}

double interpolation_loss(const PhiFn& phi, std::span<const LabPair> pairs) {
    if (pairs.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& p : pairs) sum += (phi(midpoint(p)) - 0.5 * (phi(p.first) + phi(p.second))).squaredNorm();
    return sum / static_cast<double>(pairs.size());
}

double directional_loss(const ColorBook& book, const GeometryParams& params, std::span<const LabPair> pairs) {
    check_psi(params.psi, book.dim());
    return directional_loss(book_phi(book), params.psi, pairs);
}

double interpolation_loss(const ColorBook& book, std::span<const LabPair> pairs) {
    return interpolation_loss(book_phi(book), pairs);
}

double surrogate_loss(const ColorBook& book, const SurrogateTask& task) {
    GeometryParams none;
    none.psi = RowMatrix::Zero(static_cast<Eigen::Index>(book.dim()), 3);
    const std::vector<double> emb(book.embeddings().begin(), book.embeddings().end());
    return geometry_loss(book, emb, none, task, {}, nullptr).surr;
}

LossBreakdown total_loss(const ColorBook& book, const GeometryParams& params, const SurrogateTask& task,
                         std::span<const LabPair> pairs) {
    const std::vector<double> emb(book.embeddings().begin(), book.embeddings().end());
    return geometry_loss(book, emb, params, task, pairs, nullptr);
}

LossBreakdown geometry_loss(const ColorBook& book, std::span<const double> embeddings,
                            const GeometryParams& params, const SurrogateTask& task,
                            std::span<const LabPair> pairs, GeometryGradient* grad,
                            parallel::Backend backend) {
    const std::size_t d = book.dim();
    if (embeddings.size() != book.size() * d) throw Error("geometry: embedding matrix shape mismatch");
    if (task.targets.rows() != static_cast<Eigen::Index>(task.queries.size()) ||
        (!task.queries.empty() && task.targets.cols() != static_cast<Eigen::Index>(d))) {
        throw Error("geometry: surrogate targets shape mismatch");
    }
    check_psi(params.psi, d);
    if (params.lambda_d < 0.0 || params.lambda_i < 0.0) throw Error("geometry: loss weights must be >= 0");
    const auto task_nb = query_batch(book, task.queries, book.k_default(), book.tau(), backend);
    const auto pts = pair_points(pairs);
    const auto pair_nb = query_batch(book, pts, book.k_default(), book.tau(), backend);
    if (grad) {
        grad->embeddings.assign(embeddings.size(), 0.0);
        grad->psi = RowMatrix::Zero(params.psi.rows(), 3);
    }
    return evaluate(task_nb, task.targets, pairs, pair_nb, embeddings.data(), d, params, grad);
}

std::vector<LabPair> sample_pairs(const ColorBook& book, std::size_t n, std::uint64_t seed, double min_dist,
                                  double max_dist) {
    if (book.size() < 2 && n > 0) throw Error("sample_pairs: need at least two anchors");
    detail::Rng rng(detail::hash_key(seed, 0x50414952ULL));
    const auto& a = book.anchors();
    std::vector<LabPair> out;
    out.reserve(n);
    const std::size_t budget = 1000 * (n + 1);
    std::size_t tries = 0;
    while (out.size() < n) {
        if (++tries > budget) throw Error("sample_pairs: no anchor pairs in the distance band");
        const auto i = rng.below(a.size());
        const auto j = rng.below(a.size());
        if (i == j) continue;
        const double dist = (lab_vec(a[i]) - lab_vec(a[j])).norm();
        if (dist >= min_dist && dist <= max_dist) out.push_back({a[i], a[j]});
    }
    return out;
}

std::vector<ColorbookLogRow> train_colorbook(ColorBook& book, GeometryParams& params, const SurrogateTask& task,
                                             const ColorbookTrainOptions& opt) {
    const std::size_t d = book.dim();
    check_psi(params.psi, d);
    std::vector<double> emb(book.embeddings().begin(), book.embeddings().end());
    const auto task_nb = query_batch(book, task.queries, book.k_default(), book.tau(), opt.backend);
    AdamWOptions adam;
    adam.lr = opt.lr;
    adam.weight_decay = opt.weight_decay;
    AdamWState state_e;
    AdamWState state_psi;
    GeometryGradient grad;
    std::vector<ColorbookLogRow> log;
    log.reserve(opt.steps);
    for (std::size_t step = 0; step < opt.steps; ++step) {
        const auto pairs = sample_pairs(book, opt.pairs_per_step, detail::hash_key(opt.seed, step));
        const auto pair_nb =
            query_batch(book, pair_points(pairs), book.k_default(), book.tau(), opt.backend);
        grad.embeddings.assign(emb.size(), 0.0);
        grad.psi = RowMatrix::Zero(params.psi.rows(), 3);
        const auto loss = evaluate(task_nb, task.targets, pairs, pair_nb, emb.data(), d, params, &grad);
        if (!std::isfinite(loss.total)) throw Error("train_colorbook: non-finite loss at step " + std::to_string(step));
        log.push_back({step, loss});
        adamw_update(emb, grad.embeddings, state_e, adam);
        adamw_update(std::span<double>(params.psi.data(), static_cast<std::size_t>(params.psi.size())),
                     std::span<const double>(grad.psi.data(), static_cast<std::size_t>(grad.psi.size())),
                     state_psi, adam);
    }
    auto out = book.embeddings();
    for (std::size_t i = 0; i < emb.size(); ++i) out[i] = static_cast<float>(emb[i]);
    return log;
}

void write_training_log(std::ostream& os, const std::vector<ColorbookLogRow>& log) {
    os << "step,total,surr,dir,interp\n";
    const auto old = os.precision(17);
    for (const auto& r : log) {
        os << r.step << ',' << r.loss.total << ',' << r.loss.surr << ',' << r.loss.dir << ',' << r.loss.interp
           << '\n';
    }
    os.precision(old);
}

}  // namespace numcolor
