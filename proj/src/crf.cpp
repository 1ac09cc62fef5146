#include "numcolor/crf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "numcolor/error.hpp"

namespace numcolor {

namespace {

constexpr std::size_t K = kNumTags;

double log_sum_exp(const double* v, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, v[i]);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
    return m + std::log(s);
}

std::size_t idx(Tag t) { return static_cast<std::size_t>(t); }

void check_gold(const EmissionMatrix& em, const std::vector<Tag>& gold) {
    if (em.rows() == 0) throw Error("crf: empty sequence");
    if (static_cast<std::size_t>(em.rows()) != gold.size()) throw Error("crf: length mismatch");
    if (!is_valid_bio(gold)) throw Error("crf: gold tags are not valid BIO");
}

// alpha(t, j): log-score of all prefixes ending in tag j at t.
Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> forward_table(const EmissionMatrix& em,
                                                                        const CrfScores& crf) {
    const Eigen::Index T = em.rows();
    Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> alpha(T, 3);
    for (std::size_t j = 0; j < K; ++j) alpha(0, j) = crf.start(j) + em(0, j);
    double buf[K];
    for (Eigen::Index t = 1; t < T; ++t) {
        for (std::size_t j = 0; j < K; ++j) {
            for (std::size_t i = 0; i < K; ++i) buf[i] = alpha(t - 1, i) + crf.transitions(i, j);
            alpha(t, j) = log_sum_exp(buf, K) + em(t, j);
        }
    }
    return alpha;
}

}  // namespace

CrfScores CrfScores::constrained() {
    CrfScores s;
    s.apply_constraints();
    return s;
}

void CrfScores::apply_constraints() noexcept {
    transitions(idx(Tag::O), idx(Tag::I)) = kForbiddenScore;
    start(idx(Tag::I)) = kForbiddenScore;
}

double crf_path_score(const EmissionMatrix& em, const CrfScores& crf, const std::vector<Tag>& tags) {
    if (static_cast<std::size_t>(em.rows()) != tags.size() || tags.empty()) {
        throw Error("crf: length mismatch");
    }
    double s = crf.start(idx(tags[0])) + em(0, idx(tags[0]));
    for (std::size_t t = 1; t < tags.size(); ++t) {
        s += crf.transitions(idx(tags[t - 1]), idx(tags[t])) + em(static_cast<Eigen::Index>(t), idx(tags[t]));
    }
    return s + crf.end(idx(tags.back()));
}

double crf_log_partition(const EmissionMatrix& em, const CrfScores& crf) {
    if (em.rows() == 0) throw Error("crf: empty sequence");
    const auto alpha = forward_table(em, crf);
    double buf[K];
    for (std::size_t j = 0; j < K; ++j) buf[j] = alpha(em.rows() - 1, j) + crf.end(j);
    return log_sum_exp(buf, K);
}

double crf_nll(const EmissionMatrix& em, const CrfScores& crf, const std::vector<Tag>& gold) {
    check_gold(em, gold);
    return std::max(0.0, crf_log_partition(em, crf) - crf_path_score(em, crf, gold));
}

double crf_nll_gradient(const EmissionMatrix& em, const CrfScores& crf, const std::vector<Tag>& gold,
                        CrfGradient& grad) {
    check_gold(em, gold);
    const Eigen::Index T = em.rows();
    const auto alpha = forward_table(em, crf);

    Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> beta(T, 3);
    for (std::size_t j = 0; j < K; ++j) beta(T - 1, j) = crf.end(j);
    double buf[K];
    for (Eigen::Index t = T - 2; t >= 0; --t) {
        for (std::size_t i = 0; i < K; ++i) {
            for (std::size_t j = 0; j < K; ++j) {
                buf[j] = crf.transitions(i, j) + em(t + 1, j) + beta(t + 1, j);
            }
            beta(t, i) = log_sum_exp(buf, K);
        }
    }
    for (std::size_t j = 0; j < K; ++j) buf[j] = alpha(T - 1, j) + crf.end(j);
    const double log_z = log_sum_exp(buf, K);

    grad.emissions.setZero(T, 3);
    grad.transitions.setZero();
    grad.start.setZero();
    grad.end.setZero();
    for (Eigen::Index t = 0; t < T; ++t) {
        for (std::size_t j = 0; j < K; ++j) {
            grad.emissions(t, j) = std::exp(alpha(t, j) + beta(t, j) - log_z);
        }
    }
    for (Eigen::Index t = 0; t + 1 < T; ++t) {
        for (std::size_t i = 0; i < K; ++i) {
            for (std::size_t j = 0; j < K; ++j) {
                grad.transitions(i, j) += std::exp(alpha(t, i) + crf.transitions(i, j) +
                                                   em(t + 1, j) + beta(t + 1, j) - log_z);
            }
        }
    }
    grad.start = grad.emissions.row(0).transpose();
    grad.end = grad.emissions.row(T - 1).transpose();

    for (Eigen::Index t = 0; t < T; ++t) grad.emissions(t, idx(gold[t])) -= 1.0;
    for (Eigen::Index t = 1; t < T; ++t) grad.transitions(idx(gold[t - 1]), idx(gold[t])) -= 1.0;
    grad.start(idx(gold.front())) -= 1.0;
    grad.end(idx(gold.back())) -= 1.0;

    grad.transitions(idx(Tag::O), idx(Tag::I)) = 0.0;
    grad.start(idx(Tag::I)) = 0.0;

    return std::max(0.0, log_z - crf_path_score(em, crf, gold));
}

std::vector<Tag> viterbi_decode(const EmissionMatrix& em, const CrfScores& crf) {
    const Eigen::Index T = em.rows();
    if (T == 0) return {};
    std::vector<std::array<std::uint8_t, K>> back(static_cast<std::size_t>(T));
    double score[K];
    double next[K];
    for (std::size_t j = 0; j < K; ++j) score[j] = crf.start(j) + em(0, j);
    for (Eigen::Index t = 1; t < T; ++t) {
        for (std::size_t j = 0; j < K; ++j) {
            std::size_t best_i = 0;
            double best = score[0] + crf.transitions(0, j);
            for (std::size_t i = 1; i < K; ++i) {
                const double s = score[i] + crf.transitions(i, j);
                if (s > best) {
                    best = s;
                    best_i = i;
                }
            }
            next[j] = best + em(t, j);
            back[static_cast<std::size_t>(t)][j] = static_cast<std::uint8_t>(best_i);
        }
        std::copy(next, next + K, score);
    }
    std::size_t last = 0;
    double best = score[0] + crf.end(0);
    for (std::size_t j = 1; j < K; ++j) {
        if (score[j] + crf.end(j) > best) {
            best = score[j] + crf.end(j);
            last = j;
        }
    }
    std::vector<Tag> path(static_cast<std::size_t>(T));
    path.back() = static_cast<Tag>(last);
    for (Eigen::Index t = T - 1; t > 0; --t) {
        last = back[static_cast<std::size_t>(t)][last];
        path[static_cast<std::size_t>(t - 1)] = static_cast<Tag>(last);
    }
    return path;
}

}  // namespace numcolor
