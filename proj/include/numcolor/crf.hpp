#pragma once

#include <Eigen/Core>
#include <vector>

#include "numcolor/span_detector.hpp"

namespace numcolor {

/// Per-token tag scores, T x 3 in tag order B, I, O.
using EmissionMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Score assigned to forbidden moves (O -> I, and starting with I).
inline constexpr double kForbiddenScore = -10000.0;

/// Linear-chain CRF scores over {B, I, O}. `transitions(i, j)` scores i -> j.
struct CrfScores {
    Eigen::Matrix3d transitions = Eigen::Matrix3d::Zero();
    Eigen::Vector3d start = Eigen::Vector3d::Zero();
    Eigen::Vector3d end = Eigen::Vector3d::Zero();

    /// Zero scores with the hard BIO constraints installed.
    static CrfScores constrained();
    void apply_constraints() noexcept;
};

[[nodiscard]] constexpr bool is_constrained_transition(std::size_t from, std::size_t to) noexcept {
    return from == static_cast<std::size_t>(Tag::O) && to == static_cast<std::size_t>(Tag::I);
}
[[nodiscard]] constexpr bool is_constrained_start(std::size_t tag) noexcept {
    return tag == static_cast<std::size_t>(Tag::I);
}

[[nodiscard]] double crf_path_score(const EmissionMatrix& em, const CrfScores& crf,
                                    const std::vector<Tag>& tags);

/// log sum over all 3^T tag paths of exp(path score), by the forward algorithm.
[[nodiscard]] double crf_log_partition(const EmissionMatrix& em, const CrfScores& crf);

/// -log P(gold | emissions). Throws on an invalid BIO sequence or T = 0.
[[nodiscard]] double crf_nll(const EmissionMatrix& em, const CrfScores& crf,
                             const std::vector<Tag>& gold);

struct CrfGradient {
    EmissionMatrix emissions;
    Eigen::Matrix3d transitions = Eigen::Matrix3d::Zero();
    Eigen::Vector3d start = Eigen::Vector3d::Zero();
    Eigen::Vector3d end = Eigen::Vector3d::Zero();
};

/// NLL plus its gradient from forward-backward marginals. Constrained
/// entries get zero gradient.
double crf_nll_gradient(const EmissionMatrix& em, const CrfScores& crf, const std::vector<Tag>& gold,
                        CrfGradient& grad);

/// Highest-scoring path; ties go to the lower tag index at every step.
[[nodiscard]] std::vector<Tag> viterbi_decode(const EmissionMatrix& em, const CrfScores& crf);

}  // namespace numcolor
