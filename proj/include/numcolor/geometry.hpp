#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "numcolor/codebook.hpp"
#include "numcolor/matrix.hpp"
#include "numcolor/parallel.hpp"

namespace numcolor {

struct LabPair {
    LabColor first;
    LabColor second;

    friend bool operator==(const LabPair&, const LabPair&) = default;
};

/// psi maps Lab displacements into embedding space (d x 3).
struct GeometryParams {
    RowMatrix psi;
    double lambda_d = 0.3;
    double lambda_i = 0.2;

    /// psi with N(0, scale^2) entries.
    static GeometryParams random(std::size_t dim, std::uint64_t seed, double scale = 0.05);
};

/// Reconstruction stand-in: targets = map * c + fixed noise for a seeded set
/// of in-gamut query colors.
struct SurrogateTask {
    std::vector<LabColor> queries;
    RowMatrix targets;  ///< n x d
    RowMatrix map;      ///< d x 3
};

/// Queries are drawn from uniform random 8-bit colors; map entries are
/// N(0, 1) / 50 and noise N(0, noise^2).
[[nodiscard]] SurrogateTask make_surrogate_task(std::size_t dim, std::size_t samples, std::uint64_t seed,
                                                double noise = 0.05);

/// Fresh queries and noise for the same hidden map.
[[nodiscard]] SurrogateTask held_out_task(const SurrogateTask& task, std::size_t samples, std::uint64_t seed,
                                          double noise = 0.05);

struct LossBreakdown {
    double total = 0.0;
    double surr = 0.0;
    double dir = 0.0;
    double interp = 0.0;
};

inline constexpr double kDegenerateNorm = 1e-12;

/// Any map from Lab to embedding space; the book-based overloads use
/// soft kNN interpolation.
using PhiFn = std::function<Eigen::VectorXd(const LabColor&)>;

[[nodiscard]] PhiFn book_phi(const ColorBook& book);

[[nodiscard]] double directional_loss(const PhiFn& phi, const RowMatrix& psi,
                                      std::span<const LabPair> pairs);
[[nodiscard]] double interpolation_loss(const PhiFn& phi, std::span<const LabPair> pairs);

/// Mean of 1 - cos(phi(ci) - phi(cj), psi (ci - cj)); a pair with either
/// vector shorter than 1e-12 scores 1.
[[nodiscard]] double directional_loss(const ColorBook& book, const GeometryParams& params,
                                      std::span<const LabPair> pairs);

/// Mean squared distance between phi of the Lab midpoint and the midpoint of phi.
[[nodiscard]] double interpolation_loss(const ColorBook& book, std::span<const LabPair> pairs);

/// Mean ||phi(c) - target||^2 / d over the task.
[[nodiscard]] double surrogate_loss(const ColorBook& book, const SurrogateTask& task);

[[nodiscard]] LossBreakdown total_loss(const ColorBook& book, const GeometryParams& params,
                                       const SurrogateTask& task, std::span<const LabPair> pairs);

struct GeometryGradient {
    std::vector<double> embeddings;  ///< K x d, row-major
    RowMatrix psi;
};

/// Losses for an explicit K x d embedding matrix (neighborhoods still come
/// from the book's anchors, k and tau). Fills `grad` when non-null.
LossBreakdown geometry_loss(const ColorBook& book, std::span<const double> embeddings,
                            const GeometryParams& params, const SurrogateTask& task,
                            std::span<const LabPair> pairs, GeometryGradient* grad,
                            parallel::Backend backend = parallel::default_backend());

/// Uniform anchor pairs whose Lab distance lies in [min_dist, max_dist].
[[nodiscard]] std::vector<LabPair> sample_pairs(const ColorBook& book, std::size_t n, std::uint64_t seed,
                                                double min_dist = 5.0, double max_dist = 40.0);

struct ColorbookTrainOptions {
    std::size_t steps = 200;
    double lr = 1e-2;
    double weight_decay = 0.01;
    std::size_t pairs_per_step = 128;
    std::uint64_t seed = 0;
    parallel::Backend backend = parallel::default_backend();
};

struct ColorbookLogRow {
    std::size_t step = 0;
    LossBreakdown loss;
};

/// AdamW on the embeddings and psi. Anchors, tau and k are left alone.
std::vector<ColorbookLogRow> train_colorbook(ColorBook& book, GeometryParams& params,
                                             const SurrogateTask& task,
                                             const ColorbookTrainOptions& opt);

/// CSV with header `step,total,surr,dir,interp`.
void write_training_log(std::ostream& os, const std::vector<ColorbookLogRow>& log);

}  // namespace numcolor
