#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "numcolor/colorspace.hpp"
#include "numcolor/parallel.hpp"

namespace numcolor::kernels {

/// Row-major m x k neighbor table produced by the exact kNN kernels.
struct KnnTable {
    std::size_t rows = 0;
    std::size_t k = 0;
    std::vector<std::uint32_t> index;
    std::vector<double> distance;  ///< Euclidean, non-decreasing within a row

    [[nodiscard]] std::span<const std::uint32_t> indices(std::size_t row) const {
        return {index.data() + row * k, k};
    }
    [[nodiscard]] std::span<const double> distances(std::size_t row) const {
        return {distance.data() + row * k, k};
    }
};

/// Exact k nearest points (row-major n x dim) for each query (row-major m x dim).
/// Ordering is by squared distance, then by point index.
[[nodiscard]] KnnTable knn(std::span<const double> points, std::size_t dim,
                           std::span<const double> queries, std::size_t k,
                           parallel::Backend backend = parallel::default_backend());

/// kNN of every point among the others (self excluded).
[[nodiscard]] KnnTable knn_self(std::span<const double> points, std::size_t dim, std::size_t k,
                                parallel::Backend backend = parallel::default_backend());

/// 1 where the Lab color lies in the sRGB gamut, else 0.
[[nodiscard]] std::vector<std::uint8_t> gamut_mask(
    std::span<const LabColor> colors, parallel::Backend backend = parallel::default_backend());

/// Per-row statistics between two equally shaped row-major matrices.
struct RowDrift {
    double l2 = 0.0;        ///< ||e1 - e0||
    double cosine = 0.0;    ///< cos(e0, e1); 1 when both rows are zero
    double norm0 = 0.0;     ///< ||e0||
};

[[nodiscard]] std::vector<RowDrift> row_drift(std::span<const double> e0,
                                              std::span<const double> e1, std::size_t cols,
                                              parallel::Backend backend =
                                                  parallel::default_backend());

}  // namespace numcolor::kernels
