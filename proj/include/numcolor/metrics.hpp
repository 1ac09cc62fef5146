#pragma once

#include <cstddef>
#include <json.hpp>
#include <vector>

#include "numcolor/codebook.hpp"
#include "numcolor/matrix.hpp"
#include "numcolor/parallel.hpp"

namespace numcolor {

/// ||Xc^T Yc||_F^2 / (||Xc^T Xc||_F ||Yc^T Yc||_F) on column-centered inputs,
/// clamped to [0, 1]. Throws on n < 2, row mismatch or zero variance.
[[nodiscard]] double linear_cka(const RowMatrix& X, const RowMatrix& Y);

/// Mean over rows of |kNN_A(i) ∩ kNN_B(i)| / k; self excluded, ties by index.
[[nodiscard]] double knn_overlap(const RowMatrix& A, const RowMatrix& B, std::size_t k,
                                 parallel::Backend backend = parallel::default_backend());

struct DriftSummary {
    double mean = 0.0;
    double median = 0.0;
};

struct DriftReport {
    std::vector<double> l2;
    std::vector<double> cosine;
    std::vector<double> relative;  ///< +inf for rows whose initial norm is zero
    DriftSummary l2_summary;
    DriftSummary cosine_summary;
    DriftSummary relative_summary;  ///< over finite entries only
    std::size_t zero_initial_rows = 0;

    /// Summaries only unless `per_row`; infinite values become null.
    [[nodiscard]] nlohmann::ordered_json to_json(bool per_row = false) const;
};

[[nodiscard]] DriftReport drift_report(const RowMatrix& E0, const RowMatrix& E1,
                                       parallel::Backend backend = parallel::default_backend());

[[nodiscard]] RowMatrix anchor_matrix(const ColorBook& book);
[[nodiscard]] RowMatrix embedding_matrix(const ColorBook& book);

}  // namespace numcolor
