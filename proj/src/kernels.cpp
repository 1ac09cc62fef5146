#include "numcolor/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "numcolor/error.hpp"

namespace numcolor::kernels {

namespace {

using Candidate = std::pair<double, std::uint32_t>;  // (squared distance, index)

double squared_distance(const double* x, const double* y, std::size_t dim) {
    double s = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
        const double d = x[c] - y[c];
        s += d * d;
    }
    return s;
}

// Selects the k best candidates of one query into out_index/out_dist.
void select_row(std::span<const double> points, std::size_t dim, const double* query, std::size_t k,
                std::size_t skip, std::uint32_t* out_index, double* out_dist) {
    const std::size_t n = points.size() / dim;
    if (k <= 32) {
        // bounded insertion keeps the working set in registers for small k
        Candidate best[32];
        std::size_t filled = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == skip) continue;
            const Candidate c{squared_distance(points.data() + i * dim, query, dim),
                              static_cast<std::uint32_t>(i)};
            if (filled == k && !(c < best[k - 1])) continue;
            std::size_t pos = filled < k ? filled++ : k - 1;
            while (pos > 0 && c < best[pos - 1]) {
                best[pos] = best[pos - 1];
                --pos;
            }
            best[pos] = c;
        }
        for (std::size_t j = 0; j < k; ++j) {
            out_index[j] = best[j].second;
            out_dist[j] = std::sqrt(best[j].first);
        }
        return;
    }
    std::vector<Candidate> all;
    all.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == skip) continue;
        all.emplace_back(squared_distance(points.data() + i * dim, query, dim),
                         static_cast<std::uint32_t>(i));
    }
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    for (std::size_t j = 0; j < k; ++j) {
        out_index[j] = all[j].second;
        out_dist[j] = std::sqrt(all[j].first);
    }
}

KnnTable run_knn(std::span<const double> points, std::size_t dim, std::span<const double> queries,
                 std::size_t k, bool exclude_self, parallel::Backend backend) {
    if (dim == 0 || points.size() % dim != 0 || queries.size() % dim != 0) {
        throw Error("knn: coordinate arrays are not a whole number of rows");
    }
    const std::size_t n = points.size() / dim;
    const std::size_t available = exclude_self ? (n == 0 ? 0 : n - 1) : n;
    if (k == 0 || k > available) {
        throw Error("knn: k=" + std::to_string(k) + " outside [1, " + std::to_string(available) +
                    "]");
    }
    KnnTable t;
    t.rows = queries.size() / dim;
    t.k = k;
    t.index.resize(t.rows * k);
    t.distance.resize(t.rows * k);
    parallel::for_each_index(
        t.rows,
        [&](std::size_t q) {
            select_row(points, dim, queries.data() + q * dim, k,
                       exclude_self ? q : std::numeric_limits<std::size_t>::max(),
                       t.index.data() + q * k, t.distance.data() + q * k);
        },
        backend);
    return t;
}

}  // namespace

KnnTable knn(std::span<const double> points, std::size_t dim, std::span<const double> queries,
             std::size_t k, parallel::Backend backend) {
    return run_knn(points, dim, queries, k, false, backend);
}

KnnTable knn_self(std::span<const double> points, std::size_t dim, std::size_t k,
                  parallel::Backend backend) {
    return run_knn(points, dim, points, k, true, backend);
}

std::vector<std::uint8_t> gamut_mask(std::span<const LabColor> colors, parallel::Backend backend) {
    std::vector<std::uint8_t> mask(colors.size(), 0);
    parallel::for_each_index(
        colors.size(), [&](std::size_t i) { mask[i] = in_srgb_gamut(colors[i]) ? 1 : 0; },
        backend);
    return mask;
}

std::vector<RowDrift> row_drift(std::span<const double> e0, std::span<const double> e1,
                                std::size_t cols, parallel::Backend backend) {
    if (e0.size() != e1.size() || cols == 0 || e0.size() % cols != 0) {
        throw Error("row_drift: shape mismatch");
    }
    const std::size_t rows = e0.size() / cols;
    std::vector<RowDrift> out(rows);
    parallel::for_each_index(
        rows,
        [&](std::size_t r) {
            const double* x = e0.data() + r * cols;
            const double* y = e1.data() + r * cols;
            double diff2 = 0.0, xx = 0.0, yy = 0.0, xy = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
                const double d = y[c] - x[c];
                diff2 += d * d;
                xx += x[c] * x[c];
                yy += y[c] * y[c];
                xy += x[c] * y[c];
            }
            RowDrift& o = out[r];
            o.l2 = std::sqrt(diff2);
            o.norm0 = std::sqrt(xx);
            if (xx == 0.0 && yy == 0.0) {
                o.cosine = 1.0;
            } else if (xx == 0.0 || yy == 0.0) {
                o.cosine = 0.0;
            } else {
                o.cosine = std::clamp(xy / std::sqrt(xx * yy), -1.0, 1.0);
            }
        },
        backend);
    return out;
}

}  // namespace numcolor::kernels
