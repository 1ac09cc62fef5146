#include "numcolor/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <span>

#include "numcolor/error.hpp"
#include "numcolor/kernels.hpp"

namespace numcolor {

namespace {

RowMatrix centered(const RowMatrix& X) {
    RowMatrix c = X;
    c.rowwise() -= X.colwise().mean();
    return c;
}

std::span<const double> flat(const RowMatrix& m) {
    return {m.data(), static_cast<std::size_t>(m.size())};
}

DriftSummary summarize(std::vector<double> v) {
    DriftSummary s;
    if (v.empty()) return s;
    double sum = 0.0;
    for (const double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    s.median = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    return s;
}

nlohmann::ordered_json finite_or_null(double v) {
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

double linear_cka(const RowMatrix& X, const RowMatrix& Y) {
    if (X.rows() != Y.rows()) throw Error("linear_cka: row counts differ");
    if (X.rows() < 2) throw Error("linear_cka: need at least two rows");
    const RowMatrix xc = centered(X);
    const RowMatrix yc = centered(Y);
    const double xx = (xc.transpose() * xc).norm();
    const double yy = (yc.transpose() * yc).norm();
    if (!(xx > 0.0) || !(yy > 0.0)) throw Error("linear_cka: zero-variance input");
    const double xy = (xc.transpose() * yc).squaredNorm();
    return std::clamp(xy / (xx * yy), 0.0, 1.0);
}

double knn_overlap(const RowMatrix& A, const RowMatrix& B, std::size_t k, parallel::Backend backend) {
    if (A.rows() != B.rows()) throw Error("knn_overlap: row counts differ");
    const auto n = static_cast<std::size_t>(A.rows());
    if (k < 1 || k >= n) throw Error("knn_overlap: k must satisfy 1 <= k < n");
    const auto ta = kernels::knn_self(flat(A), static_cast<std::size_t>(A.cols()), k, backend);
    const auto tb = kernels::knn_self(flat(B), static_cast<std::size_t>(B.cols()), k, backend);
    std::vector<double> per_row(n);
    parallel::for_each_index(
        n,
        [&](std::size_t i) {
            std::vector<std::uint32_t> a(ta.indices(i).begin(), ta.indices(i).end());
            std::vector<std::uint32_t> b(tb.indices(i).begin(), tb.indices(i).end());
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            std::vector<std::uint32_t> common;
            std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
            per_row[i] = static_cast<double>(common.size()) / static_cast<double>(k);
        },
        backend);
    double sum = 0.0;
    for (const double v : per_row) sum += v;
    return sum / static_cast<double>(n);
}

DriftReport drift_report(const RowMatrix& E0, const RowMatrix& E1, parallel::Backend backend) {
    if (E0.rows() != E1.rows() || E0.cols() != E1.cols()) throw Error("drift_report: shape mismatch");
    const auto rows = kernels::row_drift(flat(E0), flat(E1), static_cast<std::size_t>(E0.cols()), backend);
    DriftReport r;
    r.l2.reserve(rows.size());
    r.cosine.reserve(rows.size());
    r.relative.reserve(rows.size());
    std::vector<double> finite_rel;
    for (const auto& d : rows) {
        r.l2.push_back(d.l2);
        r.cosine.push_back(d.cosine);
        if (d.norm0 > 0.0) {
            r.relative.push_back(d.l2 / d.norm0);
            finite_rel.push_back(r.relative.back());
        } else {
            r.relative.push_back(std::numeric_limits<double>::infinity());
            ++r.zero_initial_rows;
        }
    }
    r.l2_summary = summarize(r.l2);
    r.cosine_summary = summarize(r.cosine);
    r.relative_summary = summarize(std::move(finite_rel));
    return r;
}

nlohmann::ordered_json DriftReport::to_json(bool per_row) const {
    nlohmann::ordered_json j;
    j["rows"] = l2.size();
    j["l2"] = {{"mean", l2_summary.mean}, {"median", l2_summary.median}};
    j["cosine"] = {{"mean", cosine_summary.mean}, {"median", cosine_summary.median}};
    j["relative"] = {{"mean", relative_summary.mean}, {"median", relative_summary.median}};
    j["zero_initial_rows"] = zero_initial_rows;
    if (per_row) {
        auto rel = nlohmann::ordered_json::array();
        for (const double v : relative) rel.push_back(finite_or_null(v));
        j["per_row"] = {{"l2", l2}, {"cosine", cosine}, {"relative", rel}};
    }
    return j;
}

RowMatrix anchor_matrix(const ColorBook& book) {
    const auto c = book.anchor_coords();
    return Eigen::Map<const RowMatrix>(c.data(), static_cast<Eigen::Index>(book.size()), 3);
}

RowMatrix embedding_matrix(const ColorBook& book) {
    const auto e = book.embeddings();
    RowMatrix m(static_cast<Eigen::Index>(book.size()), static_cast<Eigen::Index>(book.dim()));
    for (std::size_t i = 0; i < e.size(); ++i) m.data()[i] = e[i];
    return m;
}

}  // namespace numcolor
