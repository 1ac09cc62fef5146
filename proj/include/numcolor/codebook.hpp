#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "numcolor/colorspace.hpp"
#include "numcolor/parallel.hpp"

namespace numcolor {

/// Lab anchors paired with learnable embedding rows.
///
/// Anchors are fixed at construction: they must be finite, pairwise distinct
/// and inside the sRGB gamut. Embeddings are stored as f32, the precision of
/// the on-disk format, so a saved book reloads bit-identically; arithmetic on
/// them (interpolation, training) runs in f64.
class ColorBook {
public:
    static constexpr std::uint32_t kDefaultDim = 4096;
    static constexpr std::uint32_t kDefaultK = 8;
    static constexpr double kDefaultTau = 2.0;

    ColorBook(std::vector<LabColor> anchors, std::size_t dim, double spacing, double tau = kDefaultTau,
              std::size_t k_default = kDefaultK);

    [[nodiscard]] std::size_t size() const noexcept { return anchors_.size(); }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] double spacing() const noexcept { return spacing_; }
    [[nodiscard]] double tau() const noexcept { return tau_; }
    [[nodiscard]] std::size_t k_default() const noexcept { return k_default_; }

    [[nodiscard]] const std::vector<LabColor>& anchors() const noexcept { return anchors_; }
    /// Anchors as a row-major K x 3 array, the layout the kNN kernels expect.
    [[nodiscard]] std::span<const double> anchor_coords() const noexcept { return coords_; }

    [[nodiscard]] std::span<const float> embedding(std::size_t i) const {
        return {embeddings_.data() + i * dim_, dim_};
    }
    [[nodiscard]] std::span<float> embedding(std::size_t i) {
        return {embeddings_.data() + i * dim_, dim_};
    }
    [[nodiscard]] std::span<const float> embeddings() const noexcept { return embeddings_; }
    [[nodiscard]] std::span<float> embeddings() noexcept { return embeddings_; }

    /// Stores `v` (rounded to f32) as row i.
    void set_embedding(std::size_t i, std::span<const double> v);

    [[nodiscard]] std::vector<char> serialize() const;
    static ColorBook deserialize(const std::vector<char>& bytes);
    void save(const std::string& path) const;
    static ColorBook load(const std::string& path);

    friend bool operator==(const ColorBook&, const ColorBook&) = default;

private:
    std::vector<LabColor> anchors_;
    std::vector<double> coords_;
    std::vector<float> embeddings_;
    std::size_t dim_ = 0;
    double spacing_ = 0.0;
    double tau_ = kDefaultTau;
    std::size_t k_default_ = kDefaultK;
};

/// Regular Lab grid with origin (0,0,0): L in [0,100], a and b in [-130,130],
/// keeping in-gamut points, ordered L-major then a then b.
[[nodiscard]] std::vector<LabColor> build_anchor_grid(
    double spacing, parallel::Backend backend = parallel::default_backend());

struct NeighborQueryResult {
    std::vector<std::uint32_t> indices;
    std::vector<double> distances;
    std::vector<double> weights;
};

/// Temperature softmax over negated distances: w_j ∝ exp(-d_j / tau).
[[nodiscard]] std::vector<double> softmax_weights(std::span<const double> distances, double tau);

/// Exact k nearest anchors (ties by lower index) with softmax weights.
[[nodiscard]] NeighborQueryResult query(const ColorBook& book, const LabColor& c, std::size_t k,
                                        double tau);

/// Batch variant of `query` over many colors.
[[nodiscard]] std::vector<NeighborQueryResult> query_batch(
    const ColorBook& book, std::span<const LabColor> colors, std::size_t k, double tau,
    parallel::Backend backend = parallel::default_backend());

/// Weighted sum of the neighbor embeddings using the book's k and tau.
[[nodiscard]] std::vector<double> interpolate(const ColorBook& book, const LabColor& c);

using NameVectors = std::map<std::string, std::vector<double>>;

/// Reads `name<TAB>v0<TAB>v1...` lines (`#` comments allowed).
[[nodiscard]] NameVectors load_name_vectors(const std::string& path);

/// Installs each name's vector on the anchor nearest its centroid. When two
/// names share an anchor the closer centroid wins (ties: smaller name).
/// Returns the seeded anchor ids in increasing order.
std::vector<std::uint32_t> seed_from_names(ColorBook& book, const NamedColorTable& table,
                                           const NameVectors& vectors);

/// Neighbor count used when propagating seeded rows to the rest of the book.
inline constexpr std::size_t kPropagationNeighbors = 8;

/// Fills every unseeded row with an inverse-distance blend of its nearest
/// seeded rows: w ∝ 1 / (d + 1e-6).
void propagate_init(ColorBook& book, std::span<const std::uint32_t> seeded,
                    parallel::Backend backend = parallel::default_backend());

/// FNV-1a 64 digest of a vector's f64 little-endian bytes, as 16 hex digits.
[[nodiscard]] std::string embedding_digest(std::span<const double> v);

}  // namespace numcolor
