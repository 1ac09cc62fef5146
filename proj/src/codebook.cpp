#include "numcolor/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <tuple>

#include "numcolor/detail/binary_io.hpp"
#include "numcolor/error.hpp"
#include "numcolor/kernels.hpp"

namespace numcolor {

namespace {

constexpr char kMagic[4] = {'N', 'C', 'B', 'K'};
constexpr std::uint32_t kVersion = 1;

void check_finite(const LabColor& c, const char* what) {
    if (!c.finite()) throw Error(std::string(what) + ": non-finite Lab color");
}

}  // namespace

ColorBook::ColorBook(std::vector<LabColor> anchors, std::size_t dim, double spacing, double tau,
                     std::size_t k_default)
    : anchors_(std::move(anchors)), dim_(dim), spacing_(spacing), tau_(tau), k_default_(k_default) {
    if (anchors_.empty()) throw Error("colorbook needs at least one anchor");
    if (dim_ == 0) throw Error("colorbook embedding width must be >= 1");
    if (!(tau_ > 0.0) || !std::isfinite(tau_)) throw Error("colorbook tau must be > 0");
    if (k_default_ < 1 || k_default_ > anchors_.size()) {
        throw Error("colorbook k_default must be in [1, K]");
    }
    if (!std::isfinite(spacing_)) throw Error("colorbook spacing must be finite");
    coords_.reserve(anchors_.size() * 3);
    for (const auto& a : anchors_) {
        if (!a.finite()) throw Error("colorbook anchor is not finite");
        if (!in_srgb_gamut(a)) throw Error("colorbook anchor outside the sRGB gamut");
        coords_.insert(coords_.end(), {a.L, a.a, a.b});
    }
    std::vector<std::tuple<double, double, double>> sorted;
    sorted.reserve(anchors_.size());
    for (const auto& a : anchors_) sorted.emplace_back(a.L, a.a, a.b);
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw Error("colorbook anchors are not pairwise distinct");
    }
    embeddings_.assign(anchors_.size() * dim_, 0.0f);
}

void ColorBook::set_embedding(std::size_t i, std::span<const double> v) {
    if (i >= size()) throw Error("embedding row out of range");
    if (v.size() != dim_) throw Error("embedding width mismatch");
    auto row = embedding(i);
    for (std::size_t c = 0; c < dim_; ++c) {
        row[c] = static_cast<float>(v[c]);
        if (!std::isfinite(row[c])) throw Error("non-finite embedding value");
    }
}

std::vector<char> ColorBook::serialize() const {
    detail::ByteWriter w;
    w.raw({kMagic, 4});
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(size()));
    w.u32(static_cast<std::uint32_t>(dim_));
    w.f64(spacing_);
    w.f64(tau_);
    w.u32(static_cast<std::uint32_t>(k_default_));
    for (const double v : coords_) w.f64(v);
    for (const float v : embeddings_) w.f32(v);
    return w.take();
}

ColorBook ColorBook::deserialize(const std::vector<char>& bytes) {
    using Kind = FormatError::Kind;
    detail::ByteReader r(bytes.data(), bytes.size(), "codebook");
    if (bytes.size() < 4 || r.raw(4) != std::string_view(kMagic, 4)) {
        throw FormatError(Kind::bad_magic, "codebook: bad magic");
    }
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw FormatError(Kind::version_mismatch,
                          "codebook: version mismatch (file " + std::to_string(version) +
                              ", expected " + std::to_string(kVersion) + ")");
    }
    const std::uint32_t k_count = r.u32();
    const std::uint32_t dim = r.u32();
    const double spacing = r.f64();
    const double tau = r.f64();
    const std::uint32_t k_default = r.u32();
    if (!std::isfinite(spacing) || !std::isfinite(tau)) {
        throw FormatError(Kind::non_finite, "codebook: non-finite header value");
    }
    const std::uint64_t payload = std::uint64_t{k_count} * 3 * 8 + std::uint64_t{k_count} * dim * 4;
    if (r.remaining() < payload) throw FormatError(Kind::truncated, "codebook: truncated");
    if (r.remaining() > payload) throw FormatError(Kind::trailing_data, "codebook: trailing bytes");

    std::vector<LabColor> anchors(k_count);
    for (auto& a : anchors) {
        a.L = r.f64();
        a.a = r.f64();
        a.b = r.f64();
        if (!a.finite()) throw FormatError(Kind::non_finite, "codebook: non-finite anchor");
    }
    std::vector<float> emb(std::size_t{k_count} * dim);
    for (auto& v : emb) {
        v = r.f32();
        if (!std::isfinite(v)) throw FormatError(Kind::non_finite, "codebook: non-finite embedding");
    }
    try {
        ColorBook book(std::move(anchors), dim, spacing, tau, k_default);
        book.embeddings_ = std::move(emb);
        return book;
    } catch (const FormatError&) {
        throw;
    } catch (const Error& e) {
        throw FormatError(Kind::malformed, std::string("codebook: ") + e.what());
    }
}

void ColorBook::save(const std::string& path) const { detail::write_file(path, serialize()); }

ColorBook ColorBook::load(const std::string& path) { return deserialize(detail::read_file(path)); }

std::vector<LabColor> build_anchor_grid(double spacing, parallel::Backend backend) {
    if (!(spacing > 0.0) || !std::isfinite(spacing)) throw Error("grid spacing must be > 0");
    const auto steps = [&](double limit) {
        return static_cast<long long>(std::floor(limit / spacing + 1e-9));
    };
    const long long nl = steps(100.0);
    const long long nab = steps(130.0);
    std::vector<LabColor> candidates;
    candidates.reserve(static_cast<std::size_t>((nl + 1) * (2 * nab + 1) * (2 * nab + 1)));
    for (long long i = 0; i <= nl; ++i) {
        for (long long j = -nab; j <= nab; ++j) {
            for (long long m = -nab; m <= nab; ++m) {
                candidates.push_back({static_cast<double>(i) * spacing,
                                      static_cast<double>(j) * spacing,
                                      static_cast<double>(m) * spacing});
            }
        }
    }
    const auto mask = kernels::gamut_mask(candidates, backend);
    std::vector<LabColor> out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (mask[i]) out.push_back(candidates[i]);
    }
    return out;
}

std::vector<double> softmax_weights(std::span<const double> distances, double tau) {
    std::vector<double> w(distances.size());
    if (distances.empty()) return w;
    const double d0 = *std::min_element(distances.begin(), distances.end());
    double total = 0.0;
    for (std::size_t j = 0; j < distances.size(); ++j) {
        w[j] = std::exp(-(distances[j] - d0) / tau);
        total += w[j];
    }
    for (auto& v : w) v /= total;
    return w;
}

NeighborQueryResult query(const ColorBook& book, const LabColor& c, std::size_t k, double tau) {
    check_finite(c, "query");
    return std::move(query_batch(book, std::span(&c, 1), k, tau, parallel::Backend::serial).front());
}

std::vector<NeighborQueryResult> query_batch(const ColorBook& book, std::span<const LabColor> colors,
                                             std::size_t k, double tau, parallel::Backend backend) {
    if (k < 1 || k > book.size()) {
        throw Error("query: k=" + std::to_string(k) + " outside [1, " + std::to_string(book.size()) +
                    "]");
    }
    if (!(tau > 0.0) || !std::isfinite(tau)) throw Error("query: tau must be > 0");
    std::vector<double> q;
    q.reserve(colors.size() * 3);
    for (const auto& c : colors) {
        check_finite(c, "query");
        q.insert(q.end(), {c.L, c.a, c.b});
    }
    const auto table = kernels::knn(book.anchor_coords(), 3, q, k, backend);
    std::vector<NeighborQueryResult> out(colors.size());
    for (std::size_t i = 0; i < colors.size(); ++i) {
        const auto idx = table.indices(i);
        const auto dist = table.distances(i);
        out[i].indices.assign(idx.begin(), idx.end());
        out[i].distances.assign(dist.begin(), dist.end());
        out[i].weights = softmax_weights(dist, tau);
    }
    return out;
}

std::vector<double> interpolate(const ColorBook& book, const LabColor& c) {
    const auto nb = query(book, c, book.k_default(), book.tau());
    std::vector<double> out(book.dim(), 0.0);
    for (std::size_t j = 0; j < nb.indices.size(); ++j) {
        const auto row = book.embedding(nb.indices[j]);
        const double w = nb.weights[j];
        for (std::size_t d = 0; d < out.size(); ++d) out[d] += w * static_cast<double>(row[d]);
    }
    return out;
}

NameVectors load_name_vectors(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open name-vector file: " + path);
    NameVectors out;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        const auto fail = [&](const std::string& why) {
            return FormatError(FormatError::Kind::malformed,
                               path + " line " + std::to_string(line_no) + ": " + why);
        };
        if (tab == std::string::npos || tab == 0) throw fail("expected name<TAB>values");
        std::string name = line.substr(0, tab);
        std::istringstream vs(line.substr(tab + 1));
        std::vector<double> v;
        std::string tok;
        while (std::getline(vs, tok, '\t')) {
            try {
                std::size_t used = 0;
                v.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw fail("bad number '" + tok + "'");
            } catch (const std::logic_error&) {
                throw fail("bad number '" + tok + "'");
            }
            if (!std::isfinite(v.back())) throw fail("non-finite value");
        }
        if (v.empty()) throw fail("no values");
        if (width == 0) width = v.size();
        if (v.size() != width) throw fail("inconsistent vector width");
        if (!out.emplace(std::move(name), std::move(v)).second) throw fail("duplicate name");
    }
    return out;
}

std::vector<std::uint32_t> seed_from_names(ColorBook& book, const NamedColorTable& table,
                                           const NameVectors& vectors) {
    struct Claim {
        double distance;
        const std::string* name;
        const std::vector<double>* vector;
    };
    std::map<std::uint32_t, Claim> claims;
    for (const auto& entry : table.entries()) {
        const auto it = vectors.find(entry.name);
        if (it == vectors.end()) throw Error("missing vector for color name '" + entry.name + "'");
        if (it->second.size() != book.dim()) {
            throw Error("vector for '" + entry.name + "' has width " +
                        std::to_string(it->second.size()) + ", expected " +
                        std::to_string(book.dim()));
        }
        const auto nb = query(book, entry.lab, 1, book.tau());
        const Claim claim{nb.distances[0], &entry.name, &it->second};
        auto [pos, inserted] = claims.emplace(nb.indices[0], claim);
        if (!inserted) {
            const Claim& cur = pos->second;
            if (claim.distance < cur.distance ||
                (claim.distance == cur.distance && *claim.name < *cur.name)) {
                pos->second = claim;
            }
        }
    }
    std::vector<std::uint32_t> seeded;
    seeded.reserve(claims.size());
    for (const auto& [anchor, claim] : claims) {
        book.set_embedding(anchor, *claim.vector);
        seeded.push_back(anchor);
    }
    return seeded;
}

void propagate_init(ColorBook& book, std::span<const std::uint32_t> seeded,
                    parallel::Backend backend) {
    if (seeded.empty()) throw Error("propagate_init: empty seed set");
    std::vector<std::uint8_t> is_seed(book.size(), 0);
    std::vector<double> seed_coords;
    seed_coords.reserve(seeded.size() * 3);
    std::vector<std::uint32_t> seed_ids;
    for (const auto id : seeded) {
        if (id >= book.size()) throw Error("propagate_init: seed id out of range");
        if (is_seed[id]) continue;
        is_seed[id] = 1;
        seed_ids.push_back(id);
    }
    std::sort(seed_ids.begin(), seed_ids.end());
    for (const auto id : seed_ids) {
        const auto& a = book.anchors()[id];
        seed_coords.insert(seed_coords.end(), {a.L, a.a, a.b});
    }
    std::vector<std::uint32_t> targets;
    std::vector<double> target_coords;
    for (std::uint32_t i = 0; i < book.size(); ++i) {
        if (is_seed[i]) continue;
        targets.push_back(i);
        const auto& a = book.anchors()[i];
        target_coords.insert(target_coords.end(), {a.L, a.a, a.b});
    }
    if (targets.empty()) return;

    const std::size_t m = std::min(kPropagationNeighbors, seed_ids.size());
    const auto table = kernels::knn(seed_coords, 3, target_coords, m, backend);
    const std::size_t dim = book.dim();
    // Snapshot seeded rows first so the parallel writes below only touch targets.
    std::vector<double> seed_rows(seed_ids.size() * dim);
    for (std::size_t s = 0; s < seed_ids.size(); ++s) {
        const auto row = book.embedding(seed_ids[s]);
        std::copy(row.begin(), row.end(), seed_rows.begin() + static_cast<std::ptrdiff_t>(s * dim));
    }
    parallel::for_each_index(
        targets.size(),
        [&](std::size_t t) {
            const auto idx = table.indices(t);
            const auto dist = table.distances(t);
            std::vector<double> w(m);
            double total = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                w[j] = 1.0 / (dist[j] + 1e-6);
                total += w[j];
            }
            std::vector<double> acc(dim, 0.0);
            for (std::size_t j = 0; j < m; ++j) {
                const double wj = w[j] / total;
                const double* src = seed_rows.data() + std::size_t{idx[j]} * dim;
                for (std::size_t d = 0; d < dim; ++d) acc[d] += wj * src[d];
            }
            auto row = book.embedding(targets[t]);
            for (std::size_t d = 0; d < dim; ++d) row[d] = static_cast<float>(acc[d]);
        },
        backend);
}

std::string embedding_digest(std::span<const double> v) {
    std::uint64_t h = 14695981039346656037ull;
    for (const double x : v) {
        const auto bits = std::bit_cast<std::uint64_t>(x);
        unsigned char le[8];
        for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
        h = detail::fnv1a64(le, 8, h);
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kHex[h & 15];
        h >>= 4;
    }
    return out;
}

}  // namespace numcolor
