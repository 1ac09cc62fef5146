#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <unistd.h>
#include <span>
#include <vector>

#include "numcolor/cta.hpp"
#include "numcolor/tokenizers.hpp"

namespace numcolor::testing {

/// Path under a per-process scratch directory.
inline std::string temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("numcolor-test-" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

/// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true
/// gradient is zero from dividing round-off by round-off.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheck {
    double max_rel = 0.0;
    std::size_t worst = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t checked = 0;
    std::size_t kinks = 0;  ///< entries skipped because the probe interval crosses a switch
};

/// Extrapolated central differences of `loss` over every entry of `params`:
/// (4 D(h) - D(2h)) / 3 with D(s) = (f(x+s) - f(x-s)) / 2s, compared with
/// `analytic`. When `pattern` is given, entries whose value changes anywhere
/// in {x-2h, x-h, x+h, x+2h} are not differentiable over the probe and are
/// counted as kinks instead. `params` is restored afterwards.
inline GradCheck check_gradient(std::span<double> params, std::span<const double> analytic,
                                const std::function<double()>& loss, double h = 1e-4,
                                const std::function<std::uint64_t()>& pattern = {}) {
    GradCheck out;
    const std::uint64_t base = pattern ? pattern() : 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        double f[4];
        bool smooth = true;
        const double offsets[4] = {-2.0 * h, -h, h, 2.0 * h};
        for (int j = 0; j < 4; ++j) {
            params[i] = saved + offsets[j];
            f[j] = loss();
            if (pattern && pattern() != base) smooth = false;
        }
        params[i] = saved;
        if (!smooth) {
            ++out.kinks;
            continue;
        }
        ++out.checked;
        const double d1 = (f[2] - f[1]) / (2.0 * h);
        const double d2 = (f[3] - f[0]) / (4.0 * h);
        const double numeric = (4.0 * d1 - d2) / 3.0;
        const double rel = relative_error(analytic[i], numeric);
        if (rel > out.max_rel) {
            out.max_rel = rel;
            out.worst = i;
            out.worst_analytic = analytic[i];
            out.worst_numeric = numeric;
        }
    }
    return out;
}

/// Index of the parameter tensor containing a flat index.
inline const ParamInfo& owner(const CtaModel& m, std::size_t flat) {
    for (const auto& p : m.layout()) {
        if (flat >= p.offset && flat < p.offset + p.size()) return p;
    }
    return m.layout().back();
}

/// Every tag sequence of length T over {B, I, O}, in lexicographic order.
inline std::vector<std::vector<Tag>> all_tag_paths(std::size_t T) {
    std::vector<std::vector<Tag>> out;
    std::vector<Tag> cur(T, Tag::B);
    std::size_t total = 1;
    for (std::size_t i = 0; i < T; ++i) total *= 3;
    for (std::size_t n = 0; n < total; ++n) {
        std::size_t v = n;
        for (std::size_t i = T; i-- > 0;) {
            cur[i] = static_cast<Tag>(v % 3);
            v /= 3;
        }
        out.push_back(cur);
    }
    return out;
}

}  // namespace numcolor::testing
