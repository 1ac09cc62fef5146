#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace numcolor {

struct AdamWOptions {
    double lr = 1e-4;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Moment estimates for Adam with decoupled weight decay.
struct AdamWState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
};

/// One update, skipping the indices in `frozen`. State is sized on first use.
void adamw_update(std::span<double> params, std::span<const double> grad, AdamWState& state,
                  const AdamWOptions& opt, const std::vector<std::size_t>& frozen = {});

}  // namespace numcolor
