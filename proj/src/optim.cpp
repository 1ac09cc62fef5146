#include "numcolor/optim.hpp"

#include <cmath>

#include "numcolor/error.hpp"

namespace numcolor {

void adamw_update(std::span<double> params, std::span<const double> grad, AdamWState& state,
                  const AdamWOptions& opt, const std::vector<std::size_t>& frozen) {
    if (grad.size() != params.size()) throw Error("adamw: gradient size mismatch");
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
        state.t = 0;
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.t));
    std::vector<char> skip(params.size(), 0);
    for (const auto i : frozen) skip[i] = 1;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (skip[i]) continue;
        const double g = grad[i];
        state.m[i] = opt.beta1 * state.m[i] + (1.0 - opt.beta1) * g;
        state.v[i] = opt.beta2 * state.v[i] + (1.0 - opt.beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= opt.lr * (mhat / (std::sqrt(vhat) + opt.eps) + opt.weight_decay * params[i]);
    }
}

}  // namespace numcolor
