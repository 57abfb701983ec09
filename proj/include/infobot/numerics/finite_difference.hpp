#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "infobot/numerics/params.hpp"

namespace infobot::num {

/// Central-difference gradient of loss_fn with respect to every scalar in
/// params. loss_fn must be deterministic; params is restored on return.
inline std::vector<Tensor> finite_difference(const std::function<double(ParamSet&)>& loss_fn, ParamSet& params,
                                             double epsilon = 1e-5)
{
    if (!(epsilon >= 1e-6 && epsilon <= 1e-3)) throw std::invalid_argument("finite_difference: epsilon outside [1e-6, 1e-3]");
    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor g(params[p].value.shape, 0.0);
        for (std::size_t k = 0; k < g.size(); ++k) {
            double& w = params[p].value.values[k];
            const double saved = w;
            w = saved + epsilon;
            const double up = loss_fn(params);
            w = saved - epsilon;
            const double down = loss_fn(params);
            w = saved;
            g[k] = (up - down) / (2.0 * epsilon);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

/// max_i |a_i - b_i| / max(|a|_inf, |b|_inf, floor): relative error measured
/// against the gradient's overall scale, so near-zero components do not
/// dominate.
inline double gradient_relative_error(const std::vector<Tensor>& a, const std::vector<Tensor>& b, double floor = 1e-8)
{
    if (a.size() != b.size()) throw std::invalid_argument("gradient_relative_error: size mismatch");
    double diff = 0.0, scale = floor;
    for (std::size_t p = 0; p < a.size(); ++p) {
        if (a[p].size() != b[p].size()) throw std::invalid_argument("gradient_relative_error: shape mismatch");
        for (std::size_t k = 0; k < a[p].size(); ++k) {
            diff = std::max(diff, std::abs(a[p][k] - b[p][k]));
            scale = std::max({scale, std::abs(a[p][k]), std::abs(b[p][k])});
        }
    }
    return diff / scale;
}

}  // namespace infobot::num
