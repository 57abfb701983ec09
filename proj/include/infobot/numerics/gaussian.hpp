#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "infobot/numerics/tape.hpp"

namespace infobot::num {

using Rng = std::mt19937_64;

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

/// Diagonal Gaussian living on a tape: both handles are [B, K].
struct GaussianParams {
    Var mean;
    Var log_std;
};

/// KL(N(m1, s1) || N(m2, s2)) for diagonal Gaussians, summed over dimensions.
inline double diagonal_gaussian_kl(std::span<const double> mean, std::span<const double> log_std,
                                   std::span<const double> prior_mean, std::span<const double> prior_log_std)
{
    if (mean.size() != log_std.size() || mean.size() != prior_mean.size() || mean.size() != prior_log_std.size())
        throw shape_error("gaussian_kl: dimension mismatch (" + std::to_string(mean.size()) + " vs "
                          + std::to_string(prior_mean.size()) + ")");
    double kl = 0.0;
    for (std::size_t k = 0; k < mean.size(); ++k) {
        const double var_ratio = std::exp(2.0 * (log_std[k] - prior_log_std[k]));
        const double d = (mean[k] - prior_mean[k]) * std::exp(-prior_log_std[k]);
        kl += 0.5 * (var_ratio + d * d - 1.0) - (log_std[k] - prior_log_std[k]);
    }
    return kl;
}

inline double unit_gaussian_kl(std::span<const double> mean, std::span<const double> log_std)
{
    if (mean.size() != log_std.size())
        throw shape_error("gaussian_kl: mean/log_std dimension mismatch");
    double kl = 0.0;
    for (std::size_t k = 0; k < mean.size(); ++k)
        kl += 0.5 * (std::exp(2.0 * log_std[k]) + mean[k] * mean[k] - 1.0 - 2.0 * log_std[k]);
    return kl;
}

/// Row-wise KL of the posterior against a fixed diagonal prior, shape [B, 1].
/// Empty prior vectors mean the unit Gaussian.
inline Var gaussian_kl(Tape& t, const GaussianParams& post, std::vector<double> prior_mean = {},
                       std::vector<double> prior_log_std = {})
{
    const Tensor& mv = t.value(post.mean);
    const Tensor& sv = t.value(post.log_std);
    if (mv.shape != sv.shape)
        throw shape_error("gaussian_kl: mean " + shape_string(mv.shape) + " vs log_std " + shape_string(sv.shape));
    const std::size_t rows = mv.rows(), dim = mv.cols();
    if (prior_mean.empty()) prior_mean.assign(dim, 0.0);
    if (prior_log_std.empty()) prior_log_std.assign(dim, 0.0);
    if (prior_mean.size() != dim || prior_log_std.size() != dim)
        throw shape_error("gaussian_kl: posterior dimension " + std::to_string(dim) + " vs prior dimension "
                          + std::to_string(prior_mean.size()));
    Tensor out({rows, 1});
    for (std::size_t r = 0; r < rows; ++r)
        out.values[r] = diagonal_gaussian_kl(std::span(&mv.values[r * dim], dim), std::span(&sv.values[r * dim], dim),
                                             prior_mean, prior_log_std);
    return t.push(std::move(out), [post, rows, dim, pm = std::move(prior_mean), ps = std::move(prior_log_std)](
                                      Tape& tp, std::size_t self) {
        const auto& g = tp.grad(self);
        const Tensor& mv = tp.value(post.mean);
        const Tensor& sv = tp.value(post.log_std);
        auto& gm = tp.grad(post.mean.id);
        auto& gs = tp.grad(post.log_std.id);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t k = 0; k < dim; ++k) {
                const std::size_t i = r * dim + k;
                const double inv_var = std::exp(-2.0 * ps[k]);
                gm[i] += g[r] * (mv.values[i] - pm[k]) * inv_var;
                gs[i] += g[r] * (std::exp(2.0 * (sv.values[i] - ps[k])) - 1.0);
            }
    });
}

/// z = mean + exp(log_std) * noise; gradient flows to mean and log_std.
inline Var reparam_sample(Tape& t, const GaussianParams& params, const Tensor& noise)
{
    const Tensor& mv = t.value(params.mean);
    const Tensor& sv = t.value(params.log_std);
    if (mv.shape != sv.shape || noise.size() != mv.size())
        throw shape_error("reparam_sample: params " + shape_string(mv.shape) + " vs noise " + shape_string(noise.shape));
    Tensor z(mv.shape);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = mv[i] + std::exp(sv[i]) * noise[i];
    return t.push(std::move(z), [params, noise](Tape& tp, std::size_t self) {
        const auto& g = tp.grad(self);
        const Tensor& sv = tp.value(params.log_std);
        auto& gm = tp.grad(params.mean.id);
        auto& gs = tp.grad(params.log_std.id);
        for (std::size_t i = 0; i < g.size(); ++i) {
            gm[i] += g[i];
            gs[i] += g[i] * std::exp(sv[i]) * noise[i];
        }
    });
}

inline std::vector<double> standard_normal(Rng& rng, std::size_t n)
{
    std::vector<double> out(n);
    for (double& v : out) {
        // fresh distribution per draw: no cached state outside the engine
        std::normal_distribution<double> dist(0.0, 1.0);
        v = dist(rng);
    }
    return out;
}

struct CategoricalDraw {
    std::size_t index;
    double log_prob;
};

inline std::vector<double> softmax(std::span<const double> logits)
{
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : logits) mx = std::max(mx, x);
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) z += (p[i] = std::exp(logits[i] - mx));
    for (double& v : p) v /= z;
    return p;
}

/// Inverse-CDF draw from softmax(logits). The returned log-prob is a plain
/// number; the differentiable version is pick(log_softmax(logits), index).
inline CategoricalDraw categorical_sample(std::span<const double> logits, Rng& rng)
{
    if (logits.empty()) throw std::invalid_argument("categorical_sample: empty logits");
    for (double x : logits)
        if (!std::isfinite(x)) throw std::invalid_argument("categorical_sample: non-finite logit");
    const auto p = softmax(logits);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double cum = 0.0;
    std::size_t idx = p.size() - 1;
    for (std::size_t i = 0; i < p.size(); ++i) {
        cum += p[i];
        if (u < cum) {
            idx = i;
            break;
        }
    }
    double mx = logits[0];
    for (double x : logits) mx = std::max(mx, x);
    double z = 0.0;
    for (double x : logits) z += std::exp(x - mx);
    return {idx, logits[idx] - mx - std::log(z)};
}

inline std::size_t argmax(std::span<const double> xs)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (xs[i] > xs[best]) best = i;
    return best;
}

}  // namespace infobot::num
