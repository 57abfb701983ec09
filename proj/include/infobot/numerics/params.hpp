#pragma once

#include <cmath>
#include <cstddef>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "infobot/numerics/tensor.hpp"

namespace infobot::num {

struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor accum;  // RMSProp second-moment estimate, same shape as value
};

/// Ordered, named collection of trainable tensors. Insertion order is the
/// iteration order and is part of the checkpoint contract.
class ParamSet {
public:
    std::size_t add(std::string name, Tensor value)
    {
        if (find(name)) throw std::invalid_argument("duplicate parameter name: " + name);
        Param p;
        p.name = std::move(name);
        p.grad = Tensor(value.shape, 0.0);
        p.accum = Tensor(value.shape, 0.0);
        p.value = std::move(value);
        params_.push_back(std::move(p));
        return params_.size() - 1;
    }

    std::size_t size() const { return params_.size(); }

    Param& operator[](std::size_t i) { return params_[i]; }
    const Param& operator[](std::size_t i) const { return params_[i]; }

    std::optional<std::size_t> find(const std::string& name) const
    {
        for (std::size_t i = 0; i < params_.size(); ++i)
            if (params_[i].name == name) return i;
        return std::nullopt;
    }

    std::size_t scalar_count() const
    {
        std::size_t n = 0;
        for (const auto& p : params_) n += p.value.size();
        return n;
    }

    void zero_grad()
    {
        for (auto& p : params_) p.grad.fill(0.0);
    }

    /// Adds another set's gradients into this one. Shapes must mirror.
    void accumulate_grad(const ParamSet& other)
    {
        if (other.size() != size()) throw shape_error("parameter set size mismatch");
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& dst = params_[i].grad.values;
            const auto& src = other.params_[i].grad.values;
            if (dst.size() != src.size())
                throw shape_error("gradient shape mismatch for " + params_[i].name);
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        }
    }

    void scale_grad(double factor)
    {
        for (auto& p : params_)
            for (double& g : p.grad.values) g *= factor;
    }

    double grad_norm() const
    {
        double sq = 0.0;
        for (const auto& p : params_)
            for (double g : p.grad.values) sq += g * g;
        return std::sqrt(sq);
    }

    bool grads_finite() const
    {
        for (const auto& p : params_)
            if (!p.grad.all_finite()) return false;
        return true;
    }

    /// Copy of values only: fresh zero gradients, shared nothing.
    ParamSet snapshot() const
    {
        ParamSet out;
        out.params_.reserve(params_.size());
        for (const auto& p : params_) {
            Param q;
            q.name = p.name;
            q.value = p.value;
            q.grad = Tensor(p.value.shape, 0.0);
            q.accum = Tensor(p.value.shape, 0.0);
            out.params_.push_back(std::move(q));
        }
        return out;
    }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::vector<Param> params_;
};

/// Uniform(-scale, scale) initialisation with scale = gain * sqrt(6 / (fan_in + fan_out)).
inline Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng, double gain = 1.0)
{
    const double scale = gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-scale, scale);
    Tensor t({fan_in, fan_out});
    for (double& v : t.values) v = dist(rng);
    return t;
}

struct RmsPropConfig {
    double lr = 7e-4;
    double decay = 0.99;
    double eps = 1e-5;
};

struct RmsPropStats {
    std::size_t steps = 0;
    std::size_t skipped = 0;  // divergence counter: updates dropped for non-finite gradients
};

/// acc <- decay * acc + (1 - decay) * g^2;  w <- w - lr * g / (sqrt(acc) + eps).
/// Returns false (and leaves every parameter and accumulator untouched) when
/// any gradient component is non-finite.
inline bool rmsprop_step(ParamSet& params, const RmsPropConfig& cfg, RmsPropStats& stats)
{
    if (!(cfg.lr > 0.0)) throw std::invalid_argument("rmsprop learning rate must be positive");
    if (!params.grads_finite()) {
        ++stats.skipped;
        std::cerr << "warning: non-finite gradient, skipping update (" << stats.skipped << " skipped so far)\n";
        return false;
    }
    for (auto& p : params) {
        auto& w = p.value.values;
        auto& acc = p.accum.values;
        const auto& g = p.grad.values;
        for (std::size_t k = 0; k < w.size(); ++k) {
            acc[k] = cfg.decay * acc[k] + (1.0 - cfg.decay) * g[k] * g[k];
            w[k] -= cfg.lr * g[k] / (std::sqrt(acc[k]) + cfg.eps);
        }
    }
    ++stats.steps;
    return true;
}

}  // namespace infobot::num
