#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

namespace infobot::oracle {

class quadrature_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct HermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;  // for weight function exp(-x^2)
};

/// Gauss-Hermite nodes/weights of order n, computed once per order.
inline const HermiteRule& hermite_rule(std::size_t n)
{
    static std::mutex mu;
    static std::map<std::size_t, HermiteRule> cache;
    std::lock_guard lock(mu);
    if (auto it = cache.find(n); it != cache.end()) return it->second;
    std::unique_ptr<gsl_integration_fixed_workspace, decltype(&gsl_integration_fixed_free)> ws(
        gsl_integration_fixed_alloc(gsl_integration_fixed_hermite, n, 0.0, 1.0, 0.0, 0.0), &gsl_integration_fixed_free);
    if (!ws) throw quadrature_error("could not build Gauss-Hermite rule of order " + std::to_string(n));
    HermiteRule rule;
    const double* x = gsl_integration_fixed_nodes(ws.get());
    const double* w = gsl_integration_fixed_weights(ws.get());
    rule.nodes.assign(x, x + n);
    rule.weights.assign(w, w + n);
    return cache.emplace(n, std::move(rule)).first->second;
}

/// E_{z ~ N(mean, sd^2)}[f(z)] with an order-n Gauss-Hermite rule. f returns a vector.
inline std::vector<double> gaussian_expectation(const std::function<std::vector<double>(double)>& f, double mean,
                                                double sd, std::size_t n)
{
    const auto& rule = hermite_rule(n);
    std::vector<double> acc;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = rule.weights[i] / std::sqrt(std::numbers::pi);
        if (w == 0.0) continue;
        const auto v = f(mean + std::numbers::sqrt2 * sd * rule.nodes[i]);
        if (acc.empty()) acc.assign(v.size(), 0.0);
        for (std::size_t k = 0; k < v.size(); ++k) acc[k] += w * v[k];
    }
    return acc;
}

inline constexpr double kQuadratureTolerance = 1e-9;

/// Doubles the Gauss-Hermite order from 16 until successive results agree
/// to tol (max-abs); returns the finer estimate.
inline std::vector<double> converged_gaussian_expectation(const std::function<std::vector<double>(double)>& f,
                                                          double mean, double sd, double tol = kQuadratureTolerance,
                                                          std::size_t max_order = 256)
{
    auto prev = gaussian_expectation(f, mean, sd, 16);
    for (std::size_t n = 32; n <= max_order; n *= 2) {
        auto cur = gaussian_expectation(f, mean, sd, n);
        double diff = 0.0;
        for (std::size_t k = 0; k < cur.size(); ++k) diff = std::max(diff, std::abs(cur[k] - prev[k]));
        if (diff < tol) return cur;
        prev = std::move(cur);
    }
    throw quadrature_error("Gauss-Hermite order doubling did not stabilise");
}

/// Adaptive Gauss-Kronrod (GSL QAG) of f over [lo, hi].
inline double adaptive_integral(const std::function<double(double)>& f, double lo, double hi, double abs_tol = 1e-12,
                                double rel_tol = 1e-10)
{
    struct Ctx {
        const std::function<double(double)>* f;
    } ctx{&f};
    gsl_function g;
    g.function = [](double x, void* p) { return (*static_cast<Ctx*>(p)->f)(x); };
    g.params = &ctx;
    constexpr std::size_t limit = 2000;
    std::unique_ptr<gsl_integration_workspace, decltype(&gsl_integration_workspace_free)> ws(
        gsl_integration_workspace_alloc(limit), &gsl_integration_workspace_free);
    double result = 0.0, err = 0.0;
    gsl_error_handler_t* old = gsl_set_error_handler_off();
    const int status = gsl_integration_qag(&g, lo, hi, abs_tol, rel_tol, limit, GSL_INTEG_GAUSS61, ws.get(), &result, &err);
    gsl_set_error_handler(old);
    if (status != GSL_SUCCESS && err > 1e-9)
        throw quadrature_error(std::string("adaptive quadrature failed: ") + gsl_strerror(status));
    return result;
}

/// E_{z ~ N(mean, sd^2)}[f(z)]: Gauss-Hermite with order doubling, falling
/// back to adaptive quadrature per component when the rule does not settle
/// (sharply saturating integrands).
inline std::vector<double> robust_gaussian_expectation(const std::function<std::vector<double>(double)>& f, double mean,
                                                       double sd, double tol = kQuadratureTolerance)
{
    try {
        return converged_gaussian_expectation(f, mean, sd, tol);
    } catch (const quadrature_error&) {
    }
    const std::size_t width = f(mean).size();
    std::vector<double> out(width);
    for (std::size_t k = 0; k < width; ++k)
        out[k] = adaptive_integral(
            [&](double u) {
                const double phi = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
                return phi * f(mean + sd * u)[k];
            },
            -40.0, 40.0);
    return out;
}

}  // namespace infobot::oracle
