#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "infobot/numerics/gaussian.hpp"
#include "infobot/oracle/quadrature.hpp"

namespace infobot::oracle {

struct Gaussian1D {
    double mean = 0.0;
    double sd = 1.0;
};

/// Tiny discrete task with a 1-D latent: the policy is given exactly by an
/// encoder (s, g) -> N(mean, sd^2) and a decoder (s, z) -> action distribution.
struct TabularTask {
    std::size_t states = 1;
    std::size_t goals = 2;
    std::size_t actions = 2;
    std::vector<double> p_state;
    std::vector<double> p_goal;
    std::function<Gaussian1D(std::size_t, std::size_t)> encoder;
    std::function<std::vector<double>(std::size_t, double)> decoder;

    void validate() const
    {
        if (states * goals > 64) throw std::invalid_argument("tabular task: |S|*|G| exceeds 64");
        auto is_prob = [](const std::vector<double>& p, std::size_t n) {
            if (p.size() != n) return false;
            double s = 0.0;
            for (double x : p) {
                if (x < 0.0) return false;
                s += x;
            }
            return std::abs(s - 1.0) < 1e-9;
        };
        if (!is_prob(p_state, states) || !is_prob(p_goal, goals))
            throw std::invalid_argument("tabular task: p(s) and p(g) must be probability vectors");
        if (!encoder || !decoder) throw std::invalid_argument("tabular task: encoder and decoder required");
    }
};

inline std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

/// pi(a | s, g) = E_{z ~ p_enc(z|s,g)} p_dec(a | s, z), indexed [s][g][a].
inline std::vector<std::vector<std::vector<double>>> action_marginals(const TabularTask& task)
{
    std::vector<std::vector<std::vector<double>>> pi(task.states, std::vector<std::vector<double>>(task.goals));
    for (std::size_t s = 0; s < task.states; ++s)
        for (std::size_t g = 0; g < task.goals; ++g) {
            const auto enc = task.encoder(s, g);
            pi[s][g] = robust_gaussian_expectation([&](double z) { return task.decoder(s, z); }, enc.mean, enc.sd);
        }
    return pi;
}

inline double plogq(double p, double q) { return p > 0.0 ? p * std::log(p / q) : 0.0; }

/// I(A; G | S) with z marginalised by quadrature.
inline double exact_mi_action(const TabularTask& task)
{
    task.validate();
    const auto pi = action_marginals(task);
    double mi = 0.0;
    for (std::size_t s = 0; s < task.states; ++s) {
        std::vector<double> pbar(task.actions, 0.0);
        for (std::size_t g = 0; g < task.goals; ++g)
            for (std::size_t a = 0; a < task.actions; ++a) pbar[a] += task.p_goal[g] * pi[s][g][a];
        double inner = 0.0;
        for (std::size_t g = 0; g < task.goals; ++g)
            for (std::size_t a = 0; a < task.actions; ++a) inner += task.p_goal[g] * plogq(pi[s][g][a], pbar[a]);
        mi += task.p_state[s] * inner;
    }
    return mi;
}

inline double normal_logpdf(double z, double mean, double sd)
{
    const double u = (z - mean) / sd;
    return -0.5 * u * u - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

/// log p(z | s) for the goal mixture sum_g p(g) N(z; mu_sg, sd_sg^2), via log-sum-exp.
inline double log_mixture(const std::vector<Gaussian1D>& comps, const std::vector<double>& weights, double z)
{
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(comps.size());
    for (std::size_t g = 0; g < comps.size(); ++g) {
        terms[g] = weights[g] > 0.0 ? std::log(weights[g]) + normal_logpdf(z, comps[g].mean, comps[g].sd)
                                    : -std::numeric_limits<double>::infinity();
        mx = std::max(mx, terms[g]);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - mx);
    return mx + std::log(acc);
}

/// I(Z; G | S) for the 1-D Gaussian encoder. The component entropy is closed
/// form; the cross term E_{N_g}[log p(z|s)] is integrated numerically
/// (Gauss-Hermite with order doubling, adaptive Gauss-Kronrod fallback).
inline double exact_mi_latent(const TabularTask& task)
{
    task.validate();
    double mi = 0.0;
    for (std::size_t s = 0; s < task.states; ++s) {
        std::vector<Gaussian1D> comps(task.goals);
        for (std::size_t g = 0; g < task.goals; ++g) {
            comps[g] = task.encoder(s, g);
            if (!(comps[g].sd >= 1e-3)) throw std::invalid_argument("exact_mi_latent: encoder sd must be >= 1e-3");
        }
        double inner = 0.0;
        for (std::size_t g = 0; g < task.goals; ++g) {
            if (task.p_goal[g] == 0.0) continue;
            const auto& c = comps[g];
            const double neg_entropy = -0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * c.sd * c.sd);
            double cross = 0.0;
            try {
                cross = converged_gaussian_expectation(
                            [&](double z) { return std::vector<double>{log_mixture(comps, task.p_goal, z)}; }, c.mean,
                            c.sd)[0];
            } catch (const quadrature_error&) {
                cross = adaptive_integral(
                    [&](double u) {
                        const double z = c.mean + c.sd * u;
                        return std::exp(normal_logpdf(u, 0.0, 1.0)) * log_mixture(comps, task.p_goal, z);
                    },
                    -40.0, 40.0);
            }
            inner += task.p_goal[g] * (neg_entropy - cross);
        }
        mi += task.p_state[s] * inner;
    }
    return mi;
}

/// sum_s p(s) sum_g p(g) KL[p_enc(z | s, g) || N(0, 1)].
inline double expected_kl_penalty(const TabularTask& task)
{
    task.validate();
    double total = 0.0;
    for (std::size_t s = 0; s < task.states; ++s)
        for (std::size_t g = 0; g < task.goals; ++g) {
            const auto c = task.encoder(s, g);
            const double m[1] = {c.mean}, ls[1] = {std::log(c.sd)};
            total += task.p_state[s] * task.p_goal[g] * num::unit_gaussian_kl(m, ls);
        }
    return total;
}

inline constexpr double kBoundTolerance = 1e-6;

struct BoundReport {
    double i_ag_s = 0.0;
    double i_zg_s = 0.0;
    double expected_kl = 0.0;
    double tolerance = kBoundTolerance;
    bool dpi_pass = false;          // I(A;G|S) <= I(Z;G|S) + tol
    bool variational_pass = false;  // I(Z;G|S) <= E[KL] + tol
    bool pass = false;

    nlohmann::json to_json() const
    {
        return {{"i_ag_s", i_ag_s},           {"i_zg_s", i_zg_s}, {"expected_kl", expected_kl}, {"tolerance", tolerance},
                {"dpi_pass", dpi_pass}, {"variational_pass", variational_pass}, {"pass", pass}};
    }
};

/// Checks I(A;G|S) <= I(Z;G|S) <= E[KL]. Failures are report contents.
inline BoundReport verify_bound_chain(const TabularTask& task, double tol = kBoundTolerance)
{
    BoundReport r;
    r.tolerance = tol;
    r.i_ag_s = exact_mi_action(task);
    r.i_zg_s = exact_mi_latent(task);
    r.expected_kl = expected_kl_penalty(task);
    r.dpi_pass = r.i_ag_s <= r.i_zg_s + tol;
    r.variational_pass = r.i_zg_s <= r.expected_kl + tol;
    r.pass = r.dpi_pass && r.variational_pass;
    return r;
}

/// Randomised task whose decoder is a per-state one-hidden-layer tanh net in z.
struct RandomTaskSpec {
    std::size_t max_states = 8;
    std::size_t max_goals = 4;
    std::size_t max_actions = 4;
    std::size_t hidden = 4;
};

inline TabularTask random_task(std::mt19937_64& rng, const RandomTaskSpec& spec = {})
{
    std::uniform_int_distribution<std::size_t> ns(1, spec.max_states), ng(2, spec.max_goals), na(2, spec.max_actions);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    TabularTask t;
    t.states = ns(rng);
    t.goals = ng(rng);
    t.actions = na(rng);
    t.p_state = uniform(t.states);
    t.p_goal.resize(t.goals);
    double sum = 0.0;
    for (double& p : t.p_goal) sum += (p = 0.2 + u01(rng));
    for (double& p : t.p_goal) p /= sum;

    auto enc = std::make_shared<std::vector<Gaussian1D>>(t.states * t.goals);
    for (auto& c : *enc) c = {-2.0 + 4.0 * u01(rng), 0.2 + 1.3 * u01(rng)};
    const std::size_t h = spec.hidden, a = t.actions;
    // per state: w[h], b[h], v[a][h], c[a]
    const std::size_t per_state = 2 * h + a * h + a;
    auto dec = std::make_shared<std::vector<double>>(t.states * per_state);
    std::normal_distribution<double> nrm(0.0, 1.5);
    for (double& x : *dec) x = nrm(rng);
    const std::size_t goals = t.goals;
    t.encoder = [enc, goals](std::size_t s, std::size_t g) { return (*enc)[s * goals + g]; };
    t.decoder = [dec, h, a, per_state](std::size_t s, double z) {
        const double* p = dec->data() + s * per_state;
        std::vector<double> hid(h), logits(a);
        for (std::size_t j = 0; j < h; ++j) hid[j] = std::tanh(p[j] * z + p[h + j]);
        for (std::size_t k = 0; k < a; ++k) {
            double l = p[2 * h + a * h + k];
            for (std::size_t j = 0; j < h; ++j) l += p[2 * h + k * h + j] * hid[j];
            logits[k] = l;
        }
        return num::softmax(logits);
    };
    return t;
}

}  // namespace infobot::oracle
