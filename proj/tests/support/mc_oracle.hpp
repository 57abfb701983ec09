#pragma once

// Brute-force Monte-Carlo estimates of the bound-chain quantities. These share
// no code with the quadrature oracle and are used to cross-check it.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "infobot/oracle/bound_chain.hpp"

namespace infobot::mc {

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
};

inline double mc_log_normal(double z, double m, double s)
{
    const double u = (z - m) / s;
    return -0.5 * u * u - std::log(s) - 0.5 * std::log(2.0 * std::numbers::pi);
}

/// I(Z;G|S): average of log p(z|s,g) - log p(z|s) over (s, g, z) draws.
/// Terms are iid, so the standard error is sd / sqrt(n).
inline McEstimate mc_mi_latent(const oracle::TabularTask& task, std::size_t n, std::mt19937_64& rng)
{
    std::discrete_distribution<std::size_t> ds(task.p_state.begin(), task.p_state.end());
    std::discrete_distribution<std::size_t> dg(task.p_goal.begin(), task.p_goal.end());
    std::normal_distribution<double> eps(0.0, 1.0);
    std::vector<std::vector<oracle::Gaussian1D>> enc(task.states);
    for (std::size_t s = 0; s < task.states; ++s)
        for (std::size_t g = 0; g < task.goals; ++g) enc[s].push_back(task.encoder(s, g));
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t s = ds(rng), g = dg(rng);
        const double z = enc[s][g].mean + enc[s][g].sd * eps(rng);
        double mix = 0.0;
        for (std::size_t h = 0; h < task.goals; ++h) mix += task.p_goal[h] * std::exp(mc_log_normal(z, enc[s][h].mean, enc[s][h].sd));
        const double term = mc_log_normal(z, enc[s][g].mean, enc[s][g].sd) - std::log(mix);
        sum += term;
        sum2 += term * term;
    }
    const double m = sum / static_cast<double>(n);
    const double var = sum2 / static_cast<double>(n) - m * m;
    return {m, std::sqrt(std::max(var, 0.0) / static_cast<double>(n))};
}

/// Plug-in I(A;G|S) from summed decoder probabilities (Rao-Blackwellised over a).
inline double plugin_mi_action(const oracle::TabularTask& task, const std::vector<std::vector<double>>& sums,
                               const std::vector<double>& hits)
{
    double mi = 0.0;
    for (std::size_t s = 0; s < task.states; ++s) {
        std::vector<std::vector<double>> pi(task.goals);
        std::vector<double> pbar(task.actions, 0.0);
        for (std::size_t g = 0; g < task.goals; ++g) {
            pi[g] = sums[s * task.goals + g];
            for (std::size_t a = 0; a < task.actions; ++a) {
                pi[g][a] /= std::max(hits[s * task.goals + g], 1.0);
                pbar[a] += task.p_goal[g] * pi[g][a];
            }
        }
        for (std::size_t g = 0; g < task.goals; ++g)
            for (std::size_t a = 0; a < task.actions; ++a)
                if (pi[g][a] > 0.0) mi += task.p_state[s] * task.p_goal[g] * pi[g][a] * std::log(pi[g][a] / pbar[a]);
    }
    return mi;
}

/// I(A;G|S) from n sampled (s, g, z) triples. The estimate pools all draws;
/// the spread of per-batch estimates gives its standard error.
inline McEstimate mc_mi_action(const oracle::TabularTask& task, std::size_t n, std::mt19937_64& rng, std::size_t batches = 20)
{
    std::discrete_distribution<std::size_t> ds(task.p_state.begin(), task.p_state.end());
    std::discrete_distribution<std::size_t> dg(task.p_goal.begin(), task.p_goal.end());
    std::normal_distribution<double> eps(0.0, 1.0);
    const std::size_t cells = task.states * task.goals;
    std::vector<std::vector<double>> total(cells, std::vector<double>(task.actions, 0.0));
    std::vector<double> total_hits(cells, 0.0);
    std::vector<double> values;
    const std::size_t per_batch = n / batches;
    for (std::size_t b = 0; b < batches; ++b) {
        std::vector<std::vector<double>> sums(cells, std::vector<double>(task.actions, 0.0));
        std::vector<double> hits(cells, 0.0);
        for (std::size_t i = 0; i < per_batch; ++i) {
            const std::size_t s = ds(rng), g = dg(rng);
            const auto e = task.encoder(s, g);
            const auto p = task.decoder(s, e.mean + e.sd * eps(rng));
            for (std::size_t a = 0; a < task.actions; ++a) sums[s * task.goals + g][a] += p[a];
            hits[s * task.goals + g] += 1.0;
        }
        values.push_back(plugin_mi_action(task, sums, hits));
        for (std::size_t c = 0; c < cells; ++c) {
            total_hits[c] += hits[c];
            for (std::size_t a = 0; a < task.actions; ++a) total[c][a] += sums[c][a];
        }
    }
    double m = 0.0;
    for (double v : values) m += v / static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - m) * (v - m) / static_cast<double>(values.size() - 1);
    return {plugin_mi_action(task, total, total_hits), std::sqrt(var / static_cast<double>(values.size()))};
}

}  // namespace infobot::mc
