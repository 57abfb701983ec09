#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "infobot/policy/checkpoint.hpp"
#include "infobot/train/trainer.hpp"

namespace infobot::harness {

struct EpisodeRecord {
    std::uint64_t level_seed = 0;
    bool success = false;
    std::size_t length = 0;
};

struct EvalResult {
    double success_rate = 0.0;
    std::size_t episodes = 0;
    std::size_t successes = 0;
    double mean_length = 0.0;
    std::vector<EpisodeRecord> per_seed;

    nlohmann::json to_json() const
    {
        auto rows = nlohmann::json::array();
        for (const auto& r : per_seed) rows.push_back({{"level_seed", r.level_seed}, {"success", r.success}, {"length", r.length}});
        return {{"success_rate", success_rate}, {"episodes", episodes}, {"mean_length", mean_length}, {"per_seed", rows}};
    }
};

inline void check_architecture(const policy::PolicyConfig& c, const train::TaskSampler& sampler)
{
    if (c.obs_width != sampler.obs_width() || c.goal_width != sampler.goal_width() || c.action_count != sampler.action_count())
        throw std::invalid_argument("evaluate: checkpoint architecture (obs " + std::to_string(c.obs_width) + ", goal "
                                    + std::to_string(c.goal_width) + ", actions " + std::to_string(c.action_count)
                                    + ") does not match environment " + sampler.name() + " (obs "
                                    + std::to_string(sampler.obs_width()) + ", goal " + std::to_string(sampler.goal_width())
                                    + ", actions " + std::to_string(sampler.action_count()) + ")");
}

/// Greedy evaluation on the given level seeds. The latent noise is drawn from
/// an rng seeded by the level seed, so results do not depend on call order.
inline EvalResult evaluate(const policy::Policy& policy, const train::TaskSampler& sampler,
                           const std::vector<std::uint64_t>& level_seeds)
{
    check_architecture(policy.config(), sampler);
    if (level_seeds.empty()) throw std::invalid_argument("evaluate: no level seeds");
    policy::Policy p = policy;
    EvalResult r;
    std::size_t total_length = 0;
    for (auto seed : level_seeds) {
        auto ep = sampler.make(seed);
        num::Rng rng(seed);
        const auto ro = train::collect_rollout(p, *ep, rng, false);
        r.per_seed.push_back({seed, ro.traj.success, ro.traj.length()});
        r.successes += ro.traj.success ? 1 : 0;
        total_length += ro.traj.length();
    }
    r.episodes = level_seeds.size();
    r.success_rate = static_cast<double>(r.successes) / static_cast<double>(r.episodes);
    r.mean_length = static_cast<double>(total_length) / static_cast<double>(r.episodes);
    return r;
}

/// n held-out levels starting at the evaluation seed range.
inline std::vector<std::uint64_t> eval_seeds(std::size_t n)
{
    if (n > train::kEvalSeedEnd - train::kEvalSeedBegin) throw std::invalid_argument("evaluate: too many episodes for the held-out range");
    std::vector<std::uint64_t> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = train::kEvalSeedBegin + i;
    return s;
}

inline EvalResult evaluate(const policy::Policy& policy, const train::TaskSampler& sampler, std::size_t n_episodes)
{
    return evaluate(policy, sampler, eval_seeds(n_episodes));
}

inline EvalResult evaluate_checkpoint(const std::string& path, const train::TaskSampler& sampler, std::size_t n_episodes)
{
    return evaluate(policy::load_checkpoint(path).policy, sampler, n_episodes);
}

}  // namespace infobot::harness
