#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "infobot/envs/generators.hpp"
#include "infobot/envs/simulator.hpp"
#include "infobot/policy/policy.hpp"

namespace infobot::train {

/// One running episode, seen through the policy's numeric inputs.
class Episode {
public:
    virtual ~Episode() = default;
    virtual std::vector<double> observation() const = 0;
    virtual std::vector<double> goal() const = 0;
    virtual env::StepResult step(std::size_t action) = 0;
    virtual bool done() const = 0;
    virtual int max_steps() const = 0;
    /// Canonical visitation key of the current state.
    virtual std::string state_key() const = 0;
    /// Underlying gridworld state, when there is one.
    virtual const env::EnvState* grid_state() const { return nullptr; }
};

/// p(T): turns a level seed into a fresh episode.
class TaskSampler {
public:
    virtual ~TaskSampler() = default;
    virtual std::unique_ptr<Episode> make(std::uint64_t level_seed) const = 0;
    virtual std::size_t obs_width() const = 0;
    virtual std::size_t goal_width() const = 0;
    virtual std::size_t action_count() const = 0;
    virtual std::string name() const = 0;
};

struct StateKey {
    std::string level_token;
    int x = 0;
    int y = 0;
    int dir = 0;

    std::string str() const
    {
        return level_token + "|" + std::to_string(x) + "," + std::to_string(y) + "," + std::to_string(dir);
    }
};

inline StateKey state_key_of(const env::EnvState& s)
{
    return {s.level().token(), s.agent_pos().x, s.agent_pos().y, static_cast<int>(s.agent_dir())};
}

class GridEpisode final : public Episode {
public:
    GridEpisode(std::shared_ptr<const env::Level> level, env::EnvOptions options)
      : state_(std::move(level), options)
    { }

    std::vector<double> observation() const override { return policy::observation_features(env::observe(state_)); }

    std::vector<double> goal() const override
    {
        const auto g = env::goal_vector(env::goal_of(state_));
        return {g.begin(), g.end()};
    }

    env::StepResult step(std::size_t action) override
    {
        if (action >= static_cast<std::size_t>(env::kActionCount)) throw std::invalid_argument("grid episode: action out of range");
        return state_.step(static_cast<env::Action>(action));
    }

    bool done() const override { return state_.done(); }
    int max_steps() const override { return state_.max_steps(); }
    std::string state_key() const override { return state_key_of(state_).str(); }
    const env::EnvState* grid_state() const override { return &state_; }

private:
    env::EnvState state_;
};

class GridTaskSampler final : public TaskSampler {
public:
    explicit GridTaskSampler(env::LevelSpec spec, env::EnvOptions options = {},
                             std::optional<std::uint64_t> fixed_seed = std::nullopt)
      : spec_(spec),
        options_(options),
        fixed_seed_(fixed_seed)
    {
        view_ = env::generate(spec_, 0).view_size;
    }

    std::unique_ptr<Episode> make(std::uint64_t level_seed) const override
    {
        const std::uint64_t seed = fixed_seed_ ? *fixed_seed_ : level_seed;
        return std::make_unique<GridEpisode>(std::make_shared<const env::Level>(env::generate(spec_, seed)), options_);
    }

    std::size_t obs_width() const override { return policy::observation_width(view_); }
    std::size_t goal_width() const override { return env::kGoalWidth; }
    std::size_t action_count() const override { return env::kActionCount; }
    std::string name() const override { return env::generate(spec_, 0).token(); }
    const env::LevelSpec& spec() const { return spec_; }

private:
    env::LevelSpec spec_;
    env::EnvOptions options_;
    std::optional<std::uint64_t> fixed_seed_;
    int view_ = 3;
};

/// One-state contextual bandit: the goal (one of n, uniform) names the
/// single rewarded action. Episodes last one step.
class BanditEpisode final : public Episode {
public:
    BanditEpisode(std::size_t goal, std::size_t goals)
      : goal_(goal),
        goals_(goals)
    { }

    std::vector<double> observation() const override { return {1.0}; }

    std::vector<double> goal() const override
    {
        std::vector<double> g(goals_, 0.0);
        g[goal_] = 1.0;
        return g;
    }

    env::StepResult step(std::size_t action) override
    {
        if (done_) throw std::logic_error("step called on a finished episode");
        if (action >= goals_) throw std::invalid_argument("bandit: action out of range");
        done_ = true;
        return {action == goal_ ? 1.0 : 0.0, true};
    }

    bool done() const override { return done_; }
    int max_steps() const override { return 1; }
    std::string state_key() const override { return "bandit|0"; }
    std::size_t target() const { return goal_; }

private:
    std::size_t goal_;
    std::size_t goals_;
    bool done_ = false;
};

class BanditTaskSampler final : public TaskSampler {
public:
    explicit BanditTaskSampler(std::size_t goals = 2)
      : goals_(goals)
    { }

    std::unique_ptr<Episode> make(std::uint64_t level_seed) const override
    {
        std::mt19937_64 rng(level_seed);
        return std::make_unique<BanditEpisode>(static_cast<std::size_t>(rng() % goals_), goals_);
    }

    std::size_t obs_width() const override { return 1; }
    std::size_t goal_width() const override { return goals_; }
    std::size_t action_count() const override { return goals_; }
    std::string name() const override { return "bandit" + std::to_string(goals_); }

private:
    std::size_t goals_;
};

/// Policy shape matching a sampler's inputs; other fields from base.
inline policy::PolicyConfig policy_config_for(const TaskSampler& sampler, policy::PolicyConfig base)
{
    base.obs_width = sampler.obs_width();
    base.goal_width = sampler.goal_width();
    base.action_count = sampler.action_count();
    return base;
}

}  // namespace infobot::train
