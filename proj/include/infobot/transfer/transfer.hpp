#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "infobot/policy/checkpoint.hpp"
#include "infobot/policy/policy.hpp"
#include "infobot/train/trainer.hpp"

namespace infobot::transfer {

using num::Tape;
using num::Tensor;
using policy::Policy;
using policy::PolicyConfig;

/// State -> visit count c(S). Unseen keys count as 1.
class VisitationTable {
public:
    std::uint64_t count(const std::string& key) const
    {
        auto it = visits_.find(key);
        return 1 + (it == visits_.end() ? 0 : it->second);
    }

    /// Increments and returns the post-increment count.
    std::uint64_t visit(const std::string& key) { return 1 + ++visits_[key]; }

    void add(const std::string& key, std::uint64_t increments)
    {
        if (increments) visits_[key] += increments;
    }

    /// Keys visited at least once.
    std::size_t distinct() const { return visits_.size(); }

    std::uint64_t total_visits() const
    {
        std::uint64_t n = 0;
        for (const auto& [k, v] : visits_) n += v;
        return n;
    }

    const std::unordered_map<std::string, std::uint64_t>& visits() const { return visits_; }

private:
    std::unordered_map<std::string, std::uint64_t> visits_;
};

/// Frozen phase-1 trunk + encoder against the fixed unit prior. The decoder
/// weights are never evaluated.
class FrozenBonusModel {
public:
    explicit FrozenBonusModel(Policy trained)
      : policy_(std::make_shared<Policy>(std::move(trained)))
    { }

    static FrozenBonusModel from_checkpoint(const std::string& path)
    {
        return FrozenBonusModel(policy::load_checkpoint(path).policy);
    }

    const PolicyConfig& config() const { return policy_->config(); }
    Tensor initial_memory() const { return policy_->initial_memory(); }

    struct Encoded {
        double kl;
        Tensor next_memory;
    };

    /// KL[p_enc(Z | s, g) || q(Z | s)] and the advanced memory.
    Encoded kl(std::span<const double> obs, std::span<const double> goal, const Tensor& memory) const
    {
        Tape t;
        const auto [state, next] = policy_->trunk(t, policy_->input_row(t, obs, config().obs_width, "observation"),
                                                  t.constant(memory));
        const auto enc = policy_->encode_state(t, state, policy_->input_row(t, goal, config().goal_width, "goal"));
        return {t.item(num::gaussian_kl(t, enc)), t.value(next)};
    }

    /// Parameter values, for immutability checks.
    const num::ParamSet& params() const { return policy_->params(); }

private:
    std::shared_ptr<Policy> policy_;
};

/// (beta / sqrt(count)) * kl.
inline double bonus(double beta, double kl, std::uint64_t count)
{
    if (count < 1) throw std::invalid_argument("bonus: count must be >= 1");
    return beta / std::sqrt(static_cast<double>(count)) * kl;
}

inline double bonus(const FrozenBonusModel& model, double beta, std::span<const double> obs, std::span<const double> goal,
                    const Tensor& memory, std::uint64_t count)
{
    return bonus(beta, model.kl(obs, goal, memory).kl, count);
}

inline double combined_reward(double env_reward, double bonus_value) { return env_reward + bonus_value; }

enum class BonusMode { infobot_kl, count_only, none };

inline BonusMode bonus_mode_from_string(const std::string& s)
{
    if (s == "infobot_kl") return BonusMode::infobot_kl;
    if (s == "count_only") return BonusMode::count_only;
    if (s == "none") return BonusMode::none;
    throw std::invalid_argument("unknown bonus mode '" + s + "'");
}

inline std::string to_string(BonusMode m)
{
    switch (m) {
    case BonusMode::infobot_kl: return "infobot_kl";
    case BonusMode::count_only: return "count_only";
    case BonusMode::none: return "none";
    }
    return "?";
}

/// Count-decayed exploration bonus as a trainer hook. Each worker counts into
/// its own shard; shards are merged into the shared table at the update
/// boundary, in worker order. Visits are counted in every mode so the
/// distinct-state metric is comparable across modes.
class ExplorationBonus final : public train::StepBonus {
public:
    ExplorationBonus(BonusMode mode, double beta, const FrozenBonusModel* frozen)
      : mode_(mode),
        beta_(beta),
        frozen_(frozen)
    {
        if (beta < 0.0) throw std::invalid_argument("transfer: bonus beta must be >= 0");
        if (mode == BonusMode::infobot_kl && !frozen) throw std::invalid_argument("transfer: infobot_kl needs a frozen model");
    }

    void start_batch(std::size_t workers) override
    {
        shards_.assign(workers, {});
        memory_.assign(workers, {});
        episode_bonus_.assign(workers, 0.0);
        decay_sum_.assign(workers, 0.0);
        max_kl_.assign(workers, 0.0);
    }

    void begin_episode(std::size_t worker, const train::Episode&) override
    {
        if (frozen_) memory_[worker] = frozen_->initial_memory();
        episode_bonus_[worker] = 0.0;
        decay_sum_[worker] = 0.0;
        max_kl_[worker] = 0.0;
    }

    double on_state(std::size_t worker, const train::Episode& ep, std::span<const double> obs,
                    std::span<const double> goal) override
    {
        const std::string key = ep.state_key();
        auto& shard = shards_[worker];
        const std::uint64_t pre = table_.count(key) + shard[key];
        ++shard[key];
        double kl = 0.0;
        switch (mode_) {
        case BonusMode::none: break;
        case BonusMode::count_only: kl = 1.0; break;
        case BonusMode::infobot_kl: {
            auto enc = frozen_->kl(obs, goal, memory_[worker]);
            memory_[worker] = std::move(enc.next_memory);
            kl = enc.kl;
            break;
        }
        }
        const double b = mode_ == BonusMode::none ? 0.0 : bonus(beta_, kl, pre);
        if (!std::isfinite(b) || b < 0.0) throw std::logic_error("exploration bonus is not a finite nonnegative number");
        episode_bonus_[worker] += b;
        // episode total <= beta * sum 1/sqrt(c) * max KL
        decay_sum_[worker] += beta_ / std::sqrt(static_cast<double>(pre));
        max_kl_[worker] = std::max(max_kl_[worker], kl);
        if (episode_bonus_[worker] > decay_sum_[worker] * max_kl_[worker] * (1.0 + 1e-12) + 1e-300)
            throw std::logic_error("exploration bonus exceeds its per-episode bound");
        return b;
    }

    void end_batch() override
    {
        for (const auto& shard : shards_)
            for (const auto& [key, n] : shard) table_.add(key, n);
        shards_.clear();
    }

    const VisitationTable& table() const { return table_; }
    BonusMode mode() const { return mode_; }

private:
    BonusMode mode_;
    double beta_;
    const FrozenBonusModel* frozen_;
    VisitationTable table_;
    std::vector<std::unordered_map<std::string, std::uint64_t>> shards_;
    std::vector<Tensor> memory_;
    std::vector<double> episode_bonus_;
    std::vector<double> decay_sum_;
    std::vector<double> max_kl_;
};

struct TransferConfig {
    BonusMode mode = BonusMode::infobot_kl;
    double beta = 0.1;
};

struct TransferResult {
    train::TrainResult train;
    VisitationTable visits;
};

/// Phase 2: a fresh goal-conditioned actor-critic (its own bottleneck off,
/// beta = 0) trained on p_test with the frozen model's bonus added to the
/// environment reward.
inline TransferResult train_transfer_policy(train::TrainConfig cfg, const TransferConfig& tcfg,
                                            const FrozenBonusModel* frozen, const train::TaskSampler& sampler,
                                            const PolicyConfig& arch, train::TrainHooks hooks = {})
{
    cfg.beta = 0.0;
    const PolicyConfig shaped = train::policy_config_for(sampler, arch);
    if (frozen && tcfg.mode == BonusMode::infobot_kl
        && (frozen->config().obs_width != shaped.obs_width || frozen->config().goal_width != shaped.goal_width))
        throw std::invalid_argument("transfer: frozen model input widths do not match the test environment");
    ExplorationBonus shaper(tcfg.mode, tcfg.beta, tcfg.mode == BonusMode::infobot_kl ? frozen : nullptr);
    hooks.distinct_states = [&shaper] { return shaper.table().distinct(); };
    Policy fresh(shaped, cfg.seed * 7919 + 17);
    TransferResult out{train::run_actor_critic(cfg, sampler, std::move(fresh), &shaper, hooks), {}};
    out.visits = shaper.table();
    return out;
}

}  // namespace infobot::transfer
