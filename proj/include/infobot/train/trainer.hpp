#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "infobot/numerics/gaussian.hpp"
#include "infobot/numerics/params.hpp"
#include "infobot/policy/policy.hpp"
#include "infobot/train/returns.hpp"
#include "infobot/train/task.hpp"

namespace infobot::train {

using num::Rng;
using num::Tape;
using num::Var;
using policy::Policy;
using policy::PolicyOutput;

inline constexpr std::uint64_t kTrainSeedBegin = 0;
inline constexpr std::uint64_t kTrainSeedEnd = 1'000'000;
inline constexpr std::uint64_t kEvalSeedBegin = 1'000'000;
inline constexpr std::uint64_t kEvalSeedEnd = 1'010'000;

struct TrainConfig {
    double beta = 0.01;
    double gamma = 0.99;
    double lr = 7e-4;
    double rms_decay = 0.99;
    double rms_eps = 1e-5;
    std::size_t workers = 8;
    std::size_t threads = 1;
    std::size_t total_episodes = 0;  // 0: no episode limit
    std::size_t total_steps = 0;     // 0: no env-step limit
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    double max_grad_norm = 0.5;  // 0 disables clipping
    bool value_baseline = true;
    KlSignMode kl_sign_mode = KlSignMode::consistent;
    std::uint64_t seed = 0;
    std::size_t log_every_episodes = 100;
    bool record_wall_clock = false;

    void validate() const
    {
        if (!(beta >= 0.0)) throw std::invalid_argument("train.beta must be >= 0");
        if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("train.gamma must be in (0, 1]");
        if (!(lr > 0.0)) throw std::invalid_argument("train.lr must be > 0");
        if (workers == 0) throw std::invalid_argument("train.workers must be >= 1");
        if (total_episodes == 0 && total_steps == 0)
            throw std::invalid_argument("train: set train.episodes or train.steps");
        if (entropy_coef < 0.0 || value_coef < 0.0 || max_grad_norm < 0.0)
            throw std::invalid_argument("train: coefficients must be nonnegative");
    }
};

struct Step {
    std::vector<double> obs;
    std::vector<double> goal;
    std::size_t action = 0;
    double log_prob = 0.0;
    double reward = 0.0;  // environment reward r_t
    double bonus = 0.0;   // exploration bonus added on top (phase 2)
    double kl = 0.0;
    double value = 0.0;
    double entropy = 0.0;
    bool done = false;
    num::Tensor noise;
};

struct Trajectory {
    std::vector<Step> steps;
    std::uint64_t level_seed = 0;
    bool success = false;

    std::size_t length() const { return steps.size(); }

    double env_return() const
    {
        double r = 0.0;
        for (const auto& s : steps) r += s.reward;
        return r;
    }

    std::vector<double> rewards() const
    {
        std::vector<double> r;
        r.reserve(steps.size());
        for (const auto& s : steps) r.push_back(s.reward + s.bonus);
        return r;
    }

    std::vector<double> kls() const
    {
        std::vector<double> k;
        k.reserve(steps.size());
        for (const auto& s : steps) k.push_back(s.kl);
        return k;
    }
};

inline std::vector<double> modified_returns(const Trajectory& traj, double beta, double gamma, KlSignMode mode)
{
    const auto r = traj.rewards();
    const auto k = traj.kls();
    return modified_returns(r, k, beta, gamma, mode);
}

/// Per-step reward shaping hook (the phase-2 exploration bonus). Calls for
/// different worker indices may arrive concurrently.
class StepBonus {
public:
    virtual ~StepBonus() = default;
    virtual void start_batch(std::size_t /*workers*/) { }
    virtual void begin_episode(std::size_t /*worker*/, const Episode& /*ep*/) { }
    /// Bonus for acting from the episode's current state (called once per state entry).
    virtual double on_state(std::size_t worker, const Episode& ep, std::span<const double> obs, std::span<const double> goal) = 0;
    virtual void end_batch() { }
};

/// A trajectory together with the tape its forward pass was recorded on.
struct Rollout {
    Tape tape;
    Trajectory traj;
    std::vector<PolicyOutput> outputs;
};

/// Runs one episode to termination, recording every act() on a fresh tape.
inline Rollout collect_rollout(Policy& snapshot, Episode& ep, Rng& rng, bool stochastic, StepBonus* bonus = nullptr,
                               std::size_t worker = 0)
{
    Rollout ro;
    Var memory = ro.tape.constant(snapshot.initial_memory());
    if (bonus) bonus->begin_episode(worker, ep);
    ro.traj.steps.reserve(static_cast<std::size_t>(ep.max_steps()));
    while (!ep.done()) {
        Step s;
        s.obs = ep.observation();
        s.goal = ep.goal();
        if (bonus) s.bonus = bonus->on_state(worker, ep, s.obs, s.goal);
        PolicyOutput out = snapshot.act(ro.tape, s.obs, s.goal, memory, rng, stochastic);
        const auto res = ep.step(out.action);
        s.action = out.action;
        s.log_prob = out.log_prob;
        s.kl = out.kl;
        s.value = out.value;
        s.entropy = out.entropy;
        s.reward = res.reward;
        s.done = res.done;
        s.noise = out.noise;
        if (res.reward > 0.0) ro.traj.success = true;
        memory = out.next_memory;
        ro.outputs.push_back(std::move(out));
        ro.traj.steps.push_back(std::move(s));
    }
    return ro;
}

/// Re-records a finished trajectory with its samples frozen. Used to build
/// the surrogate from scratch for gradient checks.
inline std::vector<PolicyOutput> replay_trajectory(Policy& policy, Tape& tape, const Trajectory& traj)
{
    std::vector<PolicyOutput> outs;
    Var memory = tape.constant(policy.initial_memory());
    Rng unused(0);
    for (const auto& s : traj.steps) {
        policy::ForcedSample forced{s.noise, s.action};
        outs.push_back(policy.act(tape, s.obs, s.goal, memory, unused, true, &forced));
        memory = outs.back().next_memory;
    }
    return outs;
}

struct SurrogateTargets {
    std::vector<double> returns;     // R~_t
    std::vector<double> advantages;  // R~_t - V(s_t), treated as constants
};

inline SurrogateTargets surrogate_targets(const Trajectory& traj, const TrainConfig& cfg)
{
    SurrogateTargets t;
    t.returns = modified_returns(traj, cfg.beta, cfg.gamma, cfg.kl_sign_mode);
    t.advantages.resize(t.returns.size());
    for (std::size_t i = 0; i < t.returns.size(); ++i)
        t.advantages[i] = t.returns[i] - (cfg.value_baseline ? traj.steps[i].value : 0.0);
    return t;
}

/// Sum over steps of
///   -A_t log pi(a_t | s_t, g_t) + beta KL_t + c_v (R~_t - V_t)^2 - c_e H_t.
/// Normalisation by the batch step count happens in the update.
inline Var surrogate_loss(Tape& tape, const std::vector<PolicyOutput>& outs, const SurrogateTargets& targets,
                          const TrainConfig& cfg)
{
    std::vector<std::pair<Var, double>> terms;
    terms.reserve(outs.size() * 4);
    for (std::size_t t = 0; t < outs.size(); ++t) {
        terms.emplace_back(outs[t].log_prob_var, -targets.advantages[t]);
        if (cfg.beta != 0.0) terms.emplace_back(outs[t].kl_var, cfg.beta);
        if (cfg.value_baseline && cfg.value_coef != 0.0) {
            const Var err = num::scale_shift(tape, outs[t].value_var, -1.0, targets.returns[t]);
            terms.emplace_back(num::square(tape, err), cfg.value_coef);
        }
        if (cfg.entropy_coef != 0.0) terms.emplace_back(outs[t].entropy_var, -cfg.entropy_coef);
    }
    return num::linear_combination(tape, std::move(terms));
}

struct MetricsRow {
    std::size_t step = 0;
    std::size_t episodes = 0;
    double success_rate = 0.0;
    double mean_return = 0.0;
    double mean_kl = 0.0;
    double mean_entropy = 0.0;
    double wall_clock_s = 0.0;
    double mean_bonus = 0.0;
    std::size_t distinct_states = 0;
};

inline std::string format_real(double v)
{
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

/// CSV metrics stream. The transfer variant appends mean_bonus and distinct_states.
class MetricsCsv {
public:
    MetricsCsv(std::ostream& out, bool transfer_columns)
      : out_(out),
        transfer_(transfer_columns)
    {
        out_ << "step,episodes,success_rate,mean_return,mean_kl,mean_entropy,wall_clock_s";
        if (transfer_) out_ << ",mean_bonus,distinct_states";
        out_ << '\n';
    }

    void write(const MetricsRow& r)
    {
        out_ << r.step << ',' << r.episodes << ',' << format_real(r.success_rate) << ',' << format_real(r.mean_return) << ','
             << format_real(r.mean_kl) << ',' << format_real(r.mean_entropy) << ',' << format_real(r.wall_clock_s);
        if (transfer_) out_ << ',' << format_real(r.mean_bonus) << ',' << r.distinct_states;
        out_ << '\n';
        out_.flush();
    }

private:
    std::ostream& out_;
    bool transfer_;
};

struct UpdateInfo {
    std::size_t update = 0;
    double loss = 0.0;  // mean per-step surrogate loss
    double grad_norm = 0.0;
    bool applied = false;
    std::size_t batch_steps = 0;
};

struct TrainHooks {
    std::function<void(const MetricsRow&)> on_metrics;
    std::function<void(const UpdateInfo&)> on_update;
    /// distinct-states counter for transfer metrics
    std::function<std::size_t()> distinct_states;
};

struct TrainResult {
    Policy policy;
    std::vector<MetricsRow> metrics;
    std::vector<double> losses;
    num::RmsPropStats optimizer;
    std::size_t env_steps = 0;
    std::size_t episodes = 0;
    Rng rng;
};

inline Rng worker_rng(std::uint64_t seed, std::size_t worker)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(worker), 0x1f0b07u};
    return Rng(seq);
}

/// Synchronous advantage actor-critic on the bottleneck surrogate: every
/// worker finishes one episode on its own parameter snapshot, gradients are
/// summed, averaged over batch steps, clipped and applied with RMSProp.
inline TrainResult run_actor_critic(const TrainConfig& cfg, const TaskSampler& sampler, Policy policy,
                                    StepBonus* bonus = nullptr, const TrainHooks& hooks = {})
{
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    TrainResult result;
    std::vector<Rng> rngs;
    for (std::size_t w = 0; w < cfg.workers; ++w) rngs.push_back(worker_rng(cfg.seed, w));
    std::uniform_int_distribution<std::uint64_t> level_dist(kTrainSeedBegin, kTrainSeedEnd - 1);
    num::RmsPropConfig opt{cfg.lr, cfg.rms_decay, cfg.rms_eps};

    struct Interval {
        std::size_t episodes = 0, successes = 0, steps = 0;
        double ret = 0.0, kl = 0.0, entropy = 0.0, bonus = 0.0;
    } interval;

    auto emit = [&] {
        if (interval.episodes == 0) return;
        MetricsRow row;
        row.step = result.env_steps;
        row.episodes = result.episodes;
        row.success_rate = static_cast<double>(interval.successes) / static_cast<double>(interval.episodes);
        row.mean_return = interval.ret / static_cast<double>(interval.episodes);
        row.mean_kl = interval.kl / static_cast<double>(interval.steps);
        row.mean_entropy = interval.entropy / static_cast<double>(interval.steps);
        row.mean_bonus = interval.bonus / static_cast<double>(interval.steps);
        row.wall_clock_s = cfg.record_wall_clock
                               ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
                               : 0.0;
        if (hooks.distinct_states) row.distinct_states = hooks.distinct_states();
        result.metrics.push_back(row);
        if (hooks.on_metrics) hooks.on_metrics(row);
        interval = {};
    };

    struct WorkerOut {
        Policy snapshot;
        Rollout rollout;
        double loss = 0.0;
    };

    std::size_t update_index = 0;
    auto budget_left = [&] {
        if (cfg.total_episodes && result.episodes >= cfg.total_episodes) return false;
        if (cfg.total_steps && result.env_steps >= cfg.total_steps) return false;
        return true;
    };

    while (budget_left()) {
        if (bonus) bonus->start_batch(cfg.workers);
        std::vector<WorkerOut> outs(cfg.workers);
        auto run_worker = [&](std::size_t w) {
            WorkerOut& wo = outs[w];
            wo.snapshot = policy;
            wo.snapshot.params().zero_grad();
            const std::uint64_t level_seed = level_dist(rngs[w]);
            auto ep = sampler.make(level_seed);
            wo.rollout = collect_rollout(wo.snapshot, *ep, rngs[w], true, bonus, w);
            wo.rollout.traj.level_seed = level_seed;
            const auto targets = surrogate_targets(wo.rollout.traj, cfg);
            const Var loss = surrogate_loss(wo.rollout.tape, wo.rollout.outputs, targets, cfg);
            wo.loss = wo.rollout.tape.item(loss);
            wo.rollout.tape.backward(loss);
            wo.rollout.tape.clear();
            wo.rollout.outputs.clear();
        };
        const std::size_t nthreads = std::max<std::size_t>(1, std::min(cfg.threads, cfg.workers));
        if (nthreads == 1) {
            for (std::size_t w = 0; w < cfg.workers; ++w) run_worker(w);
        } else {
            std::vector<std::thread> pool;
            for (std::size_t k = 0; k < nthreads; ++k)
                pool.emplace_back([&, k] {
                    for (std::size_t w = k; w < cfg.workers; w += nthreads) run_worker(w);
                });
            for (auto& th : pool) th.join();
        }
        if (bonus) bonus->end_batch();

        policy.params().zero_grad();
        std::size_t batch_steps = 0;
        double loss_sum = 0.0;
        for (auto& wo : outs) {
            policy.params().accumulate_grad(wo.snapshot.params());
            batch_steps += wo.rollout.traj.length();
            loss_sum += wo.loss;
            const auto& tr = wo.rollout.traj;
            ++result.episodes;
            result.env_steps += tr.length();
            ++interval.episodes;
            interval.successes += tr.success ? 1 : 0;
            interval.ret += tr.env_return();
            interval.steps += tr.length();
            for (const auto& s : tr.steps) {
                interval.kl += s.kl;
                interval.entropy += s.entropy;
                interval.bonus += s.bonus;
            }
        }
        policy.params().scale_grad(1.0 / static_cast<double>(batch_steps));
        UpdateInfo info;
        info.update = update_index++;
        info.loss = loss_sum / static_cast<double>(batch_steps);
        info.grad_norm = policy.params().grad_norm();
        info.batch_steps = batch_steps;
        if (!std::isfinite(info.loss)) {
            ++result.optimizer.skipped;
        } else {
            if (cfg.max_grad_norm > 0.0 && info.grad_norm > cfg.max_grad_norm && std::isfinite(info.grad_norm))
                policy.params().scale_grad(cfg.max_grad_norm / info.grad_norm);
            info.applied = num::rmsprop_step(policy.params(), opt, result.optimizer);
        }
        result.losses.push_back(info.loss);
        if (hooks.on_update) hooks.on_update(info);
        if (interval.episodes >= cfg.log_every_episodes) emit();
    }
    emit();
    result.policy = std::move(policy);
    result.rng = rngs.front();
    return result;
}

/// Phase 1: trains a fresh bottleneck policy on p_train.
inline TrainResult train_bottleneck_policy(const TrainConfig& cfg, const TaskSampler& sampler,
                                           const policy::PolicyConfig& arch, const TrainHooks& hooks = {})
{
    Policy fresh(policy_config_for(sampler, arch), cfg.seed * 7919 + 17);
    return run_actor_critic(cfg, sampler, std::move(fresh), nullptr, hooks);
}

}  // namespace infobot::train
