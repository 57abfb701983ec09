#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "infobot/envs/simulator.hpp"
#include "infobot/numerics/gaussian.hpp"
#include "infobot/numerics/params.hpp"
#include "infobot/numerics/tape.hpp"

namespace infobot::policy {

using num::GaussianParams;
using num::ParamSet;
using num::Rng;
using num::Tape;
using num::Tensor;
using num::Var;

struct PolicyConfig {
    std::size_t obs_width = 3 * 3 * 3 + 4;
    std::size_t goal_width = env::kGoalWidth;
    std::size_t action_count = env::kActionCount;
    std::size_t latent_dim = 64;
    std::size_t encoder_hidden = 128;
    std::size_t decoder_hidden = 128;
    std::size_t value_hidden = 128;
    std::size_t memory_dim = 128;
    bool recurrent = true;

    void validate() const
    {
        if (latent_dim < 1) throw std::invalid_argument("policy: latent_dim must be >= 1");
        if (!obs_width || !goal_width || !action_count || !encoder_hidden || !decoder_hidden || !value_hidden
            || (recurrent && !memory_dim))
            throw std::invalid_argument("policy: all layer sizes must be positive");
    }

    /// Width of the state features fed to the heads.
    std::size_t state_width() const { return recurrent ? memory_dim : obs_width; }

    friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

/// Observation channels scaled into [0, 1] followed by a one-hot heading.
inline std::vector<double> observation_features(const env::Observation& obs)
{
    std::vector<double> f;
    f.reserve(obs.data.size() + 4);
    for (std::size_t i = 0; i < obs.data.size(); i += 3) {
        f.push_back(obs.data[i] / static_cast<double>(env::kObjectCount - 1));
        f.push_back(obs.data[i + 1] / static_cast<double>(env::kColorCount - 1));
        f.push_back(obs.data[i + 2]);
    }
    for (int d = 0; d < 4; ++d) f.push_back(static_cast<int>(obs.agent_dir) == d ? 1.0 : 0.0);
    return f;
}

inline std::size_t observation_width(int view) { return static_cast<std::size_t>(view * view * 3 + 4); }

/// Per-step quantities of one act() call. Var handles live on the tape passed to act().
struct PolicyOutput {
    std::size_t action = 0;
    double log_prob = 0.0;
    double kl = 0.0;
    double value = 0.0;
    double entropy = 0.0;
    Tensor noise;  // the epsilon behind the latent sample
    Var log_prob_var;
    Var kl_var;
    Var value_var;
    Var entropy_var;
    Var latent;
    GaussianParams encoding;
    Var next_memory;
};

/// Samples to replay instead of drawing: used for gradient checks and replays.
struct ForcedSample {
    Tensor noise;
    std::size_t action;
};

/// Goal-conditioned bottleneck policy: optional GRU trunk, Gaussian encoder
/// over the goal, decoder over actions, and a value head. Copying a Policy
/// snapshots its parameters.
class Policy {
public:
    Policy() = default;

    Policy(PolicyConfig cfg, std::uint64_t init_seed)
      : cfg_(cfg)
    {
        cfg_.validate();
        Rng rng(init_seed);
        const std::size_t s = cfg_.state_width();
        auto layer = [&](const std::string& name, std::size_t in, std::size_t out, double gain) {
            params_.add(name + ".w", num::glorot_uniform(in, out, rng, gain));
            params_.add(name + ".b", Tensor({1, out}, 0.0));
        };
        if (cfg_.recurrent) {
            const std::size_t xh = cfg_.obs_width + cfg_.memory_dim;
            layer("gru.reset", xh, cfg_.memory_dim, 1.0);
            layer("gru.update", xh, cfg_.memory_dim, 1.0);
            layer("gru.cand_x", cfg_.obs_width, cfg_.memory_dim, 1.0);
            layer("gru.cand_h", cfg_.memory_dim, cfg_.memory_dim, 1.0);
        }
        layer("enc.hidden", s + cfg_.goal_width, cfg_.encoder_hidden, 1.0);
        layer("enc.mean", cfg_.encoder_hidden, cfg_.latent_dim, 0.1);
        layer("enc.log_std", cfg_.encoder_hidden, cfg_.latent_dim, 0.1);
        layer("dec.hidden", s + cfg_.latent_dim, cfg_.decoder_hidden, 1.0);
        layer("dec.logits", cfg_.decoder_hidden, cfg_.action_count, 0.01);
        layer("val.h1", s + cfg_.goal_width, cfg_.value_hidden, 1.0);
        layer("val.h2", cfg_.value_hidden, cfg_.value_hidden, 1.0);
        layer("val.out", cfg_.value_hidden, 1, 1.0);
        index_layers();
    }

    /// Rebuilds from a saved parameter set (checkpoint load).
    Policy(PolicyConfig cfg, ParamSet params)
      : cfg_(cfg),
        params_(std::move(params))
    {
        cfg_.validate();
        index_layers();
        Policy reference(cfg_, 0);
        if (reference.params_.size() != params_.size()) throw std::invalid_argument("policy: parameter count mismatch");
        for (std::size_t i = 0; i < params_.size(); ++i)
            if (reference.params_[i].name != params_[i].name || reference.params_[i].value.shape != params_[i].value.shape)
                throw std::invalid_argument("policy: parameter '" + params_[i].name + "' does not match the config");
    }

    const PolicyConfig& config() const { return cfg_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    Tensor initial_memory() const { return Tensor({1, cfg_.recurrent ? cfg_.memory_dim : 1}, 0.0); }

    Var input_row(Tape& t, std::span<const double> xs, std::size_t expected, const char* what) const
    {
        if (xs.size() != expected)
            throw num::shape_error(std::string("policy: ") + what + " width " + std::to_string(xs.size()) + ", expected "
                                   + std::to_string(expected));
        return t.constant(Tensor::row({xs.begin(), xs.end()}));
    }

    /// State features and advanced memory. Non-recurrent policies pass the
    /// observation through and leave memory untouched.
    std::pair<Var, Var> trunk(Tape& t, Var obs, Var memory)
    {
        if (!cfg_.recurrent) return {obs, memory};
        const Var xh = num::concat(t, {obs, memory});
        const Var r = num::sigmoid(t, dense(t, layers_.gru_reset, xh));
        const Var u = num::sigmoid(t, dense(t, layers_.gru_update, xh));
        const Var hx = dense(t, layers_.gru_cand_x, obs);
        const Var hh = dense(t, layers_.gru_cand_h, memory);
        const Var n = num::tanh(t, num::add(t, hx, num::mul(t, r, hh)));
        // h' = n + u * (h - n)
        const Var h = num::add(t, n, num::mul(t, u, num::sub(t, memory, n)));
        return {h, h};
    }

    GaussianParams encode_state(Tape& t, Var state, Var goal)
    {
        const Var e = num::tanh(t, dense(t, layers_.enc_hidden, num::concat(t, {state, goal})));
        const Var mean = dense(t, layers_.enc_mean, e);
        const Var log_std = num::clamp(t, dense(t, layers_.enc_log_std, e), num::kLogStdMin, num::kLogStdMax);
        return {mean, log_std};
    }

    Var decode_state(Tape& t, Var state, Var z)
    {
        const Var d = num::tanh(t, dense(t, layers_.dec_hidden, num::concat(t, {state, z})));
        return dense(t, layers_.dec_logits, d);
    }

    Var value_state(Tape& t, Var state, Var goal)
    {
        const Var h1 = num::tanh(t, dense(t, layers_.val_h1, num::concat(t, {state, goal})));
        const Var h2 = num::tanh(t, dense(t, layers_.val_h2, h1));
        return dense(t, layers_.val_out, h2);
    }

    /// p_enc(Z | S, G) from raw inputs.
    GaussianParams encode(Tape& t, std::span<const double> obs, std::span<const double> goal, Var memory)
    {
        const auto [state, next] = trunk(t, input_row(t, obs, cfg_.obs_width, "observation"), memory);
        return encode_state(t, state, input_row(t, goal, cfg_.goal_width, "goal"));
    }

    /// Fixed unit-Gaussian q(Z | S); independent of the observation.
    std::pair<std::vector<double>, std::vector<double>> prior() const
    {
        return {std::vector<double>(cfg_.latent_dim, 0.0), std::vector<double>(cfg_.latent_dim, 0.0)};
    }

    struct Decoded {
        Var logits;
        Var next_memory;
    };

    /// p_dec(A | S, Z) logits from raw inputs.
    Decoded decode(Tape& t, std::span<const double> obs, std::span<const double> z, Var memory)
    {
        const auto [state, next] = trunk(t, input_row(t, obs, cfg_.obs_width, "observation"), memory);
        return {decode_state(t, state, input_row(t, z, cfg_.latent_dim, "latent")), next};
    }

    /// One policy step: encode, reparameterised latent draw, decode, value.
    /// Everything that carries gradient is recorded on t.
    PolicyOutput act(Tape& t, std::span<const double> obs, std::span<const double> goal, Var memory, Rng& rng,
                     bool stochastic, const ForcedSample* forced = nullptr)
    {
        PolicyOutput out;
        const auto [state, next] = trunk(t, input_row(t, obs, cfg_.obs_width, "observation"), memory);
        const Var g = input_row(t, goal, cfg_.goal_width, "goal");
        out.encoding = encode_state(t, state, g);
        out.noise = forced ? forced->noise : Tensor({1, cfg_.latent_dim}, num::standard_normal(rng, cfg_.latent_dim));
        out.latent = num::reparam_sample(t, out.encoding, out.noise);
        const Var logits = decode_state(t, state, out.latent);
        const Var logp = num::log_softmax(t, logits);
        const auto& lv = t.value(logits).values;
        if (forced) {
            if (forced->action >= cfg_.action_count) throw std::invalid_argument("policy: forced action out of range");
            out.action = forced->action;
        } else if (stochastic) {
            out.action = num::categorical_sample(lv, rng).index;
        } else {
            out.action = num::argmax(lv);
        }
        out.log_prob_var = num::pick(t, logp, 0, out.action);
        out.kl_var = num::gaussian_kl(t, out.encoding);
        out.value_var = value_state(t, state, g);
        out.entropy_var = num::softmax_entropy(t, logits);
        out.next_memory = next;
        out.log_prob = t.item(out.log_prob_var);
        out.kl = t.item(out.kl_var);
        out.value = t.item(out.value_var);
        out.entropy = t.item(out.entropy_var);
        return out;
    }

    /// Monte-Carlo estimate of the goal-marginalised default policy: average
    /// of softmax(decode(s, z)) over z drawn from the prior. Analysis only.
    std::vector<double> marginal_action_dist(std::span<const double> obs, const Tensor& memory, Rng& rng,
                                             std::size_t n_samples)
    {
        if (n_samples < 1) throw std::invalid_argument("marginal_action_dist: need at least one sample");
        Tape t;
        const auto [state, next] = trunk(t, input_row(t, obs, cfg_.obs_width, "observation"), t.constant(memory));
        // copy: pushing further nodes may reallocate tape storage
        const std::vector<double> sv = t.value(state).values;
        std::vector<double> rep;
        rep.reserve(n_samples * sv.size());
        for (std::size_t i = 0; i < n_samples; ++i) rep.insert(rep.end(), sv.begin(), sv.end());
        const Var states = t.constant(Tensor::matrix(n_samples, sv.size(), std::move(rep)));
        const Var zs = t.constant(Tensor::matrix(n_samples, cfg_.latent_dim, num::standard_normal(rng, n_samples * cfg_.latent_dim)));
        const Var logits = decode_state(t, states, zs);
        const Tensor& lv = t.value(logits);
        std::vector<double> avg(cfg_.action_count, 0.0);
        for (std::size_t r = 0; r < n_samples; ++r) {
            const auto p = num::softmax(std::span(&lv.values[r * cfg_.action_count], cfg_.action_count));
            for (std::size_t a = 0; a < avg.size(); ++a) avg[a] += p[a] / static_cast<double>(n_samples);
        }
        return avg;
    }

private:
    struct LayerIdx {
        std::size_t w = 0, b = 0;
    };
    struct Layers {
        LayerIdx gru_reset, gru_update, gru_cand_x, gru_cand_h;
        LayerIdx enc_hidden, enc_mean, enc_log_std, dec_hidden, dec_logits, val_h1, val_h2, val_out;
    };

    void index_layers()
    {
        auto find = [&](const std::string& name) {
            auto w = params_.find(name + ".w");
            auto b = params_.find(name + ".b");
            if (!w || !b) throw std::invalid_argument("policy: missing layer " + name);
            return LayerIdx{*w, *b};
        };
        if (cfg_.recurrent) {
            layers_.gru_reset = find("gru.reset");
            layers_.gru_update = find("gru.update");
            layers_.gru_cand_x = find("gru.cand_x");
            layers_.gru_cand_h = find("gru.cand_h");
        }
        layers_.enc_hidden = find("enc.hidden");
        layers_.enc_mean = find("enc.mean");
        layers_.enc_log_std = find("enc.log_std");
        layers_.dec_hidden = find("dec.hidden");
        layers_.dec_logits = find("dec.logits");
        layers_.val_h1 = find("val.h1");
        layers_.val_h2 = find("val.h2");
        layers_.val_out = find("val.out");
    }

    Var dense(Tape& t, LayerIdx l, Var x) { return num::affine(t, x, t.param(params_[l.w]), t.param(params_[l.b])); }

    PolicyConfig cfg_;
    ParamSet params_;
    Layers layers_;
};

}  // namespace infobot::policy
