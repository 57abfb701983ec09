#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace infobot::train {

/// How the KL term enters the per-step reward.
///   consistent:    r~ = r - beta * KL  (the penalised objective)
///   paper_literal: r~ = r + beta * KL  (sign as printed next to the update rule)
enum class KlSignMode { consistent, paper_literal };

inline KlSignMode kl_sign_mode_from_string(const std::string& s)
{
    if (s == "consistent") return KlSignMode::consistent;
    if (s == "paper_literal") return KlSignMode::paper_literal;
    throw std::invalid_argument("unknown kl_sign_mode '" + s + "'");
}

inline std::string to_string(KlSignMode m) { return m == KlSignMode::consistent ? "consistent" : "paper_literal"; }

/// R~_t = r~_t + gamma * R~_{t+1}, with R~_T+1 = 0.
inline std::vector<double> modified_returns(std::span<const double> rewards, std::span<const double> kls, double beta,
                                            double gamma, KlSignMode mode = KlSignMode::consistent)
{
    if (rewards.empty()) throw std::invalid_argument("modified_returns: empty trajectory");
    if (rewards.size() != kls.size()) throw std::invalid_argument("modified_returns: reward/kl length mismatch");
    const double sign = mode == KlSignMode::consistent ? -1.0 : 1.0;
    std::vector<double> out(rewards.size());
    double running = 0.0;
    for (std::size_t t = rewards.size(); t-- > 0;) {
        running = rewards[t] + sign * beta * kls[t] + gamma * running;
        out[t] = running;
    }
    return out;
}

}  // namespace infobot::train
