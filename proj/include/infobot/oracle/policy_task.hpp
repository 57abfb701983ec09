#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "infobot/oracle/bound_chain.hpp"
#include "infobot/policy/policy.hpp"

namespace infobot::oracle {

/// Views a non-recurrent, 1-D-latent policy as a TabularTask over the given
/// state and goal inputs.
inline TabularTask task_from_policy(const policy::Policy& pol, std::vector<std::vector<double>> state_inputs,
                                    std::vector<std::vector<double>> goal_inputs, std::vector<double> p_goal = {})
{
    if (pol.config().latent_dim != 1) throw std::invalid_argument("task_from_policy: latent must be 1-D");
    if (pol.config().recurrent) throw std::invalid_argument("task_from_policy: recurrent policies are not tabular");
    auto shared = std::make_shared<policy::Policy>(pol);
    auto states = std::make_shared<std::vector<std::vector<double>>>(std::move(state_inputs));
    auto goals = std::make_shared<std::vector<std::vector<double>>>(std::move(goal_inputs));
    TabularTask t;
    t.states = states->size();
    t.goals = goals->size();
    t.actions = pol.config().action_count;
    t.p_state = uniform(t.states);
    t.p_goal = p_goal.empty() ? uniform(t.goals) : std::move(p_goal);

    // encoder outputs do not depend on z, so they are computed once up front
    auto enc = std::make_shared<std::vector<Gaussian1D>>();
    for (std::size_t s = 0; s < t.states; ++s)
        for (std::size_t g = 0; g < t.goals; ++g) {
            num::Tape tape;
            const auto e = shared->encode(tape, (*states)[s], (*goals)[g], tape.constant(shared->initial_memory()));
            enc->push_back({tape.item(e.mean), std::exp(tape.item(e.log_std))});
        }
    const std::size_t ng = t.goals;
    t.encoder = [enc, ng](std::size_t s, std::size_t g) { return (*enc)[s * ng + g]; };
    t.decoder = [shared, states](std::size_t s, double z) {
        num::Tape tape;
        const double zs[1] = {z};
        const auto d = shared->decode(tape, (*states)[s], zs, tape.constant(shared->initial_memory()));
        return num::softmax(tape.value(d.logits).values);
    };
    return t;
}

}  // namespace infobot::oracle
