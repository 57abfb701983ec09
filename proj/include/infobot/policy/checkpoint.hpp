#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "infobot/policy/policy.hpp"

namespace infobot::policy {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    Policy policy;
    std::string rng_state;  // std::mt19937_64 textual state
    nlohmann::json meta = nlohmann::json::object();
};

inline nlohmann::json config_to_json(const PolicyConfig& c)
{
    return {{"obs_width", c.obs_width},         {"goal_width", c.goal_width},         {"action_count", c.action_count},
            {"latent_dim", c.latent_dim},       {"encoder_hidden", c.encoder_hidden}, {"decoder_hidden", c.decoder_hidden},
            {"value_hidden", c.value_hidden},   {"memory_dim", c.memory_dim},         {"recurrent", c.recurrent}};
}

inline PolicyConfig config_from_json(const nlohmann::json& j)
{
    PolicyConfig c;
    c.obs_width = j.at("obs_width").get<std::size_t>();
    c.goal_width = j.at("goal_width").get<std::size_t>();
    c.action_count = j.at("action_count").get<std::size_t>();
    c.latent_dim = j.at("latent_dim").get<std::size_t>();
    c.encoder_hidden = j.at("encoder_hidden").get<std::size_t>();
    c.decoder_hidden = j.at("decoder_hidden").get<std::size_t>();
    c.value_hidden = j.at("value_hidden").get<std::size_t>();
    c.memory_dim = j.at("memory_dim").get<std::size_t>();
    c.recurrent = j.at("recurrent").get<bool>();
    return c;
}

inline std::string rng_to_string(const Rng& rng)
{
    std::ostringstream os;
    os << rng;
    return os.str();
}

inline Rng rng_from_string(const std::string& s)
{
    Rng rng;
    if (!s.empty()) {
        std::istringstream is(s);
        is >> rng;
        if (!is) throw std::invalid_argument("checkpoint: malformed rng state");
    }
    return rng;
}

/// JSON checkpoint. Doubles are written with max_digits10 precision, so
/// save/load is an exact round trip.
inline nlohmann::json checkpoint_to_json(const Checkpoint& ck)
{
    nlohmann::json j;
    j["format"] = "infobot-checkpoint";
    j["version"] = kCheckpointVersion;
    j["config"] = config_to_json(ck.policy.config());
    auto params = nlohmann::json::array();
    for (const auto& p : ck.policy.params())
        params.push_back({{"name", p.name}, {"shape", p.value.shape}, {"values", p.value.values}, {"accum", p.accum.values}});
    j["params"] = std::move(params);
    j["rng"] = ck.rng_state;
    j["meta"] = ck.meta;
    return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j)
{
    if (j.value("format", "") != "infobot-checkpoint") throw std::invalid_argument("checkpoint: not an infobot checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
        throw std::invalid_argument("checkpoint: unsupported version " + std::to_string(j.at("version").get<int>()));
    const PolicyConfig cfg = config_from_json(j.at("config"));
    ParamSet ps;
    for (const auto& e : j.at("params")) {
        const auto idx = ps.add(e.at("name").get<std::string>(),
                                Tensor(e.at("shape").get<std::vector<std::size_t>>(), e.at("values").get<std::vector<double>>()));
        ps[idx].accum = Tensor(ps[idx].value.shape, e.at("accum").get<std::vector<double>>());
    }
    Checkpoint ck{Policy(cfg, std::move(ps)), j.value("rng", ""), j.value("meta", nlohmann::json::object())};
    return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    out << checkpoint_to_json(ck).dump() << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path);
    return checkpoint_from_json(nlohmann::json::parse(in));
}

}  // namespace infobot::policy
