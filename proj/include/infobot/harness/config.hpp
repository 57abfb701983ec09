#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/program_options.hpp>

#include "infobot/envs/generators.hpp"
#include "infobot/train/trainer.hpp"
#include "infobot/transfer/transfer.hpp"

namespace infobot::harness {

/// Invalid configuration; maps to exit code 2.
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Phase { train, transfer, evaluate, oracle };

inline Phase phase_from_string(const std::string& s)
{
    if (s == "train") return Phase::train;
    if (s == "transfer") return Phase::transfer;
    if (s == "evaluate") return Phase::evaluate;
    if (s == "oracle") return Phase::oracle;
    throw config_error("phase: unknown value '" + s + "' (train|transfer|evaluate|oracle)");
}

inline std::string to_string(Phase p)
{
    switch (p) {
    case Phase::train: return "train";
    case Phase::transfer: return "transfer";
    case Phase::evaluate: return "evaluate";
    case Phase::oracle: return "oracle";
    }
    return "?";
}

/// Either a gridworld family or the two-goal bandit fixture.
struct EnvSpec {
    bool bandit = false;
    std::size_t bandit_goals = 2;
    env::LevelSpec level;
    std::optional<std::uint64_t> fixed_seed;
    env::EnvOptions options;
};

struct ExperimentConfig {
    Phase phase = Phase::train;
    EnvSpec train_env;
    EnvSpec test_env;
    train::TrainConfig train;
    policy::PolicyConfig arch;
    transfer::TransferConfig transfer;
    std::string checkpoint;  // phase-1 checkpoint for transfer / evaluate, "{seed}" is substituted
    std::size_t eval_episodes = 0;
    std::size_t oracle_tasks = 100;
    std::uint64_t map_level_seed = train::kEvalSeedBegin;  // heatmap / visitmap level
    bool map_pgm = false;
    std::string visits;  // visitation table written by a transfer run, "{seed}" is substituted
    std::string output_dir = "out";
    std::vector<std::uint64_t> seeds{1};
    std::string text;  // canonical source text, hashed into the manifest

    std::string checkpoint_for(std::uint64_t seed) const { return with_seed(checkpoint, seed); }
    std::string visits_for(std::uint64_t seed) const { return with_seed(visits, seed); }

    static std::string with_seed(std::string p, std::uint64_t seed)
    {
        const std::string tag = "{seed}";
        for (auto pos = p.find(tag); pos != std::string::npos; pos = p.find(tag)) p.replace(pos, tag.size(), std::to_string(seed));
        return p;
    }
};

namespace detail {

namespace po = boost::program_options;

inline po::options_description config_options()
{
    po::options_description d;
    // clang-format off
    d.add_options()
        ("phase", po::value<std::string>()->default_value("train"))
        ("seeds", po::value<std::string>()->default_value("1"))
        ("output_dir", po::value<std::string>()->default_value("out"))
        ("env.family", po::value<std::string>()->default_value("multiroom"))
        ("env.n", po::value<int>()->default_value(2))
        ("env.s", po::value<int>()->default_value(4))
        ("env.goals", po::value<std::size_t>()->default_value(2))
        ("env.fixed_seed", po::value<std::uint64_t>())
        ("env.time_discounted_reward", po::value<bool>()->default_value(false))
        ("test_env.family", po::value<std::string>())
        ("test_env.n", po::value<int>())
        ("test_env.s", po::value<int>())
        ("test_env.goals", po::value<std::size_t>())
        ("test_env.fixed_seed", po::value<std::uint64_t>())
        ("train.beta", po::value<double>()->default_value(0.01))
        ("train.gamma", po::value<double>()->default_value(0.99))
        ("train.lr", po::value<double>()->default_value(7e-4))
        ("train.rms_decay", po::value<double>()->default_value(0.99))
        ("train.rms_eps", po::value<double>()->default_value(1e-5))
        ("train.workers", po::value<std::size_t>()->default_value(8))
        ("train.threads", po::value<std::size_t>()->default_value(1))
        ("train.episodes", po::value<std::size_t>()->default_value(0))
        ("train.steps", po::value<std::size_t>()->default_value(0))
        ("train.entropy_coef", po::value<double>()->default_value(0.01))
        ("train.value_coef", po::value<double>()->default_value(0.5))
        ("train.max_grad_norm", po::value<double>()->default_value(0.5))
        ("train.value_baseline", po::value<bool>()->default_value(true))
        ("train.kl_sign_mode", po::value<std::string>()->default_value("consistent"))
        ("train.log_every", po::value<std::size_t>()->default_value(100))
        ("train.wall_clock", po::value<bool>()->default_value(false))
        ("policy.latent_dim", po::value<std::size_t>()->default_value(64))
        ("policy.encoder_hidden", po::value<std::size_t>()->default_value(128))
        ("policy.decoder_hidden", po::value<std::size_t>()->default_value(128))
        ("policy.value_hidden", po::value<std::size_t>()->default_value(128))
        ("policy.memory_dim", po::value<std::size_t>()->default_value(128))
        ("policy.recurrent", po::value<bool>()->default_value(true))
        ("transfer.mode", po::value<std::string>()->default_value("infobot_kl"))
        ("transfer.beta", po::value<double>()->default_value(0.1))
        ("checkpoint", po::value<std::string>()->default_value(""))
        ("evaluate.episodes", po::value<std::size_t>()->default_value(0))
        ("oracle.tasks", po::value<std::size_t>()->default_value(100))
        ("maps.level_seed", po::value<std::uint64_t>()->default_value(train::kEvalSeedBegin))
        ("maps.pgm", po::value<bool>()->default_value(false))
        ("maps.visits", po::value<std::string>()->default_value(""));
    // clang-format on
    return d;
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& s)
{
    std::vector<std::uint64_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw config_error("seeds: empty entry in '" + s + "'");
        item = item.substr(b, e - b + 1);
        std::size_t used = 0;
        std::uint64_t v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || item.front() == '-') throw config_error("seeds: '" + item + "' is not a non-negative integer");
        out.push_back(v);
    }
    if (out.empty()) throw config_error("seeds: list must be nonempty");
    return out;
}

inline EnvSpec env_spec(const po::variables_map& vm, const std::string& section, const EnvSpec* fallback)
{
    auto has = [&](const std::string& k) { return vm.count(section + "." + k) > 0; };
    EnvSpec e = fallback ? *fallback : EnvSpec{};
    if (fallback) e.fixed_seed.reset();
    const std::string family = has("family") ? vm[section + ".family"].as<std::string>()
                                             : (fallback ? (fallback->bandit ? "bandit" : env::to_string(fallback->level.family))
                                                         : "multiroom");
    if (family == "bandit") {
        e.bandit = true;
    } else {
        e.bandit = false;
        try {
            e.level.family = env::family_from_string(family);
        } catch (const std::invalid_argument&) {
            throw config_error(section + ".family: unknown value '" + family + "' (multiroom|findobj|minipacman|bandit)");
        }
    }
    if (has("n")) e.level.a = vm[section + ".n"].as<int>();
    if (has("s")) e.level.b = vm[section + ".s"].as<int>();
    if (has("goals")) e.bandit_goals = vm[section + ".goals"].as<std::size_t>();
    if (has("fixed_seed")) e.fixed_seed = vm[section + ".fixed_seed"].as<std::uint64_t>();
    if (e.bandit && e.bandit_goals < 2) throw config_error(section + ".goals: must be >= 2");
    if (!e.bandit) {
        try {
            (void)env::generate(e.level, 0);
        } catch (const std::exception& ex) {
            throw config_error(section + ": invalid size parameters n=" + std::to_string(e.level.a) + " s="
                               + std::to_string(e.level.b) + " (" + ex.what() + ")");
        }
    }
    return e;
}

}  // namespace detail

/// Parses the flat `key = value` format (`#` comments, dotted sections).
/// Unknown keys, malformed values and out-of-range settings throw config_error.
/// overrides are `key = value` lines that win over the text.
inline ExperimentConfig parse_config(const std::string& text, const std::string& overrides = "")
{
    namespace po = boost::program_options;
    po::variables_map vm;
    const auto options = detail::config_options();
    try {
        // the first stored value of a key wins
        std::istringstream over(overrides), in(text);
        po::store(po::parse_config_file(over, options, false), vm);
        po::store(po::parse_config_file(in, options, false), vm);
        po::notify(vm);
    } catch (const po::error& e) {
        throw config_error(e.what());
    }

    ExperimentConfig c;
    c.text = overrides.empty() ? text : text + "\n# overrides\n" + overrides;
    c.phase = phase_from_string(vm["phase"].as<std::string>());
    c.seeds = detail::parse_seed_list(vm["seeds"].as<std::string>());
    c.output_dir = vm["output_dir"].as<std::string>();
    c.train_env = detail::env_spec(vm, "env", nullptr);
    c.train_env.options.time_discounted_reward = vm["env.time_discounted_reward"].as<bool>();
    c.test_env = detail::env_spec(vm, "test_env", &c.train_env);
    c.test_env.options = c.train_env.options;

    auto& t = c.train;
    t.beta = vm["train.beta"].as<double>();
    t.gamma = vm["train.gamma"].as<double>();
    t.lr = vm["train.lr"].as<double>();
    t.rms_decay = vm["train.rms_decay"].as<double>();
    t.rms_eps = vm["train.rms_eps"].as<double>();
    t.workers = vm["train.workers"].as<std::size_t>();
    t.threads = vm["train.threads"].as<std::size_t>();
    t.total_episodes = vm["train.episodes"].as<std::size_t>();
    t.total_steps = vm["train.steps"].as<std::size_t>();
    t.entropy_coef = vm["train.entropy_coef"].as<double>();
    t.value_coef = vm["train.value_coef"].as<double>();
    t.max_grad_norm = vm["train.max_grad_norm"].as<double>();
    t.value_baseline = vm["train.value_baseline"].as<bool>();
    try {
        t.kl_sign_mode = train::kl_sign_mode_from_string(vm["train.kl_sign_mode"].as<std::string>());
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("train.kl_sign_mode: ") + e.what());
    }
    t.log_every_episodes = vm["train.log_every"].as<std::size_t>();
    t.record_wall_clock = vm["train.wall_clock"].as<bool>();
    if (c.phase == Phase::train || c.phase == Phase::transfer) {
        if (!t.total_episodes && !t.total_steps) throw config_error("train.episodes / train.steps: one budget must be > 0");
        try {
            t.validate();
        } catch (const std::invalid_argument& e) {
            throw config_error(std::string("train: ") + e.what());
        }
    }

    auto& a = c.arch;
    a.latent_dim = vm["policy.latent_dim"].as<std::size_t>();
    a.encoder_hidden = vm["policy.encoder_hidden"].as<std::size_t>();
    a.decoder_hidden = vm["policy.decoder_hidden"].as<std::size_t>();
    a.value_hidden = vm["policy.value_hidden"].as<std::size_t>();
    a.memory_dim = vm["policy.memory_dim"].as<std::size_t>();
    a.recurrent = vm["policy.recurrent"].as<bool>();
    try {
        a.validate();
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("policy: ") + e.what());
    }

    try {
        c.transfer.mode = transfer::bonus_mode_from_string(vm["transfer.mode"].as<std::string>());
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("transfer.mode: ") + e.what());
    }
    c.transfer.beta = vm["transfer.beta"].as<double>();
    if (!(c.transfer.beta >= 0.0)) throw config_error("transfer.beta: must be >= 0");
    c.checkpoint = vm["checkpoint"].as<std::string>();
    c.eval_episodes = vm["evaluate.episodes"].as<std::size_t>();
    c.oracle_tasks = vm["oracle.tasks"].as<std::size_t>();
    c.map_level_seed = vm["maps.level_seed"].as<std::uint64_t>();
    c.map_pgm = vm["maps.pgm"].as<bool>();
    c.visits = vm["maps.visits"].as<std::string>();

    if (c.phase == Phase::evaluate && c.eval_episodes == 0) throw config_error("evaluate.episodes: must be > 0 for the evaluate phase");
    if (c.eval_episodes > train::kEvalSeedEnd - train::kEvalSeedBegin)
        throw config_error("evaluate.episodes: at most " + std::to_string(train::kEvalSeedEnd - train::kEvalSeedBegin));
    if (c.phase == Phase::oracle && c.oracle_tasks == 0) throw config_error("oracle.tasks: must be > 0");
    const bool needs_checkpoint = c.phase == Phase::evaluate || (c.phase == Phase::transfer && c.transfer.mode == transfer::BonusMode::infobot_kl);
    if (needs_checkpoint && c.checkpoint.empty()) throw config_error("checkpoint: required for the " + to_string(c.phase) + " phase");
    return c;
}

inline ExperimentConfig load_config(const std::string& path, const std::string& overrides = "")
{
    std::ifstream in(path);
    if (!in) throw config_error("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), overrides);
}

/// Checkpoints named by the config must exist before a run starts.
inline void check_checkpoints(const ExperimentConfig& c)
{
    if (c.checkpoint.empty()) return;
    if (c.phase != Phase::evaluate && !(c.phase == Phase::transfer && c.transfer.mode == transfer::BonusMode::infobot_kl)) return;
    for (auto s : c.seeds) {
        const auto p = c.checkpoint_for(s);
        if (!std::ifstream(p)) throw config_error("checkpoint: file '" + p + "' does not exist");
    }
}

inline std::unique_ptr<train::TaskSampler> make_sampler(const EnvSpec& e)
{
    if (e.bandit) return std::make_unique<train::BanditTaskSampler>(e.bandit_goals);
    return std::make_unique<train::GridTaskSampler>(e.level, e.options, e.fixed_seed);
}

}  // namespace infobot::harness
