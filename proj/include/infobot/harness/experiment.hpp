#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>
#include <openssl/evp.h>

#include "infobot/envs/level_io.hpp"
#include "infobot/harness/config.hpp"
#include "infobot/harness/evaluate.hpp"
#include "infobot/harness/maps.hpp"
#include "infobot/oracle/bound_chain.hpp"

#ifndef INFOBOT_VERSION
#define INFOBOT_VERSION "0.0.0"
#endif
#ifndef INFOBOT_GIT_DESCRIBE
#define INFOBOT_GIT_DESCRIBE "unknown"
#endif

namespace infobot::harness {

namespace fs = std::filesystem;

inline std::string version_string() { return std::string(INFOBOT_VERSION) + "+" + INFOBOT_GIT_DESCRIBE; }

inline std::string sha256_hex(const std::string& bytes)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256: digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

inline std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& p, const std::string& bytes)
{
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << bytes;
}

inline nlohmann::json visits_to_json(const transfer::VisitationTable& t)
{
    nlohmann::json j = nlohmann::json::object();  // std::map backed: keys come out sorted
    for (const auto& [k, v] : t.visits()) j[k] = v;
    return j;
}

inline transfer::VisitationTable visits_from_json(const nlohmann::json& j)
{
    transfer::VisitationTable t;
    for (const auto& [k, v] : j.items()) t.add(k, v.get<std::uint64_t>());
    return t;
}

/// What a command should do beyond the config file.
enum class Command { phase, heatmap, visitmap };

struct Overrides {
    std::optional<Phase> phase;
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
    std::string extra;  // further `key = value` lines
};

struct ExperimentOutcome {
    int exit_code = 0;
    fs::path artifact_dir;
    std::string message;
};

namespace detail {

inline nlohmann::json checkpoint_meta(const ExperimentConfig& c, std::uint64_t seed, const train::TrainResult& r,
                                      const train::TaskSampler& sampler)
{
    return {{"phase", to_string(c.phase)}, {"seed", seed}, {"env", sampler.name()}, {"episodes", r.episodes}, {"env_steps", r.env_steps}};
}

inline env::Level map_level(const ExperimentConfig& c)
{
    if (c.test_env.bandit) throw config_error("maps: heatmap and visitmap need a gridworld test_env");
    return env::generate(c.test_env.level, c.test_env.fixed_seed.value_or(c.map_level_seed));
}

inline void run_seed(const ExperimentConfig& c, Command cmd, std::uint64_t seed, const fs::path& dir, std::ostream& log)
{
    fs::create_directories(dir);
    train::TrainConfig tc = c.train;
    tc.seed = seed;
    const auto train_sampler = make_sampler(c.train_env);
    const auto test_sampler = make_sampler(c.test_env);

    if (cmd == Command::heatmap) {
        const auto model = transfer::FrozenBonusModel::from_checkpoint(c.checkpoint_for(seed));
        const auto level = map_level(c);
        const auto heat = export_kl_heatmap(model, level);
        write_file(dir / "level.txt", env::serialize_level(level));
        write_file(dir / "heatmap.csv", heat.to_csv());
        if (c.map_pgm) write_file(dir / "heatmap.pgm", heat.to_pgm());
        nlohmann::json summary = {{"level", level.token()}};
        try {
            const auto dc = doorway_contrast(heat, level);
            summary["doorway_mean"] = dc.doorway_mean;
            summary["corridor_mean"] = dc.corridor_mean;
            summary["doorway_cells"] = dc.doorway_cells;
            summary["corridor_cells"] = dc.corridor_cells;
            summary["ratio"] = dc.ratio();
        } catch (const std::invalid_argument&) {
            summary["ratio"] = nullptr;
        }
        write_file(dir / "heatmap.json", summary.dump(2) + "\n");
        log << "seed " << seed << ": heatmap " << level.token() << '\n';
        return;
    }
    if (cmd == Command::visitmap) {
        if (c.visits.empty()) throw config_error("maps.visits: required for visitmap");
        const auto level = map_level(c);
        const auto table = visits_from_json(nlohmann::json::parse(read_file(c.visits_for(seed))));
        write_file(dir / "level.txt", env::serialize_level(level));
        write_file(dir / "visitmap.csv", export_visitation_map(table, level).to_csv());
        log << "seed " << seed << ": visitmap " << level.token() << '\n';
        return;
    }

    auto write_eval = [&](const policy::Policy& p) {
        if (!c.eval_episodes) return;
        const auto r = evaluate(p, *test_sampler, c.eval_episodes);
        write_file(dir / "eval.json", r.to_json().dump(2) + "\n");
        log << "seed " << seed << ": eval on " << test_sampler->name() << " success " << r.success_rate << '\n';
    };

    switch (c.phase) {
    case Phase::train: {
        std::ofstream csv(dir / "metrics.csv", std::ios::binary);
        train::MetricsCsv writer(csv, false);
        train::TrainHooks hooks;
        hooks.on_metrics = [&](const train::MetricsRow& r) { writer.write(r); };
        const auto res = train::train_bottleneck_policy(tc, *train_sampler, c.arch, hooks);
        policy::save_checkpoint({res.policy, policy::rng_to_string(res.rng), checkpoint_meta(c, seed, res, *train_sampler)},
                                (dir / "checkpoint.json").string());
        log << "seed " << seed << ": trained " << res.episodes << " episodes, " << res.env_steps << " steps\n";
        write_eval(res.policy);
        break;
    }
    case Phase::transfer: {
        std::optional<transfer::FrozenBonusModel> frozen;
        if (c.transfer.mode == transfer::BonusMode::infobot_kl)
            frozen.emplace(transfer::FrozenBonusModel::from_checkpoint(c.checkpoint_for(seed)));
        std::ofstream csv(dir / "metrics.csv", std::ios::binary);
        train::MetricsCsv writer(csv, true);
        train::TrainHooks hooks;
        hooks.on_metrics = [&](const train::MetricsRow& r) { writer.write(r); };
        const auto res = transfer::train_transfer_policy(tc, c.transfer, frozen ? &*frozen : nullptr, *test_sampler, c.arch, hooks);
        policy::save_checkpoint({res.train.policy, policy::rng_to_string(res.train.rng),
                                 checkpoint_meta(c, seed, res.train, *test_sampler)},
                                (dir / "checkpoint.json").string());
        write_file(dir / "visits.json", visits_to_json(res.visits).dump() + "\n");
        log << "seed " << seed << ": transfer (" << transfer::to_string(c.transfer.mode) << ") " << res.train.env_steps
            << " steps, " << res.visits.distinct() << " distinct states\n";
        write_eval(res.train.policy);
        break;
    }
    case Phase::evaluate: {
        const auto r = evaluate(policy::load_checkpoint(c.checkpoint_for(seed)).policy, *test_sampler, c.eval_episodes);
        write_file(dir / "eval.json", r.to_json().dump(2) + "\n");
        log << "seed " << seed << ": success " << r.success_rate << " over " << r.episodes << " episodes\n";
        break;
    }
    case Phase::oracle: {
        std::mt19937_64 rng(seed);
        std::size_t passed = 0;
        for (std::size_t i = 0; i < c.oracle_tasks; ++i) {
            const auto rep = oracle::verify_bound_chain(oracle::random_task(rng));
            passed += rep.pass ? 1 : 0;
            char name[32];
            std::snprintf(name, sizeof name, "task_%04zu.json", i);
            write_file(dir / "oracle" / name, rep.to_json().dump(2) + "\n");
        }
        write_file(dir / "oracle_summary.json",
                   nlohmann::json{{"tasks", c.oracle_tasks}, {"passed", passed}, {"all_pass", passed == c.oracle_tasks}}.dump(2) + "\n");
        log << "seed " << seed << ": bound chain " << passed << "/" << c.oracle_tasks << '\n';
        if (passed != c.oracle_tasks) throw std::runtime_error("oracle: bound chain failed on " + std::to_string(c.oracle_tasks - passed) + " tasks");
        break;
    }
    }
}

inline void write_manifest(const ExperimentConfig& c, const std::string& command, const fs::path& out, const std::string& status,
                           const std::string& error)
{
    std::map<std::string, std::string> hashes;
    if (fs::exists(out))
        for (const auto& e : fs::recursive_directory_iterator(out)) {
            if (!e.is_regular_file()) continue;
            const auto rel = fs::relative(e.path(), out).generic_string();
            if (rel == "manifest.json") continue;
            hashes[rel] = sha256_hex(read_file(e.path()));
        }
    nlohmann::json j = {{"version", version_string()}, {"command", command},          {"phase", to_string(c.phase)},
                        {"config_sha256", sha256_hex(c.text)}, {"seeds", c.seeds}, {"status", status},
                        {"artifacts", hashes}};
    if (!error.empty()) j["error"] = error;
    write_file(out / "manifest.json", j.dump(2) + "\n");
}

}  // namespace detail

/// Runs one command for every configured seed. Artifacts go to
/// <output_dir>/seed_<s>/; the manifest records the config hash, the version
/// and the SHA-256 of every artifact. Exit 2: invalid config, 1: runtime
/// failure (partial artifacts and a "failed" manifest are kept), 0: success.
inline ExperimentOutcome run_experiment(const std::string& config_path, const Overrides& ov = {}, Command cmd = Command::phase,
                                        std::ostream& log = std::cerr)
{
    ExperimentOutcome outcome;
    ExperimentConfig c;
    try {
        std::string over;
        if (ov.phase) over += "phase = " + to_string(*ov.phase) + "\n";
        if (ov.output_dir) over += "output_dir = " + *ov.output_dir + "\n";
        if (ov.seed) over += "seeds = " + std::to_string(*ov.seed) + "\n";
        over += ov.extra;
        c = load_config(config_path, over);
        if (cmd == Command::phase) check_checkpoints(c);
        if (cmd == Command::heatmap && c.checkpoint.empty()) throw config_error("checkpoint: required for heatmap");
        if (cmd == Command::visitmap && c.visits.empty()) throw config_error("maps.visits: required for visitmap");
    } catch (const std::exception& e) {
        outcome.exit_code = 2;
        outcome.message = std::string("invalid config: ") + e.what();
        log << outcome.message << '\n';
        return outcome;
    }

    const fs::path out = c.output_dir;
    outcome.artifact_dir = out;
    const std::string command = cmd == Command::heatmap ? "heatmap" : cmd == Command::visitmap ? "visitmap" : to_string(c.phase);
    try {
        fs::create_directories(out);
        write_file(out / "config.cfg", c.text);
        for (auto seed : c.seeds) detail::run_seed(c, cmd, seed, out / ("seed_" + std::to_string(seed)), log);
        detail::write_manifest(c, command, out, "ok", "");
    } catch (const config_error& e) {
        outcome.exit_code = 2;
        outcome.message = std::string("invalid config: ") + e.what();
    } catch (const std::exception& e) {
        outcome.exit_code = 1;
        outcome.message = std::string("run failed: ") + e.what();
    }
    if (outcome.exit_code) {
        log << outcome.message << '\n';
        try {
            detail::write_manifest(c, command, out, "failed", outcome.message);
        } catch (const std::exception&) {
        }
    }
    return outcome;
}

}  // namespace infobot::harness
