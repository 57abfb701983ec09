// Acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "infobot/harness/experiment.hpp"
#include "infobot/numerics/finite_difference.hpp"
#include "infobot/oracle/policy_task.hpp"
#include "support/mc_oracle.hpp"

#ifndef INFOBOT_SOURCE_DIR
#define INFOBOT_SOURCE_DIR "."
#endif

using namespace infobot;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Context {
    fs::path configs;
    fs::path work;
    bool verbose = false;
};

// ---------------------------------------------------------------- criterion 1

double mc_unit_kl(double mean, double sd, std::size_t n, std::mt19937_64& rng)
{
    std::normal_distribution<double> eps(0.0, 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = eps(rng);
        const double z = mean + sd * e;
        acc += (-0.5 * e * e - std::log(sd)) - (-0.5 * z * z);
    }
    return acc / static_cast<double>(n);
}

Verdict criterion_numerics(const Context&)
{
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> small(2, 5), fam(0, 2);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        policy::PolicyConfig arch;
        arch.latent_dim = static_cast<std::size_t>(small(rng)) - 1;
        arch.encoder_hidden = static_cast<std::size_t>(small(rng));
        arch.decoder_hidden = static_cast<std::size_t>(small(rng));
        arch.value_hidden = static_cast<std::size_t>(small(rng));
        arch.memory_dim = static_cast<std::size_t>(small(rng));
        arch.recurrent = u01(rng) < 0.5;
        const int f = fam(rng);
        const env::LevelSpec spec = f == 0 ? env::LevelSpec{env::Family::multiroom, 2, 4}
                                    : f == 1 ? env::LevelSpec{env::Family::minipacman, 6, 6}
                                             : env::LevelSpec{env::Family::multiroom, 3, 5};
        train::GridTaskSampler sampler(spec);
        policy::Policy p(train::policy_config_for(sampler, arch), rng());
        num::Rng act_rng(rng());
        auto ep = sampler.make(rng() % 100000);
        train::Rollout ro = train::collect_rollout(p, *ep, act_rng, true);
        if (ro.traj.steps.size() > 8) ro.traj.steps.resize(8);
        ro.traj.steps.back().reward = 1.0;
        train::TrainConfig cfg;
        cfg.beta = 0.5 * u01(rng);
        cfg.gamma = 0.8 + 0.2 * u01(rng);
        cfg.entropy_coef = 0.05 * u01(rng);
        cfg.value_coef = 0.25 + 0.5 * u01(rng);
        cfg.total_episodes = 1;
        const auto targets = train::surrogate_targets(ro.traj, cfg);
        auto loss_of = [&](num::Tape& t) { return train::surrogate_loss(t, train::replay_trajectory(p, t, ro.traj), targets, cfg); };
        p.params().zero_grad();
        num::Tape t;
        t.backward(loss_of(t));
        std::vector<num::Tensor> analytic;
        for (const auto& prm : p.params()) analytic.push_back(prm.grad);
        const auto numeric = num::finite_difference(
            [&](num::ParamSet&) {
                num::Tape tt;
                return tt.item(loss_of(tt));
            },
            p.params(), 1e-5);
        worst = std::max(worst, num::gradient_relative_error(analytic, numeric));
    }

    double worst_kl = 0.0;
    std::uniform_real_distribution<double> mu(-2.0, 2.0), sd(0.3, 2.5);
    for (int trial = 0; trial < 5; ++trial) {
        const double m = mu(rng), s = sd(rng);
        num::Tape t;
        const double closed =
            t.item(num::gaussian_kl(t, {t.constant(num::Tensor::row({m})), t.constant(num::Tensor::row({std::log(s)}))}));
        worst_kl = std::max(worst_kl, std::abs(mc_unit_kl(m, s, 1'000'000, rng) - closed) / closed);
    }
    return {worst < 1e-4 && worst_kl < 0.01,
            "max FD rel err " + fmt("%.2e", worst) + " over 50 policies (< 1e-4); max KL MC rel err " + fmt("%.4f", worst_kl) + " (< 0.01)"};
}

// ---------------------------------------------------------------- criterion 2

Verdict criterion_oracle(const Context&)
{
    std::mt19937_64 rng(77);
    std::size_t passed = 0;
    double worst_slack = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto rep = oracle::verify_bound_chain(oracle::random_task(rng));
        passed += rep.pass ? 1 : 0;
        worst_slack = std::max({worst_slack, rep.i_ag_s - rep.i_zg_s, rep.i_zg_s - rep.expected_kl});
    }
    int mc_ok = 0;
    double worst_z = 0.0;
    for (int i = 0; i < 5; ++i) {
        const auto task = oracle::random_task(rng);
        const auto lat = mc::mc_mi_latent(task, 10'000'000, rng);
        const auto act = mc::mc_mi_action(task, 10'000'000, rng);
        const double zl = std::abs(lat.mean - oracle::exact_mi_latent(task)) / std::max(lat.stderr_, 1e-15);
        const double za = std::abs(act.mean - oracle::exact_mi_action(task)) / std::max(act.stderr_, 1e-15);
        worst_z = std::max({worst_z, zl, za});
        mc_ok += (zl <= 3.0 && za <= 3.0) ? 1 : 0;
    }
    return {passed == 100 && mc_ok == 5, std::to_string(passed) + "/100 bound chains hold (max violation "
                                             + fmt("%.1e", worst_slack) + "); MC agreement " + std::to_string(mc_ok)
                                             + "/5 (max |z| " + fmt("%.2f", worst_z) + " <= 3)"};
}

// ---------------------------------------------------------------- criterion 3

Verdict criterion_bandit(const Context&)
{
    train::BanditTaskSampler sampler(2);
    policy::PolicyConfig arch;
    arch.latent_dim = 1;
    arch.encoder_hidden = arch.decoder_hidden = arch.value_hidden = 8;
    arch.recurrent = false;
    auto run = [&](double beta, std::uint64_t seed) {
        train::TrainConfig cfg;
        cfg.beta = beta;
        cfg.gamma = 1.0;
        cfg.lr = 3e-3;
        cfg.entropy_coef = 0.0;
        cfg.total_episodes = 8 * 1500;
        cfg.seed = seed;
        const auto res = train::train_bottleneck_policy(cfg, sampler, arch);
        const auto task = oracle::task_from_policy(res.policy, {{1.0}}, {{1.0, 0.0}, {0.0, 1.0}});
        const auto pi = oracle::action_marginals(task);
        return std::pair{0.5 * (pi[0][0][0] + pi[0][1][1]), oracle::exact_mi_action(task)};
    };
    bool ok = true;
    std::string detail;
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto [acc_lo, mi_lo] = run(0.001, seed);
        const auto [acc_hi, mi_hi] = run(10.0, seed);
        (void)acc_hi;
        ok = ok && acc_lo > 0.95 && mi_lo > 0.5 && mi_hi < 0.05;
        detail += "seed " + std::to_string(seed) + ": b=0.001 acc " + fmt("%.3f", acc_lo) + " I " + fmt("%.3f", mi_lo)
                  + ", b=10 I " + fmt("%.4f", mi_hi) + "; ";
    }
    return {ok, detail + "(need acc > 0.95, I > 0.5; I < 0.05)"};
}

// ---------------------------------------------------------------- criterion 4

Verdict criterion_envs(const Context&)
{
    const std::vector<env::LevelSpec> specs{
        {env::Family::multiroom, 4, 5}, {env::Family::findobj, 5, 0}, {env::Family::minipacman, 11, 11}};
    std::size_t unreachable = 0, nondeterministic = 0;
    std::map<int, int> rooms;
    const int n = 10'000;
    for (const auto& spec : specs)
        for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(n); ++seed) {
            const auto lvl = env::generate(spec, seed);
            if (!env::goal_reachable(lvl)) ++unreachable;
            if (!(env::generate(spec, seed) == lvl)) ++nondeterministic;
            if (spec.family == env::Family::findobj) ++rooms[env::findobj_room_of(lvl, lvl.goal_pos)];
        }
    double worst = 0.0;
    bool outer_only = rooms.size() == 8 && !rooms.count(4);
    for (const auto& [room, c] : rooms) worst = std::max(worst, std::abs(c / static_cast<double>(n) - 0.125));
    return {unreachable == 0 && nondeterministic == 0 && outer_only && worst <= 0.03,
            "3 x 10^4 levels: " + std::to_string(unreachable) + " unreachable, " + std::to_string(nondeterministic)
                + " non-deterministic; FindObj outer-room max |freq - 0.125| = " + fmt("%.4f", worst) + " (<= 0.03)"};
}

// ------------------------------------------------------- criteria 5-8 helpers

fs::path run_config(const Context& ctx, const std::string& name, const std::string& extra = "",
                    harness::Command cmd = harness::Command::phase, const std::string& out_name = "")
{
    const fs::path out = ctx.work / (out_name.empty() ? name : out_name);
    harness::Overrides ov;
    ov.output_dir = out.string();
    ov.extra = extra;
    std::ostringstream log;
    const auto r = harness::run_experiment((ctx.configs / (name + ".cfg")).string(), ov, cmd, log);
    if (ctx.verbose) std::cerr << log.str();
    if (r.exit_code != 0) throw std::runtime_error(name + ": " + r.message);
    return out;
}

std::vector<std::uint64_t> config_seeds(const Context& ctx, const std::string& name)
{
    return harness::load_config((ctx.configs / (name + ".cfg")).string()).seeds;
}

double eval_success(const fs::path& seed_dir)
{
    return nlohmann::json::parse(harness::read_file(seed_dir / "eval.json")).at("success_rate").get<double>();
}

const std::string kPhase1 = "phase1_multiroom_n2s4";

fs::path phase1(const Context& ctx)
{
    const fs::path out = ctx.work / kPhase1;
    if (fs::exists(out / "manifest.json")
        && nlohmann::json::parse(harness::read_file(out / "manifest.json")).at("status") == "ok")
        return out;
    return run_config(ctx, kPhase1);
}

// ---------------------------------------------------------------- criterion 5

inline constexpr int kHeatmapLevels = 20;

Verdict criterion_decision_states(const Context& ctx)
{
    const fs::path p1 = phase1(ctx);
    run_config(ctx, kPhase1, "checkpoint = " + (p1 / "seed_{seed}/checkpoint.json").string() + "\n", harness::Command::heatmap,
               "heatmap_n2s4");
    const auto cfg = harness::load_config((ctx.configs / (kPhase1 + ".cfg")).string());
    int wins = 0;
    std::string detail;
    for (auto seed : cfg.seeds) {
        const auto model = transfer::FrozenBonusModel::from_checkpoint((p1 / ("seed_" + std::to_string(seed)) / "checkpoint.json").string());
        double ds = 0.0, cs = 0.0;
        std::size_t dn = 0, cn = 0;
        for (int l = 0; l < kHeatmapLevels; ++l) {
            const auto level = env::generate(cfg.train_env.level, train::kEvalSeedBegin + static_cast<std::uint64_t>(l));
            const auto dc = harness::doorway_contrast(harness::export_kl_heatmap(model, level), level);
            ds += dc.doorway_mean * static_cast<double>(dc.doorway_cells);
            cs += dc.corridor_mean * static_cast<double>(dc.corridor_cells);
            dn += dc.doorway_cells;
            cn += dc.corridor_cells;
        }
        const double ratio = (ds / static_cast<double>(dn)) / (cs / static_cast<double>(cn));
        wins += ratio > 1.5 ? 1 : 0;
        detail += "seed " + std::to_string(seed) + " ratio " + fmt("%.2f", ratio) + " (success " + fmt("%.2f", eval_success(p1 / ("seed_" + std::to_string(seed)))) + "); ";
    }
    return {wins >= 2, detail + "doorway/corridor KL > 1.5 on " + std::to_string(wins) + "/3 seeds (need >= 2)"};
}

// ------------------------------------------------------------- criteria 6, 8

struct TransferRuns {
    std::map<std::string, std::vector<double>> success;
    std::map<std::string, std::vector<std::size_t>> distinct;
    bool done = false;
};

TransferRuns& transfer_runs(const Context& ctx)
{
    static TransferRuns runs;
    if (runs.done) return runs;
    const fs::path p1 = phase1(ctx);
    for (const std::string mode : {"infobot_kl", "count_only", "none"}) {
        const std::string name = "transfer_multiroom_n4s4_" + mode;
        const fs::path out = run_config(ctx, name, "checkpoint = " + (p1 / "seed_{seed}/checkpoint.json").string() + "\n");
        for (auto seed : config_seeds(ctx, name)) {
            const fs::path dir = out / ("seed_" + std::to_string(seed));
            runs.success[mode].push_back(eval_success(dir));
            runs.distinct[mode].push_back(nlohmann::json::parse(harness::read_file(dir / "visits.json")).size());
        }
    }
    runs.done = true;
    return runs;
}

double mean(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

Verdict criterion_transfer(const Context& ctx)
{
    auto& r = transfer_runs(ctx);
    const double ib = mean(r.success["infobot_kl"]), co = mean(r.success["count_only"]), no = mean(r.success["none"]);
    return {ib >= co + 0.10 && ib >= no + 0.20, "mean success infobot_kl " + fmt("%.3f", ib) + ", count_only " + fmt("%.3f", co)
                                                    + ", none " + fmt("%.3f", no) + " (need ib >= co + 0.10 and ib >= none + 0.20)"};
}

Verdict criterion_visitation(const Context& ctx)
{
    auto& r = transfer_runs(ctx);
    const auto& ib = r.distinct["infobot_kl"];
    const auto& no = r.distinct["none"];
    bool ok = ib.size() == no.size() && !ib.empty();
    std::string detail;
    for (std::size_t i = 0; i < ib.size() && i < no.size(); ++i) {
        ok = ok && ib[i] > no[i];
        detail += std::to_string(ib[i]) + " vs " + std::to_string(no[i]) + "; ";
    }
    return {ok, "distinct states infobot_kl vs none per seed: " + detail + "(need > on every seed)"};
}

// ---------------------------------------------------------------- criterion 7

Verdict criterion_direct(const Context& ctx)
{
    std::map<std::string, double> avg;
    std::string detail;
    for (const std::string tag : {"beta0", "beta001"}) {
        const std::string name = "direct_multiroom_n2s4_" + tag;
        const fs::path out = run_config(ctx, name);
        std::vector<double> s;
        for (auto seed : config_seeds(ctx, name)) s.push_back(eval_success(out / ("seed_" + std::to_string(seed))));
        avg[tag] = mean(s);
        detail += tag + " " + fmt("%.3f", avg[tag]) + " ";
    }
    return {avg["beta001"] >= avg["beta0"] + 0.10, "N3S4 success: " + detail + "(need beta=0.01 >= beta=0 + 0.10)"};
}

// ---------------------------------------------------------------- criterion 9

Verdict criterion_reproducible(const Context& ctx)
{
    bool ok = true;
    std::size_t compared = 0;
    for (const std::string name : {"repro_train", "repro_transfer"}) {
        const fs::path a = run_config(ctx, name, "", harness::Command::phase, name + "_a");
        const fs::path b = run_config(ctx, name, "", harness::Command::phase, name + "_b");
        for (const auto& e : fs::recursive_directory_iterator(a)) {
            if (e.path().filename() != "metrics.csv") continue;
            const auto rel = fs::relative(e.path(), a);
            ok = ok && harness::read_file(e.path()) == harness::read_file(b / rel);
            ++compared;
        }
    }
    return {ok && compared > 0, std::to_string(compared) + " metrics CSVs compared byte for byte"};
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance criteria 1-9"};
    std::vector<int> only;
    Context ctx;
    std::string configs = std::string(INFOBOT_SOURCE_DIR) + "/configs";
    std::string work = (fs::temp_directory_path() / "infobot_acceptance").string();
    app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
    app.add_option("--configs", configs, "config directory");
    app.add_option("--workdir", work, "artifact directory");
    app.add_flag("--verbose", ctx.verbose, "echo run logs");
    CLI11_PARSE(app, argc, argv);
    ctx.configs = configs;
    ctx.work = work;
    fs::create_directories(ctx.work);

    const std::vector<std::pair<int, std::function<Verdict(const Context&)>>> criteria{
        {1, criterion_numerics}, {2, criterion_oracle},   {3, criterion_bandit},     {4, criterion_envs},       {5, criterion_decision_states},
        {6, criterion_transfer}, {7, criterion_direct},   {8, criterion_visitation}, {9, criterion_reproducible}};
    const std::set<int> wanted(only.begin(), only.end());
    bool all = true;
    for (const auto& [id, fn] : criteria) {
        if (!wanted.empty() && !wanted.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = fn(ctx);
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %d: %s  %s [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
        std::fflush(stdout);
        all = all && v.pass;
    }
    return all ? 0 : 1;
}
