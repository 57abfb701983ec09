#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "infobot/harness/experiment.hpp"

using namespace infobot::harness;

int main(int argc, char** argv)
{
    CLI::App app{"infobot: information-bottleneck policy lab"};
    app.require_subcommand(1);

    struct Args {
        std::string config;
        std::string out;
        std::optional<std::uint64_t> seed;
    };
    Args args;
    std::optional<Phase> phase;
    Command command = Command::phase;

    auto add = [&](const std::string& name, const std::string& help, std::optional<Phase> p, Command cmd) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", args.config, "experiment config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", args.out, "artifact directory (overrides output_dir)");
        sub->add_option("--seed", args.seed, "run only this seed (overrides seeds)");
        sub->callback([&, p, cmd] {
            phase = p;
            command = cmd;
        });
    };
    add("train", "phase 1: train the bottleneck policy on p_train", Phase::train, Command::phase);
    add("transfer", "phase 2: train on p_test with an exploration bonus", Phase::transfer, Command::phase);
    add("evaluate", "greedy evaluation of checkpoints on held-out levels", Phase::evaluate, Command::phase);
    add("oracle", "check the bound chain on random tabular tasks", Phase::oracle, Command::phase);
    add("heatmap", "export the KL heatmap of a checkpoint", std::nullopt, Command::heatmap);
    add("visitmap", "export the visitation map of a transfer run", std::nullopt, Command::visitmap);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    Overrides ov;
    ov.phase = phase;
    if (!args.out.empty()) ov.output_dir = args.out;
    ov.seed = args.seed;
    const auto outcome = run_experiment(args.config, ov, command, std::cerr);
    if (outcome.exit_code == 0) std::cout << outcome.artifact_dir.string() << '\n';
    return outcome.exit_code;
}
