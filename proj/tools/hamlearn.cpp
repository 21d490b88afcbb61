// hamlearn: simulate Hamiltonian systems, fit neural potentials, and recover
// sparse closed forms from them.

#include "hamlearn/commands.hpp"
#include "hamlearn/errors.hpp"
#include "hamlearn/io.hpp"
#include "hamlearn/version.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace hamlearn;

namespace {

std::string joined_argv(int argc, char** argv) {
    std::string out;
    for (int i = 0; i < argc; ++i) {
        if (i) out += ' ';
        out += argv[i];
    }
    return out;
}

void print_outputs(const RunManifest& m) {
    for (const auto& a : m.artifacts) std::cout << a.path << "  " << a.sha256 << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learn potentials of Hamiltonian systems from trajectories and interpret them"};
    app.set_version_flag("--version", std::string(HAMLEARN_VERSION));
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    std::optional<std::string> scale;
    std::optional<std::string> config;
    std::string out = "hamlearn-out";
    bool quiet = false;
    app.add_option("--seed", seed, "Root seed for every random stream");
    app.add_option("--scale", scale, "Default budgets")->check(CLI::IsMember({"paper", "desk"}));
    app.add_option("--config", config, "Experiment configuration (JSON)");
    app.add_option("--out", out, "Output directory")->capture_default_str();
    app.add_flag("-q,--quiet", quiet, "No training progress on stderr");

    std::optional<std::string> name;
    std::optional<std::string> variant;
    const auto add_target = [&](CLI::App* cmd) {
        cmd->add_option("experiment", name, "Experiment name (" + CLI::detail::join(experiment_names(), ", ") + ")");
        cmd->add_option("--variant", variant, "Double-well training set (t1, t2, t3)");
    };

    auto* simulate = app.add_subcommand("simulate", "Generate the training corpus as CSV");
    add_target(simulate);

    auto* train = app.add_subcommand("train", "Train a neural potential on a corpus directory");
    add_target(train);
    std::string corpus_dir;
    std::string model_path;
    train->add_option("--corpus", corpus_dir, "Directory of trajectory CSV files")->required();
    train->add_option("--model", model_path, "Model output path (default OUT/model.json)");

    auto* interpret = app.add_subcommand("interpret", "Sparse regression on a trained potential");
    std::string model_in;
    std::string library;
    std::string points;
    InterpretOptions opts;
    std::string mode = "normalized";
    interpret->add_option("--model", model_in, "Model file")->required();
    interpret->add_option("--library", library, "poly:DEG[:VAR] | inverse:P[:VAR] | wall:W:P[:VAR]")->required();
    interpret->add_option("--points", points, "grid:LO:HI:N | corpus:DIR")->required();
    interpret->add_option("--lambda-start", opts.lambda_start)->capture_default_str();
    interpret->add_option("--lambda-factor", opts.lambda_factor)->capture_default_str();
    interpret->add_option("--tol", opts.tolerance, "Residual tolerance")->capture_default_str();
    interpret->add_option("--residual", mode)->check(CLI::IsMember({"normalized", "raw"}))->capture_default_str();

    auto* experiment = app.add_subcommand("experiment", "Simulate, train, interpret and compare to the truth");
    add_target(experiment);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        CommandContext ctx;
        ctx.command_line = joined_argv(argc, argv);
        ctx.seed = seed;
        if (scale) ctx.scale = scale_from_string(*scale);
        if (config) ctx.config = *config;
        ctx.out = out;
        if (!quiet) ctx.progress = [](long step, double value) { std::fprintf(stderr, "step %ld loss %.6g\n", step, value); };

        RunManifest m;
        if (*simulate) {
            m = cmd_simulate(ctx, resolve_spec(ctx, name, variant));
        } else if (*train) {
            const auto spec = resolve_spec(ctx, name, variant);
            m = cmd_train(ctx, spec, corpus_dir, model_path.empty() ? ctx.out / "model.json" : std::filesystem::path(model_path));
            std::cout << "final loss " << m.metrics.at("final_loss") << "\n";
        } else if (*interpret) {
            opts.mode = residual_mode_from_string(mode);
            m = cmd_interpret(ctx, model_in, library, points, opts);
            std::cout << read_text_file(ctx.out / "fit.txt");
        } else if (*experiment) {
            m = cmd_experiment(ctx, resolve_spec(ctx, name, variant));
            std::cout << read_text_file(ctx.out / "fit.txt") << "\n" << read_text_file(ctx.out / "comparison.csv");
        }
        print_outputs(m);
        return kExitOk;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const DivergenceError& e) {
        std::cerr << "training diverged at step " << e.step() << ": " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}
