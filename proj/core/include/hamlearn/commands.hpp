#pragma once

#include "hamlearn/experiments.hpp"
#include "hamlearn/manifest.hpp"

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>

namespace hamlearn {

/// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitDomain = 3,
    kExitDivergence = 4,
    kExitNoFit = 5,
};

int exit_code_for(const std::exception& e);

/// Global options shared by every subcommand.
struct CommandContext {
    std::string command_line;
    std::optional<std::uint64_t> seed;
    std::optional<Scale> scale;
    std::optional<std::filesystem::path> config;
    std::filesystem::path out = "hamlearn-out";
    /// Called with (global step, loss) while training.
    ProgressFn progress;
};

/// Experiment spec from --config (if any), else defaults for `name`; --seed and
/// --scale override the file. A config file and a conflicting name are an error.
ExperimentSpec resolve_spec(const CommandContext& ctx, const std::optional<std::string>& name,
                            const std::optional<std::string>& variant);

/// Library description: `poly:DEG[:VAR]`, `inverse:P[:VAR]` or `wall:W:P[:VAR]`.
CandidateLibrary parse_library_spec(const std::string& text);

/// Regression points for a model: library coordinates and matching raw inputs.
struct InterpretPoints {
    Mat coordinates;
    Mat inputs;
};

/// `grid:LO:HI:N` (library coordinate) or `corpus:DIR` (every stored position).
/// Six-dimensional models use the pair distance |q1 - q2| as coordinate.
InterpretPoints parse_points_spec(const std::string& text, std::size_t model_input_dim);

struct InterpretOptions {
    double lambda_start = 1.0;
    double lambda_factor = 0.5;
    double tolerance = 1e-3;
    ResidualMode mode = ResidualMode::Normalized;
};

/// Loss history of all stages as `step,loss` CSV.
std::string loss_csv(const std::vector<TrainReport>& reports);

/// Writes traj_NNN.csv (plus test/ and raw/ subsets when present) and a manifest into ctx.out.
RunManifest cmd_simulate(const CommandContext& ctx, const ExperimentSpec& spec);

/// Trains on every CSV in `corpus_dir`; writes the model, loss CSV and a manifest.
RunManifest cmd_train(const CommandContext& ctx, const ExperimentSpec& spec, const std::filesystem::path& corpus_dir,
                      const std::filesystem::path& model_path);

/// Sparse fit of a saved model; writes fit.txt, fit.json and a manifest.
RunManifest cmd_interpret(const CommandContext& ctx, const std::filesystem::path& model_path,
                          const std::string& library_spec, const std::string& points_spec,
                          const InterpretOptions& options);

/// Full pipeline: model, loss, fit reports, comparison table, plot data, manifest.
RunManifest cmd_experiment(const CommandContext& ctx, const ExperimentSpec& spec);

}  // namespace hamlearn
