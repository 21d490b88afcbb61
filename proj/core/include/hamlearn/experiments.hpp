#pragma once

#include "hamlearn/dynamics.hpp"
#include "hamlearn/neural.hpp"
#include "hamlearn/sindy.hpp"
#include "hamlearn/training.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hamlearn {

enum class ExperimentName { SHO, DoubleWell, CentralForce, CoulombDifference, CoulombDistance };
enum class DoubleWellVariant { T1, T2, T3 };
enum class Scale { Paper, Desk };
enum class PointMode { Grid, Training };
enum class BiasExtremum { Min, Max };

std::string to_string(ExperimentName name);
std::string to_string(DoubleWellVariant v);
std::string to_string(Scale s);
std::string to_string(PointMode m);
std::string to_string(BiasExtremum b);
ExperimentName experiment_name_from_string(const std::string& name);
DoubleWellVariant variant_from_string(const std::string& name);
Scale scale_from_string(const std::string& name);
PointMode point_mode_from_string(const std::string& name);
BiasExtremum bias_extremum_from_string(const std::string& name);

/// Names accepted by experiment_name_from_string, for usage messages.
std::vector<std::string> experiment_names();

/// One gradient-descent stage. Stages after the first warm-start from the
/// previous stage's weights with (possibly) new activations and output transform.
struct TrainStage {
    Activation activation = Activation::Tanh;
    OutputTransform output = OutputTransform::Identity;
    TrainConfig config;
    /// Re-centre the warm start after a swap: each layer's bias absorbs the
    /// change in the activations' value at zero, then the output bias moves so
    /// the largest pre-output over the training inputs is zero. The loss never
    /// sees the output bias under an identity output, so the first stage
    /// leaves it arbitrary.
    bool anchor_output_bias = false;
};

struct ExperimentSpec {
    ExperimentName name = ExperimentName::SHO;
    DoubleWellVariant variant = DoubleWellVariant::T1;
    Scale scale = Scale::Desk;
    std::uint64_t seed = 1;

    // corpus
    std::size_t trajectories = 10;
    std::size_t test_trajectories = 0;
    std::size_t transitions = 1000;
    double step = 0.01;
    Integrator integrator = Integrator::RK4;
    /// Train on every k-th transition pair only.
    std::size_t pair_stride = 1;

    // network and training
    std::vector<int> hidden = {16, 16};
    std::vector<TrainStage> stages;

    // interpretation
    PointMode point_mode = PointMode::Grid;
    std::size_t grid_points = 1001;
    double lambda_start = 1.0;
    double lambda_factor = 0.5;
    double residual_tol = 1e-3;
    ResidualMode residual_mode = ResidualMode::Normalized;
    BiasExtremum bias = BiasExtremum::Min;

    /// Paper or desk defaults for an experiment.
    static ExperimentSpec defaults(ExperimentName name, Scale scale, DoubleWellVariant variant = DoubleWellVariant::T1);

    /// Short identifier, e.g. "sho" or "double-well-t3".
    std::string label() const;
    InputTransform input_transform() const;
    void validate() const;
};

/// Reads a JSON configuration: `experiment`, optional `variant`, `scale`, `seed`,
/// then any field overrides on top of the matching defaults.
ExperimentSpec experiment_from_json(const std::string& text);
std::string experiment_to_json(const ExperimentSpec& spec);

/// Training and held-out trajectories plus generation diagnostics.
struct Corpus {
    SystemSpec system;
    std::vector<Trajectory> train;
    std::vector<Trajectory> test;
    /// Full three-dimensional orbit behind a radial corpus.
    std::vector<Trajectory> raw;
    double ell = 0.0;
    std::size_t resamples = 0;
    /// Largest |H(t) - H(0)| / max(|H(0)|, 1) over every generated trajectory.
    double max_energy_drift = 0.0;
};

Corpus generate_corpus(const ExperimentSpec& spec);

/// Network layer dimensions implied by the spec.
std::vector<int> layer_dims(const ExperimentSpec& spec);

/// Runs every training stage on `corpus.train`.
std::pair<DenseNetwork, std::vector<TrainReport>> train_experiment(const ExperimentSpec& spec, const Corpus& corpus,
                                                                   const ProgressFn& progress = {});

struct CoefficientError {
    std::string label;
    double fitted = 0.0;
    double truth = 0.0;
    double relative_error = 0.0;
    bool missing = false;
};

struct SpuriousTerm {
    std::string label;
    double value = 0.0;
};

struct TruthComparison {
    std::vector<CoefficientError> errors;
    std::vector<SpuriousTerm> spurious;

    const CoefficientError* find(const std::string& label) const;
};

/// Relative error of every non-constant truth coefficient; a pruned truth term
/// scores 1.0 and is flagged missing. Active non-constant terms absent from the
/// truth are listed as spurious.
TruthComparison compare_to_truth(const SparseFit& fit, const CandidateLibrary& lib,
                                 const std::map<std::string, double>& truth);

/// Tabular data for one figure; the first column is the abscissa.
struct PlotSeries {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct ExperimentResult {
    ExperimentSpec spec;
    DenseNetwork network;
    std::vector<TrainReport> reports;
    CandidateLibrary library;
    LambdaSearch search;
    std::map<std::string, double> truth;
    TruthComparison comparison;
    std::vector<PlotSeries> plots;
    /// Regression inputs (library coordinates) and network values.
    Mat regression_points;
    Vec regression_values;
    std::map<std::string, double> diagnostics;
};

/// Library for an experiment (always includes the constant).
CandidateLibrary experiment_library(const ExperimentSpec& spec);
/// Ground-truth coefficients, never including the constant term.
std::map<std::string, double> truth_coefficients(const ExperimentSpec& spec, const Corpus& corpus);

/// Regression points (library coordinates) and the network values at them.
std::pair<Mat, Vec> regression_data(const ExperimentSpec& spec, const Corpus& corpus, const DenseNetwork& net);

/// Interpretation and comparison for an already-trained network.
ExperimentResult interpret_experiment(const ExperimentSpec& spec, const Corpus& corpus, DenseNetwork net,
                                      std::vector<TrainReport> reports);

ExperimentResult run_sho(const ExperimentSpec& spec, const ProgressFn& progress = {});
ExperimentResult run_double_well(const ExperimentSpec& spec, const ProgressFn& progress = {});
ExperimentResult run_central_force(const ExperimentSpec& spec, const ProgressFn& progress = {});
ExperimentResult run_coulomb(const ExperimentSpec& spec, const ProgressFn& progress = {});
/// Dispatches on spec.name.
ExperimentResult run_experiment(const ExperimentSpec& spec, const ProgressFn& progress = {});

/// Bias-adjusted potential series for the experiment's figures.
std::vector<PlotSeries> plot_series(const ExperimentSpec& spec, const Corpus& corpus, const DenseNetwork& net);

/// Writes one CSV per plot series into `dir`; returns the written paths.
std::vector<std::filesystem::path> emit_plot_data(const ExperimentResult& result, const std::filesystem::path& dir);

/// Comparison table as CSV: label,truth,fitted,relative_error,missing.
std::string comparison_csv(const TruthComparison& comparison);

}  // namespace hamlearn
