#include "hamlearn/experiments.hpp"

#include "hamlearn/errors.hpp"
#include "hamlearn/io.hpp"
#include "hamlearn/seeding.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace hamlearn {

namespace {

template <typename Enum, std::size_t N>
Enum parse_tag(const std::string& name, const std::pair<Enum, const char*> (&table)[N], const char* what) {
    for (const auto& [value, tag] : table)
        if (name == tag) return value;
    std::string valid;
    for (const auto& [value, tag] : table) valid += (valid.empty() ? "" : ", ") + std::string(tag);
    throw ConfigError(std::string("unknown ") + what + " '" + name + "' (valid: " + valid + ")");
}

template <typename Enum, std::size_t N>
std::string tag_of(Enum v, const std::pair<Enum, const char*> (&table)[N]) {
    for (const auto& [value, tag] : table)
        if (value == v) return tag;
    return "unknown";
}

constexpr std::pair<ExperimentName, const char*> kNames[] = {{ExperimentName::SHO, "sho"},
                                                             {ExperimentName::DoubleWell, "double-well"},
                                                             {ExperimentName::CentralForce, "central-force"},
                                                             {ExperimentName::CoulombDifference, "coulomb-difference"},
                                                             {ExperimentName::CoulombDistance, "coulomb-distance"}};
constexpr std::pair<DoubleWellVariant, const char*> kVariants[] = {
    {DoubleWellVariant::T1, "t1"}, {DoubleWellVariant::T2, "t2"}, {DoubleWellVariant::T3, "t3"}};
constexpr std::pair<Scale, const char*> kScales[] = {{Scale::Paper, "paper"}, {Scale::Desk, "desk"}};
constexpr std::pair<PointMode, const char*> kPointModes[] = {{PointMode::Grid, "grid"}, {PointMode::Training, "training"}};
constexpr std::pair<BiasExtremum, const char*> kBias[] = {{BiasExtremum::Min, "min"}, {BiasExtremum::Max, "max"}};

constexpr double kCoulombCollisionGuard = 1e-3;
constexpr double kDoubleWellBarrierEnergy = 1.0;  // V(1), the local maximum between the wells

TrainStage stage(Activation a, OutputTransform out, double rate, long steps) {
    TrainStage s;
    s.activation = a;
    s.output = out;
    s.config.learning_rate = rate;
    s.config.steps = steps;
    s.config.log_every = std::max(1L, steps / 100);
    return s;
}

bool is_coulomb(ExperimentName n) {
    return n == ExperimentName::CoulombDifference || n == ExperimentName::CoulombDistance;
}

double relative_drift(const SystemSpec& system, const Trajectory& traj) {
    const double h0 = total_energy(system, traj.state(0));
    double worst = 0.0;
    for (std::size_t i = 1; i < traj.size(); ++i)
        worst = std::max(worst, std::abs(total_energy(system, traj.state(i)) - h0));
    return worst / std::max(std::abs(h0), 1.0);
}

double min_pair_distance(const Trajectory& traj) {
    const Mat diff = traj.positions().topRows(3) - traj.positions().bottomRows(3);
    return diff.colwise().norm().minCoeff();
}

PhaseState state_from(std::initializer_list<double> q, std::initializer_list<double> p) {
    PhaseState s;
    s.q = Eigen::Map<const Vec>(q.begin(), static_cast<Eigen::Index>(q.size()));
    s.p = Eigen::Map<const Vec>(p.begin(), static_cast<Eigen::Index>(p.size()));
    return s;
}

// Pre-output values z over the training inputs, ignoring the output transform.
Vec pre_output(DenseNetwork net, const std::vector<Trajectory>& corpus) {
    net.output_transform = OutputTransform::Identity;
    Mat points(static_cast<Eigen::Index>(net.input_dim()), 0);
    for (const auto& t : corpus) {
        Mat grown(points.rows(), points.cols() + t.positions().cols());
        grown << points, t.positions();
        points = std::move(grown);
    }
    return forward_batch(net, points);
}

std::vector<Trajectory> strided_pairs(const std::vector<Trajectory>& corpus, std::size_t stride) {
    std::vector<Trajectory> out;
    for (const auto& t : corpus)
        for (std::size_t i = 0; i < t.transitions(); i += stride) out.push_back(t.window(i, 1));
    return out;
}

}  // namespace

std::string to_string(ExperimentName name) { return tag_of(name, kNames); }
std::string to_string(DoubleWellVariant v) { return tag_of(v, kVariants); }
std::string to_string(Scale s) { return tag_of(s, kScales); }
std::string to_string(PointMode m) { return tag_of(m, kPointModes); }
std::string to_string(BiasExtremum b) { return tag_of(b, kBias); }
ExperimentName experiment_name_from_string(const std::string& name) { return parse_tag(name, kNames, "experiment"); }
DoubleWellVariant variant_from_string(const std::string& name) { return parse_tag(name, kVariants, "variant"); }
Scale scale_from_string(const std::string& name) { return parse_tag(name, kScales, "scale"); }
PointMode point_mode_from_string(const std::string& name) { return parse_tag(name, kPointModes, "point mode"); }
BiasExtremum bias_extremum_from_string(const std::string& name) { return parse_tag(name, kBias, "bias extremum"); }

std::vector<std::string> experiment_names() {
    std::vector<std::string> out;
    for (const auto& [v, tag] : kNames) out.emplace_back(tag);
    return out;
}

ExperimentSpec ExperimentSpec::defaults(ExperimentName name, Scale scale, DoubleWellVariant variant) {
    const bool paper = scale == Scale::Paper;
    ExperimentSpec s;
    s.name = name;
    s.variant = variant;
    s.scale = scale;
    switch (name) {
        case ExperimentName::SHO:
            s.trajectories = 10;
            s.transitions = 1000;
            s.step = 0.01;
            s.integrator = Integrator::RK4;
            s.hidden = {16, 16};
            s.stages = {stage(Activation::Tanh, OutputTransform::Identity, 0.01, paper ? 50000 : 5000)};
            s.point_mode = PointMode::Grid;
            s.grid_points = 1001;
            s.residual_tol = 0.5;
            s.bias = BiasExtremum::Min;
            break;
        case ExperimentName::DoubleWell:
            s.trajectories = variant == DoubleWellVariant::T1 ? 10 : 2;
            s.transitions = 5000;
            s.step = 0.001;
            s.integrator = Integrator::RK4;
            s.hidden = {16, 16};
            s.stages = {stage(Activation::Tanh, OutputTransform::Identity, 0.01,
                              paper ? 50000 : (variant == DoubleWellVariant::T1 ? 5000 : 20000))};
            s.point_mode = PointMode::Training;
            // the left-well orbits span a much narrower range of V
            s.residual_tol = variant == DoubleWellVariant::T3 ? 0.005 : 0.02;
            s.bias = BiasExtremum::Min;
            break;
        case ExperimentName::CentralForce: {
            s.trajectories = 1;
            s.transitions = 20000;
            s.step = 0.001;
            s.integrator = Integrator::RK4;
            s.hidden = {16, 16};
            // desk scale trades data for steps: every 100th pair, trained longer than paper scale
            const long steps = paper ? 500000 : 1000000;
            TrainStage second = stage(Activation::Softplus, OutputTransform::Exp, 1e-3, paper ? 500000 : 3000000);
            second.anchor_output_bias = true;
            s.stages = {stage(Activation::ELU, OutputTransform::Identity, 1e-3, steps), second};
            s.pair_stride = paper ? 1 : 100;
            s.point_mode = PointMode::Grid;
            s.grid_points = 1001;
            s.residual_tol = 0.01;
            s.bias = BiasExtremum::Min;
            break;
        }
        case ExperimentName::CoulombDifference: {
            s.trajectories = paper ? 800 : 25;
            s.test_trajectories = paper ? 200 : 25;
            s.transitions = paper ? 10000 : 1000;
            s.step = 0.001;
            s.integrator = Integrator::Verlet;
            s.hidden = std::vector<int>(8, 16);
            TrainStage st = stage(Activation::Tanh, OutputTransform::Identity, 0.01, paper ? 500000 : 150000);
            st.config.chunk_size = 100;
            st.config.max_stages = paper ? std::nullopt : std::optional<std::size_t>(1);
            s.stages = {st};
            s.point_mode = PointMode::Training;
            s.residual_tol = 0.01;
            s.bias = BiasExtremum::Max;
            break;
        }
        case ExperimentName::CoulombDistance:
            s.trajectories = paper ? 100 : 25;
            s.test_trajectories = paper ? 100 : 25;
            s.transitions = paper ? 5000 : 2000;
            s.step = 0.001;
            s.integrator = Integrator::Verlet;
            s.hidden = std::vector<int>(8, 8);
            s.stages = {stage(Activation::Tanh, OutputTransform::Identity, 0.05, paper ? 50000 : 5000)};
            s.point_mode = PointMode::Training;
            s.residual_tol = 0.01;
            s.bias = BiasExtremum::Max;
            break;
    }
    return s;
}

std::string ExperimentSpec::label() const {
    std::string out = to_string(name);
    if (name == ExperimentName::DoubleWell) out += "-" + to_string(variant);
    return out;
}

InputTransform ExperimentSpec::input_transform() const {
    switch (name) {
        case ExperimentName::CoulombDifference: return InputTransform::PairDifference;
        case ExperimentName::CoulombDistance: return InputTransform::PairDistance;
        default: return InputTransform::Identity;
    }
}

void ExperimentSpec::validate() const {
    if (trajectories < 1) throw ConfigError("experiment needs at least one training trajectory");
    if (transitions < 1) throw ConfigError("experiment needs at least one transition per trajectory");
    if (!(step > 0.0)) throw ConfigError("time step must be positive");
    if (pair_stride < 1) throw ConfigError("pair_stride must be positive");
    if (hidden.empty()) throw ConfigError("network needs at least one hidden layer");
    for (int w : hidden)
        if (w < 1) throw ConfigError("hidden widths must be positive");
    if (stages.empty()) throw ConfigError("experiment needs at least one training stage");
    for (const auto& st : stages) {
        st.config.validate();
        if (st.config.chunk_size && pair_stride != 1)
            throw ConfigError("chunked training cannot be combined with pair_stride");
    }
    if (name == ExperimentName::DoubleWell && variant != DoubleWellVariant::T1 && trajectories != 2)
        throw ConfigError("double-well variants t2 and t3 have exactly two trajectories");
    if (name == ExperimentName::CentralForce && trajectories != 1)
        throw ConfigError("central-force experiment uses one trajectory");
    if (point_mode == PointMode::Grid && grid_points < 2) throw ConfigError("grid needs at least two points");
    if (!(lambda_start > 0.0) || !(lambda_factor > 0.0 && lambda_factor < 1.0))
        throw ConfigError("lambda schedule needs start > 0 and factor in (0, 1)");
    if (!(residual_tol >= 0.0)) throw ConfigError("residual tolerance must be non-negative");
}

namespace {

nlohmann::ordered_json stage_to_json(const TrainStage& st) {
    nlohmann::ordered_json j;
    j["activation"] = to_string(st.activation);
    j["output"] = to_string(st.output);
    j["learning_rate"] = st.config.learning_rate;
    j["steps"] = st.config.steps;
    j["log_every"] = st.config.log_every;
    j["anchor_output_bias"] = st.anchor_output_bias;
    if (st.config.chunk_size) j["chunk_size"] = *st.config.chunk_size;
    if (st.config.loss_threshold) j["loss_threshold"] = *st.config.loss_threshold;
    if (st.config.max_stages) j["max_stages"] = *st.config.max_stages;
    return j;
}

void apply_stage_json(TrainStage& st, const nlohmann::json& j) {
    for (const auto& [key, value] : j.items()) {
        if (key == "activation") st.activation = activation_from_string(value.get<std::string>());
        else if (key == "output") st.output = output_transform_from_string(value.get<std::string>());
        else if (key == "learning_rate") st.config.learning_rate = value.get<double>();
        else if (key == "steps") st.config.steps = value.get<long>();
        else if (key == "log_every") st.config.log_every = value.get<long>();
        else if (key == "anchor_output_bias") st.anchor_output_bias = value.get<bool>();
        else if (key == "chunk_size") st.config.chunk_size = value.is_null() ? std::nullopt : std::optional<std::size_t>(value.get<std::size_t>());
        else if (key == "loss_threshold") st.config.loss_threshold = value.is_null() ? std::nullopt : std::optional<double>(value.get<double>());
        else if (key == "max_stages") st.config.max_stages = value.is_null() ? std::nullopt : std::optional<std::size_t>(value.get<std::size_t>());
        else throw ConfigError("unknown training stage field '" + key + "'");
    }
}

}  // namespace

ExperimentSpec experiment_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("experiment")) throw ConfigError("configuration needs an 'experiment' field");
    try {
        const auto name = experiment_name_from_string(doc.at("experiment").get<std::string>());
        const auto scale = doc.contains("scale") ? scale_from_string(doc["scale"].get<std::string>()) : Scale::Desk;
        const auto variant =
            doc.contains("variant") ? variant_from_string(doc["variant"].get<std::string>()) : DoubleWellVariant::T1;
        ExperimentSpec s = ExperimentSpec::defaults(name, scale, variant);
        for (const auto& [key, value] : doc.items()) {
            if (key == "experiment" || key == "scale" || key == "variant") continue;
            if (key == "seed") s.seed = value.get<std::uint64_t>();
            else if (key == "trajectories") s.trajectories = value.get<std::size_t>();
            else if (key == "test_trajectories") s.test_trajectories = value.get<std::size_t>();
            else if (key == "transitions") s.transitions = value.get<std::size_t>();
            else if (key == "step") s.step = value.get<double>();
            else if (key == "integrator") s.integrator = integrator_from_string(value.get<std::string>());
            else if (key == "pair_stride") s.pair_stride = value.get<std::size_t>();
            else if (key == "hidden") s.hidden = value.get<std::vector<int>>();
            else if (key == "stages") {
                if (!value.is_array()) throw ConfigError("'stages' must be an array");
                std::vector<TrainStage> stages;
                for (std::size_t i = 0; i < value.size(); ++i) {
                    TrainStage st = i < s.stages.size() ? s.stages[i] : TrainStage{};
                    apply_stage_json(st, value[i]);
                    stages.push_back(st);
                }
                s.stages = std::move(stages);
            } else if (key == "point_mode") s.point_mode = point_mode_from_string(value.get<std::string>());
            else if (key == "grid_points") s.grid_points = value.get<std::size_t>();
            else if (key == "lambda_start") s.lambda_start = value.get<double>();
            else if (key == "lambda_factor") s.lambda_factor = value.get<double>();
            else if (key == "residual_tol") s.residual_tol = value.get<double>();
            else if (key == "residual_mode") s.residual_mode = residual_mode_from_string(value.get<std::string>());
            else if (key == "bias") s.bias = bias_extremum_from_string(value.get<std::string>());
            else throw ConfigError("unknown configuration field '" + key + "'");
        }
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed configuration: ") + e.what());
    }
}

std::string experiment_to_json(const ExperimentSpec& s) {
    nlohmann::ordered_json j;
    j["experiment"] = to_string(s.name);
    if (s.name == ExperimentName::DoubleWell) j["variant"] = to_string(s.variant);
    j["scale"] = to_string(s.scale);
    j["seed"] = s.seed;
    j["trajectories"] = s.trajectories;
    j["test_trajectories"] = s.test_trajectories;
    j["transitions"] = s.transitions;
    j["step"] = s.step;
    j["integrator"] = to_string(s.integrator);
    j["pair_stride"] = s.pair_stride;
    j["hidden"] = s.hidden;
    auto stages = nlohmann::ordered_json::array();
    for (const auto& st : s.stages) stages.push_back(stage_to_json(st));
    j["stages"] = stages;
    j["point_mode"] = to_string(s.point_mode);
    j["grid_points"] = s.grid_points;
    j["lambda_start"] = s.lambda_start;
    j["lambda_factor"] = s.lambda_factor;
    j["residual_tol"] = s.residual_tol;
    j["residual_mode"] = to_string(s.residual_mode);
    j["bias"] = to_string(s.bias);
    return j.dump(2) + "\n";
}

Corpus generate_corpus(const ExperimentSpec& spec) {
    spec.validate();
    Corpus c;
    auto rng = make_rng(spec.seed, "corpus");
    const std::size_t n = spec.transitions;
    const double h = spec.step;

    switch (spec.name) {
        case ExperimentName::SHO: {
            c.system = SystemSpec::sho();
            for (std::size_t i = 1; i <= spec.trajectories; ++i)
                c.train.push_back(simulate(c.system, state_from({0.0}, {static_cast<double>(i)}), h, n, spec.integrator));
            break;
        }
        case ExperimentName::DoubleWell: {
            c.system = SystemSpec::double_well();
            std::vector<PhaseState> ics;
            if (spec.variant == DoubleWellVariant::T1) {
                std::uniform_real_distribution<double> u(-1.0, 1.0);
                while (true) {
                    ics.clear();
                    bool crosses = false;
                    for (std::size_t j = 0; j < spec.trajectories; ++j) {
                        const double q = u(rng);
                        const double p = u(rng);
                        ics.push_back(state_from({q}, {p}));
                        crosses = crosses || total_energy(c.system, ics.back()) > kDoubleWellBarrierEnergy;
                    }
                    if (crosses) break;
                    ++c.resamples;
                }
            } else if (spec.variant == DoubleWellVariant::T2) {
                ics = {state_from({3.0}, {0.0}), state_from({-1.0}, {0.0})};
            } else {
                ics = {state_from({-0.7}, {0.0}), state_from({0.5}, {0.0})};
            }
            for (const auto& ic : ics) c.train.push_back(simulate(c.system, ic, h, n, spec.integrator));
            break;
        }
        case ExperimentName::CentralForce: {
            c.system = SystemSpec::central_force();
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            while (true) {
                PhaseState ic;
                ic.q = Vec(3);
                ic.p = Vec(3);
                for (int i = 0; i < 3; ++i) ic.q[i] = u(rng);
                for (int i = 0; i < 3; ++i) ic.p[i] = u(rng);
                try {
                    Trajectory orbit = simulate(c.system, ic, h, n, spec.integrator);
                    const RadialTrajectory radial = reduce_to_radial(orbit, c.system.mass);
                    c.ell = radial.ell;
                    c.train.push_back(radial.as_trajectory());
                    c.raw.push_back(std::move(orbit));
                    break;
                } catch (const DomainError&) {
                    ++c.resamples;
                }
            }
            break;
        }
        case ExperimentName::CoulombDifference:
        case ExperimentName::CoulombDistance: {
            c.system = SystemSpec::coulomb();
            std::normal_distribution<double> normal(0.0, 1.0);
            const std::size_t total = spec.trajectories + spec.test_trajectories;
            for (std::size_t j = 0; j < total; ++j) {
                while (true) {
                    PhaseState ic;
                    ic.q = Vec(6);
                    ic.p = Vec(6);
                    for (int i = 0; i < 6; ++i) ic.q[i] = normal(rng);
                    for (int i = 0; i < 6; ++i) ic.p[i] = normal(rng);
                    try {
                        if ((ic.q.head<3>() - ic.q.tail<3>()).norm() < kCoulombCollisionGuard)
                            throw DomainError("initial condition inside collision guard");
                        Trajectory t = simulate(c.system, ic, h, n, spec.integrator);
                        if (min_pair_distance(t) < kCoulombCollisionGuard)
                            throw DomainError("trajectory approaches collision");
                        (j < spec.trajectories ? c.train : c.test).push_back(std::move(t));
                        break;
                    } catch (const DomainError&) {
                        ++c.resamples;
                    }
                }
            }
            break;
        }
    }
    for (const auto* set : {&c.train, &c.test, &c.raw}) {
        if (set == &c.train && spec.name == ExperimentName::CentralForce) continue;
        for (const auto& t : *set) c.max_energy_drift = std::max(c.max_energy_drift, relative_drift(c.system, t));
    }
    return c;
}

std::vector<int> layer_dims(const ExperimentSpec& spec) {
    std::vector<int> dims;
    switch (spec.input_transform()) {
        case InputTransform::Identity: dims.push_back(1); break;
        case InputTransform::PairDifference: dims.push_back(3); break;
        case InputTransform::PairDistance: dims.push_back(1); break;
    }
    dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
    dims.push_back(1);
    return dims;
}

std::pair<DenseNetwork, std::vector<TrainReport>> train_experiment(const ExperimentSpec& spec, const Corpus& corpus,
                                                                   const ProgressFn& progress) {
    spec.validate();
    const std::vector<Trajectory> strided =
        spec.pair_stride > 1 ? strided_pairs(corpus.train, spec.pair_stride) : std::vector<Trajectory>{};
    const std::vector<Trajectory>& data = spec.pair_stride > 1 ? strided : corpus.train;

    const auto& first = spec.stages.front();
    DenseNetwork net = init_network(layer_dims(spec), std::vector<Activation>(spec.hidden.size(), first.activation),
                                    spec.input_transform(), first.output, derive_seed(spec.seed, "init"));
    std::vector<TrainReport> reports;
    long offset = 0;
    for (std::size_t s = 0; s < spec.stages.size(); ++s) {
        const auto& st = spec.stages[s];
        DenseNetwork next = swap_activations(net, std::vector<Activation>(spec.hidden.size(), st.activation), st.output);
        if (st.anchor_output_bias) {
            for (std::size_t l = 1; l < next.layer_count(); ++l) {
                const double shift = activation_jet(next.activations[l - 1], 0.0).value -
                                     activation_jet(net.activations[l - 1], 0.0).value;
                next.biases[l] -= shift * next.weights[l].rowwise().sum();
            }
            next.biases.back()[0] -= pre_output(next, data).maxCoeff();
        }
        net = std::move(next);
        const ProgressFn staged = progress ? ProgressFn([&, offset](long step, double value) {
            progress(offset + step, value);
        })
                                           : ProgressFn{};
        auto [trained, report] = st.config.chunk_size ? train_chunked(net, data, st.config, staged)
                                                      : train(net, data, st.config, staged);
        net = std::move(trained);
        // global step numbering across stages
        for (auto& rec : report.loss_history) rec.step += offset;
        if (!report.loss_history.empty()) offset = report.loss_history.back().step;
        reports.push_back(std::move(report));
    }
    return {std::move(net), std::move(reports)};
}

const CoefficientError* TruthComparison::find(const std::string& label) const {
    for (const auto& e : errors)
        if (e.label == label) return &e;
    return nullptr;
}

TruthComparison compare_to_truth(const SparseFit& fit, const CandidateLibrary& lib,
                                 const std::map<std::string, double>& truth) {
    TruthComparison out;
    for (const auto& [label, value] : truth) {
        const auto j = lib.index_of(label);
        if (!j) throw ConfigError("truth label '" + label + "' is not in the library");
        if (lib.functions[*j].kind == CandidateKind::Constant) continue;
        CoefficientError e;
        e.label = label;
        e.truth = value;
        e.fitted = fit.beta[static_cast<Eigen::Index>(*j)];
        e.missing = !fit.active[*j];
        e.relative_error = e.missing ? 1.0 : std::abs(e.fitted - value) / std::abs(value);
        out.errors.push_back(e);
    }
    for (std::size_t j = 0; j < lib.size(); ++j) {
        const auto& f = lib.functions[j];
        if (!fit.active[j] || f.kind == CandidateKind::Constant || truth.count(f.label)) continue;
        out.spurious.push_back({f.label, fit.beta[static_cast<Eigen::Index>(j)]});
    }
    return out;
}

CandidateLibrary experiment_library(const ExperimentSpec& spec) {
    switch (spec.name) {
        case ExperimentName::SHO: return CandidateLibrary::polynomial(3, "q");
        case ExperimentName::DoubleWell: return CandidateLibrary::polynomial(6, "q");
        case ExperimentName::CentralForce: return CandidateLibrary::radial_wall(10.0, 3, "r");
        case ExperimentName::CoulombDifference:
        case ExperimentName::CoulombDistance: return CandidateLibrary::inverse_powers(3, "r");
    }
    return {};
}

std::map<std::string, double> truth_coefficients(const ExperimentSpec& spec, const Corpus& corpus) {
    switch (spec.name) {
        case ExperimentName::SHO: return {{"q^2", 0.5}};
        case ExperimentName::DoubleWell: return {{"q", 2.0}, {"q^2", 3.0}, {"q^3", -4.0}, {"q^4", 1.0}};
        case ExperimentName::CentralForce:
            return {{"r^-1", 1.0}, {"(10-r)^-1", 1.0}, {"r^-2", 0.5 * corpus.ell * corpus.ell}};
        case ExperimentName::CoulombDifference:
        case ExperimentName::CoulombDistance: return {{"r^-1", -1.0 / (4.0 * std::numbers::pi)}};
    }
    return {};
}

namespace {

// Training states actually seen by the optimizer (chunked runs only visit their windows).
std::size_t trained_states(const ExperimentSpec& spec, const Trajectory& t) {
    const auto& cfg = spec.stages.front().config;
    if (!cfg.chunk_size) return t.size();
    std::size_t stages = t.transitions() / *cfg.chunk_size;
    if (cfg.max_stages) stages = std::min(stages, *cfg.max_stages);
    return stages * *cfg.chunk_size + 1;
}

Mat training_positions(const ExperimentSpec& spec, const std::vector<Trajectory>& set) {
    Eigen::Index cols = 0;
    for (const auto& t : set) cols += static_cast<Eigen::Index>(trained_states(spec, t));
    Mat out(set.empty() ? 0 : static_cast<Eigen::Index>(set.front().dim()), cols);
    Eigen::Index k = 0;
    for (const auto& t : set) {
        const auto n = static_cast<Eigen::Index>(trained_states(spec, t));
        out.middleCols(k, n) = t.positions().leftCols(n);
        k += n;
    }
    return out;
}

// Library coordinate (q, r or |q1 - q2|) of raw positions.
Mat library_coordinates(const ExperimentSpec& spec, const Mat& raw) {
    if (is_coulomb(spec.name)) return (raw.topRows(3) - raw.bottomRows(3)).colwise().norm();
    return raw;
}

// Raw network inputs placed along the first axis at the given library coordinates.
Mat raw_from_coordinates(const ExperimentSpec& spec, const Mat& coords) {
    if (!is_coulomb(spec.name)) return coords;
    Mat raw = Mat::Zero(6, coords.cols());
    raw.row(0) = coords.row(0);
    return raw;
}

Vec linspace(double lo, double hi, std::size_t n) {
    return Vec::LinSpaced(static_cast<Eigen::Index>(n), lo, hi);
}

Vec bias_adjusted(const Vec& v, BiasExtremum b) {
    const double e = b == BiasExtremum::Min ? v.minCoeff() : v.maxCoeff();
    return v.array() - e;
}

Vec true_potential(const ExperimentSpec& spec, const Corpus& corpus, const Mat& raw) {
    Vec out(raw.cols());
    for (Eigen::Index k = 0; k < raw.cols(); ++k) {
        if (spec.name == ExperimentName::CentralForce) {
            const double r = raw(0, k);
            out[k] = 1.0 / r + 1.0 / (10.0 - r) + corpus.ell * corpus.ell / (2.0 * r * r);
        } else {
            out[k] = eval_potential(corpus.system, raw.col(k));
        }
    }
    return out;
}

PlotSeries make_series(std::string name, std::vector<std::string> columns, const std::vector<const Vec*>& cols) {
    PlotSeries s;
    s.name = std::move(name);
    s.columns = std::move(columns);
    const Eigen::Index n = cols.front()->size();
    s.rows.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        std::vector<double> row;
        for (const Vec* c : cols) row.push_back((*c)[k]);
        s.rows.push_back(std::move(row));
    }
    return s;
}

}  // namespace

std::pair<Mat, Vec> regression_data(const ExperimentSpec& spec, const Corpus& corpus, const DenseNetwork& net) {
    const Mat raw_train = training_positions(spec, corpus.train);
    if (spec.point_mode == PointMode::Training) {
        Mat coords = library_coordinates(spec, raw_train);
        return {std::move(coords), forward_batch(net, raw_train)};
    }
    const Mat coords_train = library_coordinates(spec, raw_train);
    const Vec grid = linspace(coords_train.row(0).minCoeff(), coords_train.row(0).maxCoeff(), spec.grid_points);
    Mat coords = grid.transpose();
    return {coords, forward_batch(net, raw_from_coordinates(spec, coords))};
}

std::vector<PlotSeries> plot_series(const ExperimentSpec& spec, const Corpus& corpus, const DenseNetwork& net) {
    std::vector<PlotSeries> out;
    const Mat raw_train = training_positions(spec, corpus.train);
    switch (spec.name) {
        case ExperimentName::SHO:
        case ExperimentName::CentralForce: {
            const Vec x = linspace(raw_train.row(0).minCoeff(), raw_train.row(0).maxCoeff(), spec.grid_points);
            const Mat pts = x.transpose();
            const Vec vhat = bias_adjusted(forward_batch(net, pts), spec.bias);
            const Vec vtrue = bias_adjusted(true_potential(spec, corpus, pts), spec.bias);
            const std::string axis = spec.name == ExperimentName::SHO ? "q" : "r";
            out.push_back(make_series("potential", {axis, "v_hat", "v_true"}, {&x, &vhat, &vtrue}));
            break;
        }
        case ExperimentName::DoubleWell: {
            const Vec x = linspace(-1.0, 3.0, 401);
            const Mat pts = x.transpose();
            const Vec vhat = bias_adjusted(forward_batch(net, pts), spec.bias);
            const Vec vtrue = bias_adjusted(true_potential(spec, corpus, pts), spec.bias);
            const double lo = raw_train.row(0).minCoeff();
            const double hi = raw_train.row(0).maxCoeff();
            const Vec in_training = x.unaryExpr([&](double q) { return q >= lo && q <= hi ? 1.0 : 0.0; });
            out.push_back(make_series("potential", {"q", "v_hat", "v_true", "in_training"}, {&x, &vhat, &vtrue, &in_training}));
            break;
        }
        case ExperimentName::CoulombDifference:
        case ExperimentName::CoulombDistance: {
            // the figures use at most the first 1000 points of each trajectory
            const auto scatter = [&](const std::vector<Trajectory>& set, const std::string& name) {
                if (set.empty()) return;
                Eigen::Index per = std::min<Eigen::Index>(1000, static_cast<Eigen::Index>(set.front().size()));
                Mat raw(6, per * static_cast<Eigen::Index>(set.size()));
                for (std::size_t j = 0; j < set.size(); ++j)
                    raw.middleCols(static_cast<Eigen::Index>(j) * per, per) = set[j].positions().leftCols(per);
                const Vec r = library_coordinates(spec, raw).row(0).transpose();
                const Vec vhat = bias_adjusted(forward_batch(net, raw), spec.bias);
                const Vec vtrue = bias_adjusted(true_potential(spec, corpus, raw), spec.bias);
                out.push_back(make_series(name, {"r", "v_hat", "v_true"}, {&r, &vhat, &vtrue}));
            };
            scatter(corpus.train, "potential_train");
            scatter(corpus.test, "potential_test");
            break;
        }
    }
    return out;
}

ExperimentResult interpret_experiment(const ExperimentSpec& spec, const Corpus& corpus, DenseNetwork net,
                                      std::vector<TrainReport> reports) {
    ExperimentResult res;
    res.spec = spec;
    res.library = experiment_library(spec);
    auto [points, values] = regression_data(spec, corpus, net);
    const Mat X = build_design(res.library, points);
    res.search = tune_lambda(X, values, spec.lambda_start, spec.lambda_factor, spec.residual_tol, spec.residual_mode);
    res.truth = truth_coefficients(spec, corpus);
    res.comparison = compare_to_truth(res.search.fit, res.library, res.truth);
    res.plots = plot_series(spec, corpus, net);

    const Vec reparsed = parse_expression(render_expression(res.search.fit, res.library, 17), res.library);
    res.diagnostics["render_max_abs_error"] = (X * reparsed - X * res.search.fit.beta).cwiseAbs().maxCoeff();
    res.diagnostics["ell"] = corpus.ell;
    res.diagnostics["resamples"] = static_cast<double>(corpus.resamples);
    res.diagnostics["max_energy_drift"] = corpus.max_energy_drift;
    if (!reports.empty()) res.diagnostics["final_loss"] = reports.back().final_loss;
    double wall = 0.0;
    for (const auto& r : reports) wall += r.wall_time;
    res.diagnostics["train_seconds"] = wall;

    res.regression_points = std::move(points);
    res.regression_values = std::move(values);
    res.network = std::move(net);
    res.reports = std::move(reports);
    return res;
}

namespace {

ExperimentResult run_pipeline(const ExperimentSpec& spec, const ProgressFn& progress) {
    const Corpus corpus = generate_corpus(spec);
    auto [net, reports] = train_experiment(spec, corpus, progress);
    return interpret_experiment(spec, corpus, std::move(net), std::move(reports));
}

void expect(const ExperimentSpec& spec, std::initializer_list<ExperimentName> names) {
    for (auto n : names)
        if (spec.name == n) return;
    throw ConfigError("experiment '" + spec.label() + "' passed to the wrong runner");
}

}  // namespace

ExperimentResult run_sho(const ExperimentSpec& spec, const ProgressFn& progress) {
    expect(spec, {ExperimentName::SHO});
    return run_pipeline(spec, progress);
}

ExperimentResult run_double_well(const ExperimentSpec& spec, const ProgressFn& progress) {
    expect(spec, {ExperimentName::DoubleWell});
    return run_pipeline(spec, progress);
}

ExperimentResult run_central_force(const ExperimentSpec& spec, const ProgressFn& progress) {
    expect(spec, {ExperimentName::CentralForce});
    return run_pipeline(spec, progress);
}

ExperimentResult run_coulomb(const ExperimentSpec& spec, const ProgressFn& progress) {
    expect(spec, {ExperimentName::CoulombDifference, ExperimentName::CoulombDistance});
    return run_pipeline(spec, progress);
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const ProgressFn& progress) {
    switch (spec.name) {
        case ExperimentName::SHO: return run_sho(spec, progress);
        case ExperimentName::DoubleWell: return run_double_well(spec, progress);
        case ExperimentName::CentralForce: return run_central_force(spec, progress);
        case ExperimentName::CoulombDifference:
        case ExperimentName::CoulombDistance: return run_coulomb(spec, progress);
    }
    throw ConfigError("unknown experiment");
}

std::vector<std::filesystem::path> emit_plot_data(const ExperimentResult& result, const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> written;
    for (const auto& s : result.plots) {
        std::string text;
        for (std::size_t c = 0; c < s.columns.size(); ++c) text += (c ? "," : "") + s.columns[c];
        text += '\n';
        for (const auto& row : s.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c) text += ',';
                text += format_shortest(row[c]);
            }
            text += '\n';
        }
        const auto path = dir / (s.name + ".csv");
        write_text_file(path, text);
        written.push_back(path);
    }
    return written;
}

std::string comparison_csv(const TruthComparison& comparison) {
    std::string out = "label,truth,fitted,relative_error,missing\n";
    for (const auto& e : comparison.errors)
        out += e.label + "," + format_shortest(e.truth) + "," + format_shortest(e.fitted) + "," +
               format_shortest(e.relative_error) + "," + (e.missing ? "1" : "0") + "\n";
    for (const auto& s : comparison.spurious) out += s.label + ",0," + format_shortest(s.value) + ",,spurious\n";
    return out;
}

}  // namespace hamlearn
