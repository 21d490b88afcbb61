#include "hamlearn/commands.hpp"

#include "hamlearn/errors.hpp"
#include "hamlearn/io.hpp"
#include "hamlearn/seeding.hpp"

#include <chrono>
#include <cstdio>

namespace hamlearn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        out.push_back(text.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

double to_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad number '" + s + "' in " + what);
    }
}

int to_int(const std::string& s, const std::string& what) {
    const double v = to_double(s, what);
    if (v != static_cast<int>(v)) throw ConfigError("expected an integer, got '" + s + "' in " + what);
    return static_cast<int>(v);
}

RunManifest base_manifest(const CommandContext& ctx, const ExperimentSpec* spec) {
    RunManifest m;
    m.command_line = ctx.command_line;
    m.versions = build_versions();
    if (spec) {
        m.config_digest = sha256_hex(experiment_to_json(*spec));
        m.seeds["root"] = spec->seed;
        m.seeds["corpus"] = derive_seed(spec->seed, "corpus");
        m.seeds["init"] = derive_seed(spec->seed, "init");
    } else if (ctx.config) {
        m.config_digest = file_sha256(*ctx.config);
    }
    return m;
}

std::string trajectory_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "traj_%03zu.csv", i);
    return buf;
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const FormatError*>(&e)) return kExitConfig;
    if (dynamic_cast<const DomainError*>(&e)) return kExitDomain;
    if (dynamic_cast<const DivergenceError*>(&e)) return kExitDivergence;
    if (dynamic_cast<const NoFitError*>(&e) || dynamic_cast<const AllPrunedError*>(&e)) return kExitNoFit;
    return kExitFailure;
}

ExperimentSpec resolve_spec(const CommandContext& ctx, const std::optional<std::string>& name,
                            const std::optional<std::string>& variant) {
    ExperimentSpec spec;
    if (ctx.config) {
        spec = experiment_from_json(read_text_file(*ctx.config));
        if (name && experiment_name_from_string(*name) != spec.name)
            throw ConfigError("experiment '" + *name + "' does not match configuration '" + to_string(spec.name) + "'");
        if (variant && variant_from_string(*variant) != spec.variant)
            throw ConfigError("variant '" + *variant + "' does not match configuration");
        if (ctx.scale && *ctx.scale != spec.scale)
            throw ConfigError("--scale conflicts with the configuration file; set it in the file instead");
    } else {
        if (!name) throw ConfigError("an experiment name or --config is required");
        spec = ExperimentSpec::defaults(experiment_name_from_string(*name), ctx.scale.value_or(Scale::Desk),
                                        variant ? variant_from_string(*variant) : DoubleWellVariant::T1);
    }
    if (ctx.seed) spec.seed = *ctx.seed;
    spec.validate();
    return spec;
}

CandidateLibrary parse_library_spec(const std::string& text) {
    const auto parts = split(text, ':');
    const std::string& kind = parts[0];
    CandidateLibrary lib;
    if (kind == "poly" && (parts.size() == 2 || parts.size() == 3)) {
        lib = CandidateLibrary::polynomial(to_int(parts[1], "library"), parts.size() == 3 ? parts[2] : "q");
    } else if (kind == "inverse" && (parts.size() == 2 || parts.size() == 3)) {
        lib = CandidateLibrary::inverse_powers(to_int(parts[1], "library"), parts.size() == 3 ? parts[2] : "r");
    } else if (kind == "wall" && (parts.size() == 3 || parts.size() == 4)) {
        lib = CandidateLibrary::radial_wall(to_double(parts[1], "library"), to_int(parts[2], "library"),
                                            parts.size() == 4 ? parts[3] : "r");
    } else {
        throw ConfigError("library must be poly:DEG[:VAR], inverse:P[:VAR] or wall:W:P[:VAR], got '" + text + "'");
    }
    lib.validate();
    return lib;
}

InterpretPoints parse_points_spec(const std::string& text, std::size_t model_input_dim) {
    const bool pair = model_input_dim == 6;
    if (model_input_dim != 1 && !pair)
        throw ConfigError("interpretation supports one-dimensional and two-body models only");
    const auto parts = split(text, ':');
    InterpretPoints pts;
    if (parts[0] == "grid" && parts.size() == 4) {
        const double lo = to_double(parts[1], "points");
        const double hi = to_double(parts[2], "points");
        const int n = to_int(parts[3], "points");
        if (n < 2 || !(hi > lo)) throw ConfigError("grid needs HI > LO and at least two points");
        pts.coordinates = Vec::LinSpaced(n, lo, hi).transpose();
        pts.inputs = Mat::Zero(static_cast<Eigen::Index>(model_input_dim), n);
        pts.inputs.row(0) = pts.coordinates.row(0);
    } else if (parts[0] == "corpus" && parts.size() >= 2) {
        const auto corpus = read_corpus_dir(text.substr(7));
        Eigen::Index cols = 0;
        for (const auto& t : corpus) {
            if (t.dim() != model_input_dim)
                throw ConfigError("corpus dimension " + std::to_string(t.dim()) + " does not match the model");
            cols += static_cast<Eigen::Index>(t.size());
        }
        pts.inputs.resize(static_cast<Eigen::Index>(model_input_dim), cols);
        Eigen::Index k = 0;
        for (const auto& t : corpus) {
            pts.inputs.middleCols(k, t.positions().cols()) = t.positions();
            k += t.positions().cols();
        }
        pts.coordinates = pair ? Mat((pts.inputs.topRows(3) - pts.inputs.bottomRows(3)).colwise().norm())
                               : pts.inputs;
    } else {
        throw ConfigError("points must be grid:LO:HI:N or corpus:DIR, got '" + text + "'");
    }
    return pts;
}

std::string loss_csv(const std::vector<TrainReport>& reports) {
    std::string out = "step,loss\n";
    for (const auto& r : reports)
        for (const auto& rec : r.loss_history) out += std::to_string(rec.step) + "," + format_shortest(rec.loss) + "\n";
    return out;
}

RunManifest cmd_simulate(const CommandContext& ctx, const ExperimentSpec& spec) {
    const auto start = Clock::now();
    const Corpus corpus = generate_corpus(spec);
    RunManifest m = base_manifest(ctx, &spec);
    m.wall_times["simulate"] = seconds_since(start);
    const auto write_set = [&](const std::vector<Trajectory>& set, const std::filesystem::path& dir) {
        for (std::size_t i = 0; i < set.size(); ++i) {
            const auto path = dir / trajectory_name(i);
            write_trajectory_csv(path, set[i]);
            m.add_artifact(path, ctx.out);
        }
    };
    write_set(corpus.train, ctx.out);
    write_set(corpus.test, ctx.out / "test");
    write_set(corpus.raw, ctx.out / "raw");
    m.metrics["resamples"] = static_cast<double>(corpus.resamples);
    m.metrics["max_energy_drift"] = corpus.max_energy_drift;
    if (spec.name == ExperimentName::CentralForce) m.metrics["ell"] = corpus.ell;
    write_manifest(m, ctx.out);
    return m;
}

RunManifest cmd_train(const CommandContext& ctx, const ExperimentSpec& spec, const std::filesystem::path& corpus_dir,
                      const std::filesystem::path& model_path) {
    Corpus corpus;
    corpus.train = read_corpus_dir(corpus_dir);
    const auto start = Clock::now();
    auto [net, reports] = train_experiment(spec, corpus, ctx.progress);
    RunManifest m = base_manifest(ctx, &spec);
    m.wall_times["train"] = seconds_since(start);
    m.metrics["final_loss"] = reports.back().final_loss;

    write_text_file(model_path, serialize(net));
    m.add_artifact(model_path, ctx.out);
    auto loss_path = model_path;
    loss_path.replace_extension(".loss.csv");
    write_text_file(loss_path, loss_csv(reports));
    m.add_artifact(loss_path, ctx.out);
    write_manifest(m, ctx.out);
    return m;
}

RunManifest cmd_interpret(const CommandContext& ctx, const std::filesystem::path& model_path,
                          const std::string& library_spec, const std::string& points_spec,
                          const InterpretOptions& options) {
    const CandidateLibrary lib = parse_library_spec(library_spec);
    const DenseNetwork net = deserialize(read_text_file(model_path));
    const InterpretPoints pts = parse_points_spec(points_spec, net.input_dim());
    const auto start = Clock::now();
    const Mat X = build_design(lib, pts.coordinates);
    const Vec y = forward_batch(net, pts.inputs);
    const LambdaSearch search =
        tune_lambda(X, y, options.lambda_start, options.lambda_factor, options.tolerance, options.mode);

    RunManifest m = base_manifest(ctx, nullptr);
    m.wall_times["interpret"] = seconds_since(start);
    m.metrics["lambda"] = search.fit.lambda;
    m.metrics["normalized_residual"] = search.fit.normalized_residual();
    write_text_file(ctx.out / "fit.txt", fit_report_text(search, lib));
    write_text_file(ctx.out / "fit.json", fit_report_json(search, lib));
    m.add_artifact(ctx.out / "fit.txt", ctx.out);
    m.add_artifact(ctx.out / "fit.json", ctx.out);
    write_manifest(m, ctx.out);
    return m;
}

RunManifest cmd_experiment(const CommandContext& ctx, const ExperimentSpec& spec) {
    RunManifest m = base_manifest(ctx, &spec);
    auto start = Clock::now();
    const Corpus corpus = generate_corpus(spec);
    m.wall_times["simulate"] = seconds_since(start);
    start = Clock::now();
    auto [net, reports] = train_experiment(spec, corpus, ctx.progress);
    m.wall_times["train"] = seconds_since(start);
    start = Clock::now();
    const ExperimentResult res = interpret_experiment(spec, corpus, std::move(net), std::move(reports));
    m.wall_times["interpret"] = seconds_since(start);

    const auto& dir = ctx.out;
    std::vector<std::filesystem::path> files = {dir / "config.json", dir / "model.json", dir / "loss.csv",
                                                dir / "fit.txt", dir / "fit.json", dir / "comparison.csv"};
    write_text_file(files[0], experiment_to_json(spec));
    write_text_file(files[1], serialize(res.network));
    write_text_file(files[2], loss_csv(res.reports));
    write_text_file(files[3], fit_report_text(res.search, res.library));
    write_text_file(files[4], fit_report_json(res.search, res.library));
    write_text_file(files[5], comparison_csv(res.comparison));
    for (const auto& p : emit_plot_data(res, dir)) files.push_back(p);
    for (const auto& p : files) m.add_artifact(p, dir);
    for (const auto& [k, v] : res.diagnostics) m.metrics[k] = v;
    for (const auto& e : res.comparison.errors) m.metrics["relative_error[" + e.label + "]"] = e.relative_error;
    write_manifest(m, dir);
    return m;
}

}  // namespace hamlearn
