#include "hamlearn/errors.hpp"
#include "hamlearn/experiments.hpp"

#include <nlohmann/json.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace hamlearn;

namespace {

ExperimentSpec tiny(ExperimentName name, DoubleWellVariant variant = DoubleWellVariant::T1) {
    auto s = ExperimentSpec::defaults(name, Scale::Desk, variant);
    s.transitions = 200;
    for (auto& st : s.stages) {
        st.config.steps = 20;
        st.config.log_every = 10;
        if (st.config.chunk_size) st.config.chunk_size = 100;
    }
    if (name == ExperimentName::CoulombDifference || name == ExperimentName::CoulombDistance) {
        s.trajectories = 3;
        s.test_trajectories = 2;
    }
    return s;
}

}  // namespace

TEST(Defaults, PaperScaleMatchesStatedValues) {
    const auto sho = ExperimentSpec::defaults(ExperimentName::SHO, Scale::Paper);
    EXPECT_EQ(sho.trajectories, 10u);
    EXPECT_EQ(sho.transitions, 1000u);
    EXPECT_EQ(sho.step, 0.01);
    EXPECT_EQ(sho.hidden, (std::vector<int>{16, 16}));
    ASSERT_EQ(sho.stages.size(), 1u);
    EXPECT_EQ(sho.stages[0].config.steps, 50000);
    EXPECT_EQ(sho.stages[0].config.learning_rate, 0.01);
    EXPECT_EQ(sho.stages[0].activation, Activation::Tanh);

    for (auto v : {DoubleWellVariant::T1, DoubleWellVariant::T2, DoubleWellVariant::T3}) {
        const auto dw = ExperimentSpec::defaults(ExperimentName::DoubleWell, Scale::Paper, v);
        EXPECT_EQ(dw.transitions + 1, 5001u);
        EXPECT_EQ(dw.step, 0.001);
        EXPECT_EQ(dw.stages[0].config.steps, 50000);
        EXPECT_EQ(dw.stages[0].config.learning_rate, 0.01);
        EXPECT_EQ(dw.trajectories, v == DoubleWellVariant::T1 ? 10u : 2u);
    }

    const auto cf = ExperimentSpec::defaults(ExperimentName::CentralForce, Scale::Paper);
    EXPECT_EQ(cf.trajectories, 1u);
    EXPECT_EQ(cf.transitions + 1, 20001u);
    EXPECT_EQ(cf.step, 0.001);
    EXPECT_EQ(cf.pair_stride, 1u);
    ASSERT_EQ(cf.stages.size(), 2u);
    EXPECT_EQ(cf.stages[0].activation, Activation::ELU);
    EXPECT_EQ(cf.stages[0].output, OutputTransform::Identity);
    EXPECT_EQ(cf.stages[1].activation, Activation::Softplus);
    EXPECT_EQ(cf.stages[1].output, OutputTransform::Exp);
    for (const auto& st : cf.stages) {
        EXPECT_EQ(st.config.steps, 500000);
        EXPECT_EQ(st.config.learning_rate, 1e-3);
    }

    const auto cd = ExperimentSpec::defaults(ExperimentName::CoulombDifference, Scale::Paper);
    EXPECT_EQ(cd.trajectories + cd.test_trajectories, 1000u);
    EXPECT_EQ(cd.trajectories, 800u);
    EXPECT_EQ(cd.transitions + 1, 10001u);
    EXPECT_EQ(cd.integrator, Integrator::Verlet);
    EXPECT_EQ(cd.hidden, std::vector<int>(8, 16));
    EXPECT_EQ(cd.stages[0].config.steps, 500000);
    EXPECT_EQ(cd.stages[0].config.learning_rate, 0.01);
    EXPECT_EQ(cd.stages[0].config.chunk_size, std::optional<std::size_t>(100));
    EXPECT_EQ(cd.input_transform(), InputTransform::PairDifference);

    const auto cr = ExperimentSpec::defaults(ExperimentName::CoulombDistance, Scale::Paper);
    EXPECT_EQ(cr.trajectories, 100u);
    EXPECT_EQ(cr.transitions + 1, 5001u);
    EXPECT_EQ(cr.hidden, std::vector<int>(8, 8));
    EXPECT_EQ(cr.stages[0].config.steps, 50000);
    EXPECT_EQ(cr.stages[0].config.learning_rate, 0.05);
    EXPECT_EQ(cr.input_transform(), InputTransform::PairDistance);
}

TEST(Defaults, LayerDims) {
    EXPECT_EQ(layer_dims(ExperimentSpec::defaults(ExperimentName::SHO, Scale::Desk)), (std::vector<int>{1, 16, 16, 1}));
    EXPECT_EQ(layer_dims(ExperimentSpec::defaults(ExperimentName::CoulombDifference, Scale::Desk)).front(), 3);
    EXPECT_EQ(layer_dims(ExperimentSpec::defaults(ExperimentName::CoulombDistance, Scale::Desk)).size(), 10u);
}

TEST(Names, RoundTripAndUnknown) {
    for (const auto& n : experiment_names()) EXPECT_EQ(to_string(experiment_name_from_string(n)), n);
    try {
        experiment_name_from_string("pendulum");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("central-force"), std::string::npos);
    }
    EXPECT_THROW(variant_from_string("t4"), ConfigError);
}

TEST(Config, JsonOverridesAndRoundTrip) {
    const auto s = experiment_from_json(R"({"experiment": "double-well", "variant": "t2", "seed": 9,
        "transitions": 300, "stages": [{"steps": 40}], "residual_tol": 0.1})");
    EXPECT_EQ(s.name, ExperimentName::DoubleWell);
    EXPECT_EQ(s.variant, DoubleWellVariant::T2);
    EXPECT_EQ(s.seed, 9u);
    EXPECT_EQ(s.transitions, 300u);
    EXPECT_EQ(s.stages[0].config.steps, 40);
    EXPECT_EQ(s.stages[0].config.learning_rate, 0.01);
    EXPECT_EQ(s.residual_tol, 0.1);
    const auto text = experiment_to_json(s);
    EXPECT_EQ(experiment_to_json(experiment_from_json(text)), text);
    for (auto name : {ExperimentName::SHO, ExperimentName::CentralForce, ExperimentName::CoulombDifference}) {
        const auto d = experiment_to_json(ExperimentSpec::defaults(name, Scale::Paper));
        EXPECT_EQ(experiment_to_json(experiment_from_json(d)), d);
    }
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(experiment_from_json("{"), ConfigError);
    EXPECT_THROW(experiment_from_json(R"({"seed": 1})"), ConfigError);
    EXPECT_THROW(experiment_from_json(R"({"experiment": "sho", "colour": 1})"), ConfigError);
    EXPECT_THROW(experiment_from_json(R"({"experiment": "sho", "stages": [{"momentum": 0.9}]})"), ConfigError);
    EXPECT_THROW(experiment_from_json(R"({"experiment": "sho", "transitions": "many"})"), ConfigError);
    EXPECT_THROW(experiment_from_json(R"({"experiment": "sho", "transitions": 0})"), ConfigError);
    EXPECT_THROW(experiment_from_json(R"({"experiment": "double-well", "variant": "t3", "trajectories": 4})"),
                 ConfigError);
    EXPECT_THROW(experiment_from_json(R"({"experiment": "central-force", "trajectories": 2})"), ConfigError);
    EXPECT_THROW(experiment_from_json(R"({"experiment": "sho", "lambda_factor": 1.5})"), ConfigError);
}

TEST(Corpus, ShoCirclesFromStatedInitialConditions) {
    const auto c = generate_corpus(ExperimentSpec::defaults(ExperimentName::SHO, Scale::Desk));
    ASSERT_EQ(c.train.size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_EQ(c.train[i].size(), 1001u);
        EXPECT_EQ(c.train[i].positions()(0, 0), 0.0);
        EXPECT_EQ(c.train[i].momenta()(0, 0), static_cast<double>(i + 1));
        // radius of the circle is preserved
        const double r2 = std::pow(c.train[i].positions()(0, 500), 2) + std::pow(c.train[i].momenta()(0, 500), 2);
        EXPECT_NEAR(std::sqrt(r2), static_cast<double>(i + 1), 1e-8 * (i + 1));
    }
    EXPECT_LE(c.max_energy_drift, 1e-6);
}

TEST(Corpus, DoubleWellT1HasAWellCrossingTrajectory) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto s = tiny(ExperimentName::DoubleWell);
        s.seed = seed;
        const auto c = generate_corpus(s);
        ASSERT_EQ(c.train.size(), 10u);
        bool crosses = false;
        for (const auto& t : c.train) {
            EXPECT_LE(std::abs(t.positions()(0, 0)), 1.0);
            EXPECT_LE(std::abs(t.momenta()(0, 0)), 1.0);
            crosses = crosses || total_energy(c.system, t.state(0)) > 1.0;
        }
        EXPECT_TRUE(crosses);
    }
}

TEST(Corpus, DoubleWellLeftWellStaysBelowBarrier) {
    // V' = 2(q - 1)(2q^2 - 4q - 1): the barrier sits at the middle root q = 1.
    auto s = ExperimentSpec::defaults(ExperimentName::DoubleWell, Scale::Desk, DoubleWellVariant::T3);
    const auto c = generate_corpus(s);
    ASSERT_EQ(c.train.size(), 2u);
    for (const auto& t : c.train) EXPECT_LT(t.positions().maxCoeff(), 1.0);
    const auto t2 = generate_corpus(ExperimentSpec::defaults(ExperimentName::DoubleWell, Scale::Desk,
                                                             DoubleWellVariant::T2));
    EXPECT_EQ(t2.train[0].positions()(0, 0), 3.0);
    EXPECT_EQ(t2.train[1].positions()(0, 0), -1.0);
}

TEST(Corpus, CentralForceRadialReduction) {
    auto s = ExperimentSpec::defaults(ExperimentName::CentralForce, Scale::Desk);
    s.transitions = 2000;
    const auto c = generate_corpus(s);
    ASSERT_EQ(c.train.size(), 1u);
    ASSERT_EQ(c.raw.size(), 1u);
    const auto& orbit = c.raw[0];
    const Vec q0 = orbit.positions().col(0);
    const Vec p0 = orbit.momenta().col(0);
    EXPECT_LE(q0.cwiseAbs().maxCoeff(), 1.0);
    EXPECT_LE(p0.cwiseAbs().maxCoeff(), 1.0);
    const double ell = Eigen::Vector3d(q0).cross(Eigen::Vector3d(p0)).norm();
    EXPECT_NEAR(c.ell, ell, 1e-15 * std::max(1.0, ell));
    for (std::size_t i = 0; i < orbit.size(); i += 97) {
        EXPECT_NEAR(c.train[0].positions()(0, static_cast<Eigen::Index>(i)),
                    orbit.positions().col(static_cast<Eigen::Index>(i)).norm(), 1e-14);
        const Eigen::Vector3d q = orbit.positions().col(static_cast<Eigen::Index>(i));
        const Eigen::Vector3d p = orbit.momenta().col(static_cast<Eigen::Index>(i));
        EXPECT_NEAR(q.cross(p).norm(), ell, 1e-6 * ell);
    }
    EXPECT_GT(c.train[0].positions().minCoeff(), 0.0);
    EXPECT_LT(c.train[0].positions().maxCoeff(), 10.0);
    const auto truth = truth_coefficients(s, c);
    EXPECT_EQ(truth.at("r^-2"), 0.5 * c.ell * c.ell);
}

TEST(Corpus, CoulombSplitAndGuard) {
    const auto s = tiny(ExperimentName::CoulombDistance);
    const auto c = generate_corpus(s);
    EXPECT_EQ(c.train.size(), 3u);
    EXPECT_EQ(c.test.size(), 2u);
    for (const auto* set : {&c.train, &c.test})
        for (const auto& t : *set) {
            EXPECT_EQ(t.dim(), 6u);
            EXPECT_EQ(t.size(), 201u);
            const Mat d = t.positions().topRows(3) - t.positions().bottomRows(3);
            EXPECT_GE(d.colwise().norm().minCoeff(), 1e-3);
        }
    EXPECT_LE(c.max_energy_drift, 1e-3);
}

TEST(Corpus, DeterministicPerSeed) {
    const auto s = tiny(ExperimentName::DoubleWell);
    const auto a = generate_corpus(s);
    const auto b = generate_corpus(s);
    ASSERT_EQ(a.train.size(), b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) EXPECT_TRUE(a.train[i] == b.train[i]);
    auto other = s;
    other.seed = 2;
    EXPECT_FALSE(generate_corpus(other).train[0] == a.train[0]);
}

TEST(Truth, NeverIncludesConstantTerm) {
    for (auto name : {ExperimentName::SHO, ExperimentName::DoubleWell, ExperimentName::CentralForce,
                      ExperimentName::CoulombDifference, ExperimentName::CoulombDistance}) {
        const auto s = ExperimentSpec::defaults(name, Scale::Desk);
        const auto truth = truth_coefficients(s, Corpus{});
        EXPECT_EQ(truth.count("1"), 0u);
        const auto lib = experiment_library(s);
        ASSERT_TRUE(lib.index_of("1"));
        for (const auto& [label, value] : truth) EXPECT_TRUE(lib.index_of(label)) << label;
    }
    const auto coulomb = truth_coefficients(ExperimentSpec::defaults(ExperimentName::CoulombDistance, Scale::Desk), {});
    EXPECT_DOUBLE_EQ(coulomb.at("r^-1"), -1.0 / (4.0 * std::numbers::pi));
}

TEST(Compare, PublishedCentralForceExample) {
    const auto lib = CandidateLibrary::radial_wall(10.0, 3, "r");
    SparseFit fit;
    fit.beta = Vec::Zero(7);
    fit.active = {true, true, true, false, true, false, false};
    fit.beta << 2.0, 1.005, 0.4461, 0.0, 0.9723, 0.0, 0.0;
    const auto cmp = compare_to_truth(fit, lib, {{"r^-1", 1.0}, {"r^-2", 0.4655}, {"(10-r)^-1", 1.0}});
    EXPECT_NEAR(cmp.find("r^-2")->relative_error, 0.0417, 5e-5);
    EXPECT_NEAR(cmp.find("r^-1")->relative_error, 0.005, 1e-12);
    EXPECT_TRUE(cmp.spurious.empty());
    EXPECT_EQ(cmp.find("1"), nullptr);
}

TEST(Compare, ExactMissingAndSpurious) {
    const auto lib = CandidateLibrary::polynomial(3, "q");
    SparseFit fit;
    fit.beta = Vec::Zero(4);
    fit.beta << -49.0, 0.0, 0.5, 0.01;
    fit.active = {true, false, true, true};
    auto cmp = compare_to_truth(fit, lib, {{"q^2", 0.5}});
    EXPECT_EQ(cmp.find("q^2")->relative_error, 0.0);
    ASSERT_EQ(cmp.spurious.size(), 1u);
    EXPECT_EQ(cmp.spurious[0].label, "q^3");
    fit.active = {true, false, false, false};
    cmp = compare_to_truth(fit, lib, {{"q^2", 0.5}});
    EXPECT_TRUE(cmp.find("q^2")->missing);
    EXPECT_EQ(cmp.find("q^2")->relative_error, 1.0);
    EXPECT_THROW(compare_to_truth(fit, lib, {{"r^-1", 1.0}}), ConfigError);
    const auto csv = comparison_csv(cmp);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "label,truth,fitted,relative_error,missing");
}

TEST(Plots, BiasAdjustedExtremumIsZero) {
    for (auto name : {ExperimentName::SHO, ExperimentName::DoubleWell, ExperimentName::CoulombDistance}) {
        auto s = tiny(name);
        const auto c = generate_corpus(s);
        const auto net = train_experiment(s, c).first;
        const auto plots = plot_series(s, c, net);
        ASSERT_FALSE(plots.empty());
        for (const auto& p : plots) {
            for (std::size_t col : {1u, 2u}) {
                double lo = INFINITY, hi = -INFINITY;
                for (const auto& row : p.rows) {
                    lo = std::min(lo, row[col]);
                    hi = std::max(hi, row[col]);
                }
                EXPECT_EQ(s.bias == BiasExtremum::Min ? lo : hi, 0.0) << p.name << " column " << col;
            }
        }
    }
}

TEST(Plots, DoubleWellMarksExtrapolatedRegion) {
    auto s = tiny(ExperimentName::DoubleWell, DoubleWellVariant::T3);
    const auto c = generate_corpus(s);
    const auto plots = plot_series(s, c, train_experiment(s, c).first);
    ASSERT_EQ(plots.size(), 1u);
    const auto& p = plots[0];
    EXPECT_EQ(p.columns.back(), "in_training");
    EXPECT_EQ(p.rows.front()[0], -1.0);
    EXPECT_EQ(p.rows.back()[0], 3.0);
    const double lo = c.train[0].positions().minCoeff(), hi = std::max(c.train[0].positions().maxCoeff(),
                                                                     c.train[1].positions().maxCoeff());
    for (const auto& row : p.rows) {
        const bool inside = row[0] >= std::min(lo, c.train[1].positions().minCoeff()) && row[0] <= hi;
        EXPECT_EQ(row[3], inside ? 1.0 : 0.0);
    }
    EXPECT_EQ(p.rows.back()[3], 0.0);
}

TEST(Plots, CoulombTestSeriesUsesHeldOutTrajectories) {
    auto s = tiny(ExperimentName::CoulombDistance);
    const auto c = generate_corpus(s);
    const auto plots = plot_series(s, c, train_experiment(s, c).first);
    ASSERT_EQ(plots.size(), 2u);
    EXPECT_EQ(plots[1].name, "potential_test");
    ASSERT_EQ(plots[1].rows.size(), 2u * 201u);
    const Mat& q = c.test[0].positions();
    EXPECT_EQ(plots[1].rows[0][0], (q.col(0).head(3) - q.col(0).tail(3)).norm());
}

TEST(Pipeline, StagesAndWarmStart) {
    auto s = tiny(ExperimentName::CentralForce);
    s.transitions = 400;
    const auto c = generate_corpus(s);
    const auto [net, reports] = train_experiment(s, c);
    ASSERT_EQ(reports.size(), 2u);
    EXPECT_EQ(net.output_transform, OutputTransform::Exp);
    EXPECT_EQ(net.activations[0], Activation::Softplus);
    EXPECT_EQ(reports[1].loss_history.front().step, reports[0].loss_history.back().step);
    // the anchored warm start puts the largest exponent at zero before training
    EXPECT_LT(reports[1].loss_history.front().loss, 1e3);
}

TEST(Pipeline, InterpretationIsFaithfulAndDeterministic) {
    auto s = tiny(ExperimentName::SHO);
    s.residual_tol = 1e9;
    const auto a = run_experiment(s);
    const auto b = run_experiment(s);
    EXPECT_TRUE(a.network == b.network);
    EXPECT_EQ(a.search.fit.beta, b.search.fit.beta);
    EXPECT_LE(a.diagnostics.at("render_max_abs_error"), 1e-12);
    EXPECT_EQ(a.regression_points.cols(), 1001);
    EXPECT_EQ(a.diagnostics.at("final_loss"), a.reports.back().final_loss);
    EXPECT_THROW(run_double_well(s), ConfigError);
}

TEST(Pipeline, EmitPlotData) {
    auto s = tiny(ExperimentName::SHO);
    s.residual_tol = 1e9;
    const auto res = run_sho(s);
    const auto dir = std::filesystem::temp_directory_path() / "hamlearn_test_plots";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto files = emit_plot_data(res, dir);
    ASSERT_EQ(files.size(), 1u);
    EXPECT_EQ(files[0].filename(), "potential.csv");
    EXPECT_TRUE(std::filesystem::exists(files[0]));
}
