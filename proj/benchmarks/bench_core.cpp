#include "hamlearn/dynamics.hpp"
#include "hamlearn/neural.hpp"
#include "hamlearn/sindy.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace hamlearn;

namespace {

PhaseState state1(double q, double p) {
    PhaseState s;
    s.q = Vec::Constant(1, q);
    s.p = Vec::Constant(1, p);
    return s;
}

std::vector<Trajectory> sho_corpus(std::size_t n) {
    std::vector<Trajectory> out;
    for (int i = 1; i <= 10; ++i) out.push_back(simulate(SystemSpec::sho(), state1(0.0, i), 0.01, n, Integrator::RK4));
    return out;
}

DenseNetwork tanh_16x16() {
    return init_network({1, 16, 16, 1}, {Activation::Tanh, Activation::Tanh}, InputTransform::Identity,
                        OutputTransform::Identity, 1);
}

}  // namespace

static void BM_Rk4Step(benchmark::State& state) {
    const auto spec = SystemSpec::double_well();
    PhaseState s = state1(-0.5, 0.1);
    for (auto _ : state) {
        s = rk4_step(spec, s, 1e-3);
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_Rk4Step);

static void BM_VerletCoulomb(benchmark::State& state) {
    const auto spec = SystemSpec::coulomb();
    PhaseState s;
    s.q = Vec(6);
    s.q << 0, 0, 0, 1, 0.2, 0;
    s.p = Vec(6);
    s.p << 0, 0.3, 0, 0, -0.3, 0.1;
    for (auto _ : state) {
        s = stormer_verlet_step(spec, s, 1e-3);
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_VerletCoulomb);

static void BM_ForwardBatch(benchmark::State& state) {
    const auto net = tanh_16x16();
    const Mat pts = Vec::LinSpaced(state.range(0), -10.0, 10.0).transpose();
    for (auto _ : state) benchmark::DoNotOptimize(forward_batch(net, pts));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBatch)->Arg(1001)->Arg(10000);

static void BM_LossGradient(benchmark::State& state) {
    const auto net = tanh_16x16();
    const auto corpus = sho_corpus(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(loss_param_gradient(net, corpus));
    state.SetItemsProcessed(state.iterations() * 10 * state.range(0));
}
BENCHMARK(BM_LossGradient)->Arg(100)->Arg(1000);

static void BM_LossGradientDeep(benchmark::State& state) {
    const auto net = init_network({3, 16, 16, 16, 16, 16, 16, 16, 16, 1}, std::vector<Activation>(8, Activation::Tanh),
                                  InputTransform::PairDifference, OutputTransform::Identity, 2);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::vector<Trajectory> corpus;
    for (int j = 0; j < 10; ++j) {
        Mat q(6, 101), p(6, 101);
        for (Eigen::Index k = 0; k < q.size(); ++k) {
            q.data()[k] = g(rng);
            p.data()[k] = g(rng);
        }
        corpus.emplace_back(q, p, 0.0, 1e-3);
    }
    for (auto _ : state) benchmark::DoNotOptimize(loss_param_gradient(net, corpus));
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_LossGradientDeep);

static void BM_Stlsq(benchmark::State& state) {
    const auto lib = CandidateLibrary::polynomial(6);
    const Mat q = Vec::LinSpaced(5000, -1.0, 3.0).transpose();
    const Mat X = build_design(lib, q);
    const Vec y = X.col(1) * 2.0 + X.col(2) * 3.0 - X.col(3) * 4.0 + X.col(4);
    for (auto _ : state) benchmark::DoNotOptimize(tune_lambda(X, y, 1.0, 0.5, 1e-6));
}
BENCHMARK(BM_Stlsq);

BENCHMARK_MAIN();
