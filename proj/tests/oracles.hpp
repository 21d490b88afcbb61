#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner.

#include "hamlearn/dynamics.hpp"
#include "hamlearn/errors.hpp"
#include "hamlearn/neural.hpp"
#include "hamlearn/sindy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using hamlearn::Mat;
using hamlearn::Vec;

struct Architecture {
    std::string name;
    std::vector<int> dims;
    hamlearn::Activation activation;
    hamlearn::InputTransform input;
    hamlearn::OutputTransform output;
};

// Keeps gtest from dumping the struct bytes into test names.
inline std::ostream& operator<<(std::ostream& os, const Architecture& a) { return os << a.name; }

/// Every network shape the experiments train, plus small generic shapes.
inline std::vector<Architecture> architectures() {
    using hamlearn::Activation;
    using hamlearn::InputTransform;
    using hamlearn::OutputTransform;
    std::vector<int> deep16 = {3};
    for (int i = 0; i < 8; ++i) deep16.push_back(16);
    deep16.push_back(1);
    std::vector<int> deep8 = {1};
    for (int i = 0; i < 8; ++i) deep8.push_back(8);
    deep8.push_back(1);
    return {
        {"sho/double-well", {1, 16, 16, 1}, Activation::Tanh, InputTransform::Identity, OutputTransform::Identity},
        {"central-force elu", {1, 16, 16, 1}, Activation::ELU, InputTransform::Identity, OutputTransform::Identity},
        {"central-force softplus-exp", {1, 16, 16, 1}, Activation::Softplus, InputTransform::Identity, OutputTransform::Exp},
        {"coulomb difference", deep16, Activation::Tanh, InputTransform::PairDifference, OutputTransform::Identity},
        {"coulomb distance", deep8, Activation::Tanh, InputTransform::PairDistance, OutputTransform::Identity},
        {"small 1-4-4-1", {1, 4, 4, 1}, Activation::Tanh, InputTransform::Identity, OutputTransform::Identity},
        {"small 3-8-1", {3, 8, 1}, Activation::Softplus, InputTransform::Identity, OutputTransform::Identity},
        {"small 6-8-8-1", {6, 8, 8, 1}, Activation::ELU, InputTransform::Identity, OutputTransform::Identity},
    };
}

inline hamlearn::DenseNetwork make_network(const Architecture& a, std::uint64_t seed) {
    auto net = hamlearn::init_network(a.dims, std::vector<hamlearn::Activation>(a.dims.size() - 2, a.activation),
                                      a.input, a.output, seed);
    std::mt19937_64 rng(seed ^ 0x5eed);
    std::normal_distribution<double> n(0.0, 0.2);
    for (auto& b : net.biases)
        for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = n(rng);
    return net;
}

/// Random input in a region the architecture is used on.
inline Vec random_input(const hamlearn::DenseNetwork& net, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vec q(static_cast<Eigen::Index>(net.input_dim()));
    if (net.output_transform == hamlearn::OutputTransform::Exp || net.input_dim() == 1) {
        std::uniform_real_distribution<double> r(1.0, 9.0);
        for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = r(rng);
        return q;
    }
    do {
        for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = g(rng);
    } while (q.size() == 6 && (q.head<3>() - q.tail<3>()).norm() < 0.1);
    return q;
}

inline hamlearn::Trajectory random_trajectory(const hamlearn::DenseNetwork& net, std::size_t transitions, double h,
                                              std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat q(static_cast<Eigen::Index>(net.input_dim()), static_cast<Eigen::Index>(transitions + 1));
    Mat p(q.rows(), q.cols());
    // O(1) momentum differences keep the residuals comparable to the network
    // gradient; huge (p' - p)/h terms would swamp the finite differences.
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        q.col(j) = random_input(net, rng);
        for (Eigen::Index i = 0; i < q.rows(); ++i) p(i, j) = j == 0 ? g(rng) : p(i, j - 1) + h * g(rng);
    }
    return hamlearn::Trajectory(q, p, 0.0, h);
}

/// ||grad_input - central difference|| / ||central difference||.
inline double grad_input_error(const hamlearn::DenseNetwork& net, const Vec& q, double step = 1e-5) {
    const Vec g = hamlearn::grad_input(net, q);
    Vec fd(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        Vec a = q, b = q;
        a[i] += step;
        b[i] -= step;
        fd[i] = (hamlearn::forward(net, a) - hamlearn::forward(net, b)) / (2.0 * step);
    }
    return (g - fd).norm() / std::max(fd.norm(), std::numeric_limits<double>::min());
}

/// Largest relative error of dL/dtheta_k against central differences over
/// `count` random parameters. Components below 1e-6 of the largest gradient
/// entry are compared against that scale instead of their own magnitude.
inline double param_gradient_error(const hamlearn::DenseNetwork& net, const std::vector<hamlearn::Trajectory>& corpus,
                                   std::size_t count, std::mt19937_64& rng, double step = 1e-4) {
    const auto [value, grad] = hamlearn::loss_param_gradient(net, corpus);
    const Vec g = hamlearn::flatten_gradient(grad);
    const Vec theta = hamlearn::flatten_parameters(net);
    const double floor = 1e-6 * g.cwiseAbs().maxCoeff();
    std::uniform_int_distribution<Eigen::Index> pick(0, theta.size() - 1);
    double worst = 0.0;
    for (std::size_t n = 0; n < count; ++n) {
        const Eigen::Index k = count >= static_cast<std::size_t>(theta.size()) ? static_cast<Eigen::Index>(n) % theta.size()
                                                                              : pick(rng);
        const double e = step * std::max(1.0, std::abs(theta[k]));
        const auto central = [&](double width) {
            auto plus = net, minus = net;
            Vec tp = theta, tm = theta;
            tp[k] += width;
            tm[k] -= width;
            hamlearn::assign_parameters(plus, tp);
            hamlearn::assign_parameters(minus, tm);
            return (hamlearn::loss(plus, corpus) - hamlearn::loss(minus, corpus)) / (2.0 * width);
        };
        // Richardson combination of two central differences, O(e^4) truncation.
        const double fd = (4.0 * central(0.5 * e) - central(e)) / 3.0;
        worst = std::max(worst, std::abs(g[k] - fd) / std::max({std::abs(fd), std::abs(g[k]), floor}));
    }
    return worst;
}

/// min over all supports S of ||y - X_S beta_S||^2 + penalty*|S| (empty support included).
inline double best_subset_objective(const Mat& X, const Vec& y, double penalty) {
    const auto J = X.cols();
    double best = y.squaredNorm();
    for (unsigned mask = 1; mask < (1u << J); ++mask) {
        std::vector<Eigen::Index> cols;
        for (Eigen::Index j = 0; j < J; ++j)
            if (mask & (1u << j)) cols.push_back(j);
        Mat Xs(X.rows(), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) Xs.col(static_cast<Eigen::Index>(c)) = X.col(cols[c]);
        // Householder QR, independent of the library's solver.
        const Vec b = Xs.householderQr().solve(y);
        best = std::min(best, (y - Xs * b).squaredNorm() + penalty * static_cast<double>(cols.size()));
    }
    return best;
}

inline double l0_objective(const Mat& X, const Vec& y, const Vec& beta, double penalty) {
    const auto nnz = static_cast<double>((beta.array() != 0.0).count());
    return (y - X * beta).squaredNorm() + penalty * nnz;
}

struct SubsetStudy {
    int trials = 0;
    int within = 0;
    double worst_ols_gap = 0.0;
};

/// Seeded random 20x5 sparse problems: fraction where STLSQ's l0-penalised
/// objective (penalty lambda^2) is within 10% of the exhaustive optimum.
inline SubsetStudy stlsq_vs_best_subset(int trials, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SubsetStudy study;
    for (int t = 0; t < trials; ++t) {
        Mat X(20, 5);
        for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = g(rng);
        Vec beta(5);
        for (int j = 0; j < 5; ++j) beta[j] = u(rng) < 0.4 ? 0.0 : (u(rng) < 0.5 ? -1 : 1) * (0.5 + 1.5 * u(rng));
        Vec y = X * beta;
        for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += 0.1 * g(rng);
        const double lambda = 0.2;
        Vec fitted = Vec::Zero(5);
        try {
            fitted = hamlearn::stlsq(X, y, lambda).beta;
        } catch (const hamlearn::AllPrunedError&) {
        }
        const double best = best_subset_objective(X, y, lambda * lambda);
        const double got = l0_objective(X, y, fitted, lambda * lambda);
        ++study.trials;
        if (got <= 1.1 * best) ++study.within;
        const Vec ols0 = hamlearn::stlsq(X, y, 0.0).beta;
        study.worst_ols_gap = std::max(study.worst_ols_gap, (ols0 - hamlearn::ols(X, y)).cwiseAbs().maxCoeff());
    }
    return study;
}

/// Least-squares slope of log(error) against log(h).
inline double loglog_slope(const std::vector<double>& h, const std::vector<double>& err) {
    const auto n = static_cast<double>(h.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double x = std::log(h[i]), y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Global error at t = 6.4 of the SHO from (q, p) = (0, 1) against (sin t, cos t).
inline double sho_global_error(hamlearn::Integrator method, double h) {
    const double horizon = 6.4;
    const auto steps = static_cast<std::size_t>(std::llround(horizon / h));
    hamlearn::PhaseState ic;
    ic.q = Vec::Zero(1);
    ic.p = Vec::Ones(1);
    const auto traj = hamlearn::simulate(hamlearn::SystemSpec::sho(), ic, h, steps, method);
    const auto end = traj.state(steps);
    const double t = static_cast<double>(steps) * h;
    return std::hypot(end.q[0] - std::sin(t), end.p[0] - std::cos(t));
}

inline double integrator_order(hamlearn::Integrator method) {
    const std::vector<double> hs = {0.04, 0.02, 0.01, 0.005};
    std::vector<double> errs;
    for (double h : hs) errs.push_back(sho_global_error(method, h));
    return loglog_slope(hs, errs);
}

}  // namespace oracle
