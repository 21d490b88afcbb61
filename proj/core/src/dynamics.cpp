#include "hamlearn/dynamics.hpp"

#include "hamlearn/errors.hpp"

#include <cmath>
#include <numbers>

namespace hamlearn {

void PhaseState::validate() const {
    if (q.size() == 0 || q.size() != p.size())
        throw ConfigError("phase state needs equal, nonzero q/p dimensions");
    if (!q.allFinite() || !p.allFinite() || !std::isfinite(t))
        throw DomainError("phase state has non-finite entries");
}

Trajectory::Trajectory(Mat positions, Mat momenta, double t0, double step)
    : positions_(std::move(positions)), momenta_(std::move(momenta)), t0_(t0), step_(step) {
    if (positions_.rows() != momenta_.rows() || positions_.cols() != momenta_.cols())
        throw ConfigError("trajectory positions and momenta have different shapes");
    if (positions_.rows() == 0)
        throw ConfigError("trajectory dimension must be at least 1");
    if (!(step_ > 0.0) || !std::isfinite(step_))
        throw ConfigError("trajectory step must be positive");
}

PhaseState Trajectory::state(std::size_t i) const {
    const auto c = static_cast<Eigen::Index>(i);
    return {positions_.col(c), momenta_.col(c), time(i)};
}

Trajectory Trajectory::window(std::size_t first, std::size_t count) const {
    if (first + count >= size())
        throw ConfigError("trajectory window [" + std::to_string(first) + ", " +
                          std::to_string(first + count) + "] exceeds " + std::to_string(size()) +
                          " states");
    const auto f = static_cast<Eigen::Index>(first);
    const auto n = static_cast<Eigen::Index>(count + 1);
    return Trajectory(positions_.middleCols(f, n), momenta_.middleCols(f, n), time(first), step_);
}

bool Trajectory::operator==(const Trajectory& other) const {
    return t0_ == other.t0_ && step_ == other.step_ && positions_.rows() == other.positions_.rows() &&
           positions_.cols() == other.positions_.cols() && positions_ == other.positions_ &&
           momenta_ == other.momenta_;
}

MassMatrix::MassMatrix(Vec diag) : diag_(std::move(diag)) {
    if (diag_.size() == 0) throw ConfigError("mass matrix must have at least one entry");
    for (Eigen::Index i = 0; i < diag_.size(); ++i)
        if (!(diag_[i] > 0.0) || !std::isfinite(diag_[i]))
            throw ConfigError("mass matrix entries must be positive and finite");
}

std::string to_string(SystemKind kind) {
    switch (kind) {
        case SystemKind::SHO: return "sho";
        case SystemKind::DoubleWell: return "double-well";
        case SystemKind::CentralForce: return "central-force";
        case SystemKind::Coulomb: return "coulomb";
        case SystemKind::Free: return "free";
    }
    return "unknown";
}

SystemKind system_kind_from_string(const std::string& name) {
    for (auto k : {SystemKind::SHO, SystemKind::DoubleWell, SystemKind::CentralForce, SystemKind::Coulomb,
                   SystemKind::Free})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown system '" + name + "'");
}

std::size_t SystemSpec::dim() const {
    switch (kind) {
        case SystemKind::SHO:
        case SystemKind::DoubleWell: return 1;
        case SystemKind::CentralForce: return 3;
        case SystemKind::Coulomb: return 6;
        case SystemKind::Free: return mass.dim();
    }
    return 0;
}

double SystemSpec::param(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw ConfigError("system '" + to_string(kind) + "' has no parameter '" + name + "'");
    return it->second;
}

SystemSpec SystemSpec::sho() { return {SystemKind::SHO, MassMatrix::identity(1), {}}; }

SystemSpec SystemSpec::double_well() { return {SystemKind::DoubleWell, MassMatrix::identity(1), {}}; }

SystemSpec SystemSpec::central_force(double wall) {
    if (!(wall > 0.0)) throw ConfigError("central-force wall radius must be positive");
    return {SystemKind::CentralForce, MassMatrix::identity(3), {{"wall", wall}}};
}

SystemSpec SystemSpec::coulomb(double m1, double m2) {
    Vec m(6);
    m << m1, m1, m1, m2, m2, m2;
    return {SystemKind::Coulomb, MassMatrix(m), {{"k", 1.0 / (4.0 * std::numbers::pi)}}};
}

SystemSpec SystemSpec::free_particle(std::size_t d) { return {SystemKind::Free, MassMatrix::identity(d), {}}; }

namespace {

void check_dim(const SystemSpec& spec, const Vec& q) {
    if (static_cast<std::size_t>(q.size()) != spec.dim())
        throw ConfigError("system '" + to_string(spec.kind) + "' expects dimension " + std::to_string(spec.dim()) +
                          ", got " + std::to_string(q.size()));
}

double central_radius(const Vec& q, double wall) {
    const double r = q.norm();
    if (r < kSingularityGuard || wall - r < kSingularityGuard)
        throw DomainError("central-force radius " + std::to_string(r) + " outside (0, " + std::to_string(wall) + ")");
    return r;
}

double pair_distance(const Vec& q) {
    const double r = (q.head<3>() - q.tail<3>()).norm();
    if (r < kSingularityGuard) throw DomainError("coincident charges");
    return r;
}

}  // namespace

double eval_potential(const SystemSpec& spec, const Vec& q) {
    check_dim(spec, q);
    switch (spec.kind) {
        case SystemKind::SHO: return 0.5 * q[0] * q[0];
        case SystemKind::DoubleWell: {
            const double x = q[0];
            return x * x * (x - 2.0) * (x - 2.0) - (x - 1.0) * (x - 1.0);
        }
        case SystemKind::CentralForce: {
            const double wall = spec.param("wall");
            const double r = central_radius(q, wall);
            return 1.0 / r + 1.0 / (wall - r);
        }
        case SystemKind::Coulomb: return -spec.param("k") / pair_distance(q);
        case SystemKind::Free: return 0.0;
    }
    return 0.0;
}

Vec eval_force(const SystemSpec& spec, const Vec& q) {
    check_dim(spec, q);
    switch (spec.kind) {
        case SystemKind::SHO: return -q;
        case SystemKind::DoubleWell: {
            const double x = q[0];
            Vec f(1);
            f[0] = -(2.0 + 6.0 * x - 12.0 * x * x + 4.0 * x * x * x);
            return f;
        }
        case SystemKind::CentralForce: {
            const double wall = spec.param("wall");
            const double r = central_radius(q, wall);
            // dV/dr = -1/r^2 + 1/(wall - r)^2
            const double dvdr = -1.0 / (r * r) + 1.0 / ((wall - r) * (wall - r));
            return -dvdr * q / r;
        }
        case SystemKind::Coulomb: {
            const double r = pair_distance(q);
            const Vec diff = q.head<3>() - q.tail<3>();
            // V = -k/r, grad_{q1} V = k (q1 - q2) / r^3
            const Vec g1 = spec.param("k") * diff / (r * r * r);
            Vec f(6);
            f << -g1, g1;
            return f;
        }
        case SystemKind::Free: return Vec::Zero(q.size());
    }
    return Vec();
}

double kinetic_energy(const SystemSpec& spec, const Vec& p) { return 0.5 * p.dot(spec.mass.velocity(p)); }

double total_energy(const SystemSpec& spec, const PhaseState& s) {
    return kinetic_energy(spec, s.p) + eval_potential(spec, s.q);
}

PhaseState rk4_step(const SystemSpec& spec, const PhaseState& s, double h) {
    if (h < 0.0 || !std::isfinite(h)) throw ConfigError("step size must be non-negative");
    if (h == 0.0) return s;
    const auto& m = spec.mass;
    const Vec k1q = m.velocity(s.p);
    const Vec k1p = eval_force(spec, s.q);
    const Vec k2q = m.velocity(s.p + 0.5 * h * k1p);
    const Vec k2p = eval_force(spec, s.q + 0.5 * h * k1q);
    const Vec k3q = m.velocity(s.p + 0.5 * h * k2p);
    const Vec k3p = eval_force(spec, s.q + 0.5 * h * k2q);
    const Vec k4q = m.velocity(s.p + h * k3p);
    const Vec k4p = eval_force(spec, s.q + h * k3q);
    PhaseState out;
    out.q = s.q + (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    out.p = s.p + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    out.t = s.t + h;
    return out;
}

PhaseState stormer_verlet_step(const SystemSpec& spec, const PhaseState& s, double h) {
    if (h < 0.0 || !std::isfinite(h)) throw ConfigError("step size must be non-negative");
    if (h == 0.0) return s;
    const Vec p_half = s.p + 0.5 * h * eval_force(spec, s.q);
    PhaseState out;
    out.q = s.q + h * spec.mass.velocity(p_half);
    out.p = p_half + 0.5 * h * eval_force(spec, out.q);
    out.t = s.t + h;
    return out;
}

std::string to_string(Integrator method) { return method == Integrator::RK4 ? "rk4" : "verlet"; }

Integrator integrator_from_string(const std::string& name) {
    if (name == "rk4") return Integrator::RK4;
    if (name == "verlet") return Integrator::Verlet;
    throw ConfigError("unknown integrator '" + name + "'");
}

Trajectory simulate(const SystemSpec& spec, const PhaseState& ic, double h, std::size_t n_steps,
                    Integrator method) {
    if (n_steps < 1) throw ConfigError("simulation needs at least one step");
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("step size must be positive");
    ic.validate();
    if (ic.dim() != spec.dim() || spec.mass.dim() != spec.dim())
        throw ConfigError("initial condition dimension does not match system '" + to_string(spec.kind) + "'");

    const auto d = static_cast<Eigen::Index>(ic.dim());
    const auto n = static_cast<Eigen::Index>(n_steps + 1);
    Mat q(d, n);
    Mat p(d, n);
    q.col(0) = ic.q;
    p.col(0) = ic.p;

    PhaseState s = ic;
    try {
        (void)eval_potential(spec, s.q);
    } catch (const DomainError& e) {
        throw DomainError(e.what(), 0);
    }
    for (std::size_t i = 1; i <= n_steps; ++i) {
        try {
            s = method == Integrator::RK4 ? rk4_step(spec, s, h) : stormer_verlet_step(spec, s, h);
            // the stages may stay in domain while the endpoint does not
            (void)eval_potential(spec, s.q);
        } catch (const DomainError& e) {
            throw DomainError(e.what(), i);
        }
        if (!s.q.allFinite() || !s.p.allFinite()) throw DomainError("non-finite state", i);
        q.col(static_cast<Eigen::Index>(i)) = s.q;
        p.col(static_cast<Eigen::Index>(i)) = s.p;
    }
    return Trajectory(std::move(q), std::move(p), ic.t, h);
}

double angular_momentum(const Vec& q, const Vec& p) {
    if (q.size() != 3 || p.size() != 3) throw ConfigError("angular momentum needs three-dimensional vectors");
    const Eigen::Vector3d a = q;
    const Eigen::Vector3d b = p;
    return a.cross(b).norm();
}

Trajectory RadialTrajectory::as_trajectory() const {
    const auto n = static_cast<Eigen::Index>(r.size());
    Mat q(1, n);
    Mat p(1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        q(0, i) = r[static_cast<std::size_t>(i)];
        p(0, i) = rdot[static_cast<std::size_t>(i)];
    }
    return Trajectory(std::move(q), std::move(p), 0.0, step);
}

RadialTrajectory reduce_to_radial(const Trajectory& traj, const MassMatrix& mass) {
    if (traj.dim() != 3 || mass.dim() != 3) throw ConfigError("radial reduction needs a three-dimensional trajectory");
    RadialTrajectory out;
    out.step = traj.step();
    out.r.reserve(traj.size());
    out.rdot.reserve(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto c = static_cast<Eigen::Index>(i);
        const Vec q = traj.positions().col(c);
        const double r = q.norm();
        if (!(r > 0.0)) throw DomainError("zero radius in radial reduction", i);
        out.r.push_back(r);
        out.rdot.push_back(q.dot(mass.velocity(traj.momenta().col(c))) / r);
    }
    if (traj.size() > 0) out.ell = angular_momentum(traj.positions().col(0), traj.momenta().col(0));
    return out;
}

}  // namespace hamlearn
