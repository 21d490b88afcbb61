#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace hamlearn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Position, momentum and time of a separable Hamiltonian system.
struct PhaseState {
    Vec q;
    Vec p;
    double t = 0.0;

    std::size_t dim() const { return static_cast<std::size_t>(q.size()); }
    /// Throws ConfigError if q/p lengths differ or are empty, DomainError on non-finite entries.
    void validate() const;
};

/// Equispaced recording of one orbit, stored column-wise: column i of
/// positions/momenta is the state at time t0 + i*step.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(Mat positions, Mat momenta, double t0, double step);

    std::size_t dim() const { return static_cast<std::size_t>(positions_.rows()); }
    std::size_t size() const { return static_cast<std::size_t>(positions_.cols()); }
    /// Number of (i, i+1) transition pairs.
    std::size_t transitions() const { return size() == 0 ? 0 : size() - 1; }
    double step() const { return step_; }
    double t0() const { return t0_; }
    double time(std::size_t i) const { return t0_ + static_cast<double>(i) * step_; }

    const Mat& positions() const { return positions_; }
    const Mat& momenta() const { return momenta_; }
    PhaseState state(std::size_t i) const;

    /// States [first, first + count], i.e. `count` transitions starting at `first`.
    Trajectory window(std::size_t first, std::size_t count) const;

    bool operator==(const Trajectory& other) const;

private:
    Mat positions_;
    Mat momenta_;
    double t0_ = 0.0;
    double step_ = 1.0;
};

/// Diagonal mass matrix with strictly positive entries.
class MassMatrix {
public:
    MassMatrix() = default;
    explicit MassMatrix(Vec diag);
    static MassMatrix identity(std::size_t d) { return MassMatrix(Vec::Ones(static_cast<Eigen::Index>(d))); }

    const Vec& diag() const { return diag_; }
    std::size_t dim() const { return static_cast<std::size_t>(diag_.size()); }
    /// M^{-1} p
    Vec velocity(const Vec& p) const { return p.cwiseQuotient(diag_); }

private:
    Vec diag_;
};

enum class SystemKind { SHO, DoubleWell, CentralForce, Coulomb, Free };

std::string to_string(SystemKind kind);
SystemKind system_kind_from_string(const std::string& name);

/// Ground-truth separable Hamiltonian H = p^T M^{-1} p / 2 + V(q).
struct SystemSpec {
    SystemKind kind = SystemKind::SHO;
    MassMatrix mass;
    std::map<std::string, double> params;

    std::size_t dim() const;
    double param(const std::string& name) const;

    static SystemSpec sho();
    static SystemSpec double_well();
    /// V(q) = |q|^-1 + (wall - |q|)^-1 in three dimensions.
    static SystemSpec central_force(double wall = 10.0);
    /// Two particles with masses (m1, m2); V = -k / |q1 - q2|.
    static SystemSpec coulomb(double m1 = 1.0, double m2 = 0.5);
    /// V = 0 in d dimensions.
    static SystemSpec free_particle(std::size_t d);
};

/// Singularities closer than this are treated as out of domain.
inline constexpr double kSingularityGuard = 1e-8;

double eval_potential(const SystemSpec& spec, const Vec& q);
/// -grad V(q), analytic.
Vec eval_force(const SystemSpec& spec, const Vec& q);
double kinetic_energy(const SystemSpec& spec, const Vec& p);
double total_energy(const SystemSpec& spec, const PhaseState& s);

PhaseState rk4_step(const SystemSpec& spec, const PhaseState& s, double h);
/// Kick-drift-kick Stormer-Verlet.
PhaseState stormer_verlet_step(const SystemSpec& spec, const PhaseState& s, double h);

enum class Integrator { RK4, Verlet };

std::string to_string(Integrator method);
Integrator integrator_from_string(const std::string& name);

/// n_steps + 1 recorded states including `ic`. DomainError carries the failing step index.
Trajectory simulate(const SystemSpec& spec, const PhaseState& ic, double h, std::size_t n_steps,
                    Integrator method);

/// Radius, radial velocity and angular momentum of a three-dimensional orbit.
struct RadialTrajectory {
    std::vector<double> r;
    std::vector<double> rdot;
    double step = 1.0;
    double ell = 0.0;

    /// One-dimensional trajectory with q = r and p = rdot (unit mass).
    Trajectory as_trajectory() const;
};

RadialTrajectory reduce_to_radial(const Trajectory& traj, const MassMatrix& mass);

/// |q x p| for three-dimensional q, p.
double angular_momentum(const Vec& q, const Vec& p);

}  // namespace hamlearn
