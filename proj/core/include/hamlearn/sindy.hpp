#pragma once

#include "hamlearn/dynamics.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace hamlearn {

enum class CandidateKind { Constant, Monomial, InversePower, ShiftedInversePower, CrossMonomial };

/// One symbolic basis function of a candidate library.
struct CandidateFunction {
    CandidateKind kind = CandidateKind::Constant;
    int variable = 0;
    int power = 0;
    double shift = 0.0;
    std::vector<int> exponents;  // CrossMonomial only, one per input coordinate
    std::string label;

    static CandidateFunction constant();
    /// x_var^power, labelled "x" or "x^power".
    static CandidateFunction monomial(int variable, int power, const std::string& name);
    /// x_var^-power, labelled "x^-power".
    static CandidateFunction inverse_power(int variable, int power, const std::string& name);
    /// (shift - x_var)^-power, labelled "(shift-x)^-power".
    static CandidateFunction shifted_inverse_power(int variable, double shift, int power, const std::string& name);
    /// prod_i x_i^exponents[i], labelled e.g. "q1*q2^2".
    static CandidateFunction cross_monomial(std::vector<int> exponents, const std::vector<std::string>& names);

    /// Throws DomainError at a pole.
    double evaluate(const Vec& x) const;
};

/// Ordered candidate functions; coefficients are indexed by position.
struct CandidateLibrary {
    std::vector<CandidateFunction> functions;
    std::size_t input_dim = 1;

    std::size_t size() const { return functions.size(); }
    std::vector<std::string> labels() const;
    std::optional<std::size_t> index_of(const std::string& label) const;
    /// Throws ConfigError on an empty library or duplicate labels.
    void validate() const;

    /// {1, x, x^2, ..., x^degree}
    static CandidateLibrary polynomial(int degree, const std::string& name = "q");
    /// {1, x^-1, ..., x^-max_power}
    static CandidateLibrary inverse_powers(int max_power, const std::string& name = "r");
    /// {1, r^-1..r^-max_power, (wall-r)^-1..(wall-r)^-max_power}
    static CandidateLibrary radial_wall(double wall, int max_power, const std::string& name = "r");
};

/// K x J design matrix; column j is candidate j evaluated at every column of `points`.
Mat build_design(const CandidateLibrary& lib, const Mat& points);

/// Least-squares solution by complete orthogonal decomposition (minimum norm when rank deficient).
Vec ols(const Mat& X, const Vec& y);

struct SparseFit {
    Vec beta;
    std::vector<bool> active;
    double lambda = 0.0;
    double residual_norm = 0.0;
    std::size_t n_samples = 0;
    std::size_t iterations = 0;

    std::size_t active_count() const;
    double normalized_residual() const;
};

/// Sequentially thresholded least squares. Coefficients with |beta_j| < lambda
/// are removed for good; stops once a refit prunes nothing. Throws
/// AllPrunedError if every column is removed.
SparseFit stlsq(const Mat& X, const Vec& y, double lambda);

/// Same, starting from a restricted active set.
SparseFit stlsq(const Mat& X, const Vec& y, double lambda, std::vector<bool> active);

enum class ResidualMode { Normalized, Raw };

std::string to_string(ResidualMode mode);
ResidualMode residual_mode_from_string(const std::string& name);

struct LambdaTrial {
    double lambda = 0.0;
    bool all_pruned = false;
    double residual = 0.0;  // in the search's residual mode; meaningless when all_pruned
    std::size_t active_count = 0;
    bool passed = false;
};

struct LambdaSearch {
    SparseFit fit;
    std::vector<LambdaTrial> path;
    double tolerance = 0.0;
    ResidualMode mode = ResidualMode::Normalized;
};

inline constexpr double kLambdaFloor = 1e-12;

/// Tries lambda = start, start*factor, ... and returns the first fit whose
/// residual (|eps|/sqrt(K) in Normalized mode, |eps| in Raw mode) is at most
/// `tol`. Throws NoFitError once lambda drops below kLambdaFloor.
LambdaSearch tune_lambda(const Mat& X, const Vec& y, double start, double factor, double tol,
                         ResidualMode mode = ResidualMode::Normalized);

/// Active terms as a signed sum in library order with `digits` significant digits.
std::string render_expression(const SparseFit& fit, const CandidateLibrary& lib, int digits = 4);
/// Inverse of render_expression: coefficient vector over `lib`.
Vec parse_expression(const std::string& text, const CandidateLibrary& lib);

/// Human-readable and JSON fit reports.
std::string fit_report_text(const LambdaSearch& search, const CandidateLibrary& lib);
std::string fit_report_json(const LambdaSearch& search, const CandidateLibrary& lib);

}  // namespace hamlearn
