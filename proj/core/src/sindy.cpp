#include "hamlearn/sindy.hpp"

#include "hamlearn/errors.hpp"
#include "hamlearn/io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace hamlearn {

CandidateFunction CandidateFunction::constant() {
    CandidateFunction f;
    f.label = "1";
    return f;
}

CandidateFunction CandidateFunction::monomial(int variable, int power, const std::string& name) {
    if (power < 1) throw ConfigError("monomial power must be at least 1");
    CandidateFunction f;
    f.kind = CandidateKind::Monomial;
    f.variable = variable;
    f.power = power;
    f.label = power == 1 ? name : name + "^" + std::to_string(power);
    return f;
}

CandidateFunction CandidateFunction::inverse_power(int variable, int power, const std::string& name) {
    if (power < 1) throw ConfigError("inverse power must be at least 1");
    CandidateFunction f;
    f.kind = CandidateKind::InversePower;
    f.variable = variable;
    f.power = power;
    f.label = name + "^-" + std::to_string(power);
    return f;
}

CandidateFunction CandidateFunction::shifted_inverse_power(int variable, double shift, int power,
                                                           const std::string& name) {
    if (power < 1) throw ConfigError("inverse power must be at least 1");
    CandidateFunction f;
    f.kind = CandidateKind::ShiftedInversePower;
    f.variable = variable;
    f.power = power;
    f.shift = shift;
    f.label = "(" + format_shortest(shift) + "-" + name + ")^-" + std::to_string(power);
    return f;
}

CandidateFunction CandidateFunction::cross_monomial(std::vector<int> exponents, const std::vector<std::string>& names) {
    if (exponents.size() != names.size()) throw ConfigError("cross monomial needs one name per exponent");
    CandidateFunction f;
    f.kind = CandidateKind::CrossMonomial;
    std::string label;
    for (std::size_t i = 0; i < exponents.size(); ++i) {
        if (exponents[i] < 0) throw ConfigError("cross monomial exponents must be non-negative");
        if (exponents[i] == 0) continue;
        if (!label.empty()) label += "*";
        label += names[i];
        if (exponents[i] > 1) label += "^" + std::to_string(exponents[i]);
    }
    if (label.empty()) throw ConfigError("cross monomial needs a positive exponent");
    f.exponents = std::move(exponents);
    f.label = std::move(label);
    return f;
}

double CandidateFunction::evaluate(const Vec& x) const {
    const auto coord = [&](int i) {
        if (i < 0 || i >= x.size()) throw ConfigError("candidate '" + label + "' reads a missing coordinate");
        return x[i];
    };
    switch (kind) {
        case CandidateKind::Constant: return 1.0;
        case CandidateKind::Monomial: return std::pow(coord(variable), power);
        case CandidateKind::InversePower: {
            const double v = coord(variable);
            if (v == 0.0) throw DomainError("candidate '" + label + "' has a pole at " + format_shortest(v));
            return std::pow(v, -power);
        }
        case CandidateKind::ShiftedInversePower: {
            const double v = shift - coord(variable);
            if (v == 0.0)
                throw DomainError("candidate '" + label + "' has a pole at " + format_shortest(coord(variable)));
            return std::pow(v, -power);
        }
        case CandidateKind::CrossMonomial: {
            if (exponents.size() != static_cast<std::size_t>(x.size()))
                throw ConfigError("candidate '" + label + "' expects dimension " + std::to_string(exponents.size()));
            double out = 1.0;
            for (std::size_t i = 0; i < exponents.size(); ++i) out *= std::pow(x[static_cast<Eigen::Index>(i)], exponents[i]);
            return out;
        }
    }
    return 0.0;
}

std::vector<std::string> CandidateLibrary::labels() const {
    std::vector<std::string> out;
    for (const auto& f : functions) out.push_back(f.label);
    return out;
}

std::optional<std::size_t> CandidateLibrary::index_of(const std::string& label) const {
    for (std::size_t j = 0; j < functions.size(); ++j)
        if (functions[j].label == label) return j;
    return std::nullopt;
}

void CandidateLibrary::validate() const {
    if (functions.empty()) throw ConfigError("candidate library is empty");
    std::set<std::string> seen;
    for (const auto& f : functions)
        if (!seen.insert(f.label).second) throw ConfigError("duplicate candidate label '" + f.label + "'");
}

CandidateLibrary CandidateLibrary::polynomial(int degree, const std::string& name) {
    CandidateLibrary lib;
    lib.functions.push_back(CandidateFunction::constant());
    for (int k = 1; k <= degree; ++k) lib.functions.push_back(CandidateFunction::monomial(0, k, name));
    return lib;
}

CandidateLibrary CandidateLibrary::inverse_powers(int max_power, const std::string& name) {
    CandidateLibrary lib;
    lib.functions.push_back(CandidateFunction::constant());
    for (int k = 1; k <= max_power; ++k) lib.functions.push_back(CandidateFunction::inverse_power(0, k, name));
    return lib;
}

CandidateLibrary CandidateLibrary::radial_wall(double wall, int max_power, const std::string& name) {
    CandidateLibrary lib = inverse_powers(max_power, name);
    for (int k = 1; k <= max_power; ++k)
        lib.functions.push_back(CandidateFunction::shifted_inverse_power(0, wall, k, name));
    return lib;
}

Mat build_design(const CandidateLibrary& lib, const Mat& points) {
    lib.validate();
    if (static_cast<std::size_t>(points.rows()) != lib.input_dim)
        throw ConfigError("library expects points of dimension " + std::to_string(lib.input_dim));
    Mat X(points.cols(), static_cast<Eigen::Index>(lib.size()));
    for (Eigen::Index k = 0; k < points.cols(); ++k) {
        const Vec x = points.col(k);
        for (std::size_t j = 0; j < lib.size(); ++j) {
            try {
                X(k, static_cast<Eigen::Index>(j)) = lib.functions[j].evaluate(x);
            } catch (const DomainError& e) {
                throw DomainError(std::string(e.what()) + " (point " + std::to_string(k) + ")");
            }
        }
    }
    return X;
}

Vec ols(const Mat& X, const Vec& y) {
    if (X.rows() != y.size()) throw ConfigError("design matrix and target have different row counts");
    if (X.cols() == 0) return Vec();
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(X);
    return cod.solve(y);
}

std::size_t SparseFit::active_count() const {
    std::size_t n = 0;
    for (bool a : active) n += a ? 1 : 0;
    return n;
}

double SparseFit::normalized_residual() const {
    return n_samples == 0 ? 0.0 : residual_norm / std::sqrt(static_cast<double>(n_samples));
}

SparseFit stlsq(const Mat& X, const Vec& y, double lambda) {
    return stlsq(X, y, lambda, std::vector<bool>(static_cast<std::size_t>(X.cols()), true));
}

SparseFit stlsq(const Mat& X, const Vec& y, double lambda, std::vector<bool> active) {
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
    if (X.rows() != y.size()) throw ConfigError("design matrix and target have different row counts");
    if (active.size() != static_cast<std::size_t>(X.cols())) throw ConfigError("active mask has the wrong length");

    const std::size_t J = active.size();
    SparseFit fit;
    fit.lambda = lambda;
    fit.n_samples = static_cast<std::size_t>(X.rows());
    fit.beta = Vec::Zero(static_cast<Eigen::Index>(J));

    for (std::size_t iter = 1; iter <= J + 1; ++iter) {
        std::vector<Eigen::Index> cols;
        for (std::size_t j = 0; j < J; ++j)
            if (active[j]) cols.push_back(static_cast<Eigen::Index>(j));
        if (cols.empty()) throw AllPrunedError("every candidate was pruned at lambda " + format_shortest(lambda));

        const Mat sub = X(Eigen::all, cols);
        const Vec b = ols(sub, y);
        fit.beta.setZero();
        bool pruned = false;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const auto j = static_cast<std::size_t>(cols[k]);
            if (std::abs(b[static_cast<Eigen::Index>(k)]) < lambda) {
                active[j] = false;
                pruned = true;
            } else {
                fit.beta[cols[k]] = b[static_cast<Eigen::Index>(k)];
            }
        }
        fit.iterations = iter;
        if (!pruned) break;
    }
    bool any = false;
    for (bool a : active) any = any || a;
    if (!any) throw AllPrunedError("every candidate was pruned at lambda " + format_shortest(lambda));
    fit.active = std::move(active);
    fit.residual_norm = (y - X * fit.beta).norm();
    return fit;
}

std::string to_string(ResidualMode mode) { return mode == ResidualMode::Raw ? "raw" : "normalized"; }

ResidualMode residual_mode_from_string(const std::string& name) {
    if (name == "normalized") return ResidualMode::Normalized;
    if (name == "raw") return ResidualMode::Raw;
    throw ConfigError("unknown residual mode '" + name + "'");
}

LambdaSearch tune_lambda(const Mat& X, const Vec& y, double start, double factor, double tol, ResidualMode mode) {
    if (!(start > 0.0)) throw ConfigError("lambda search needs a positive start");
    if (!(factor > 0.0 && factor < 1.0)) throw ConfigError("lambda factor must lie in (0, 1)");
    if (!(tol >= 0.0)) throw ConfigError("residual tolerance must be non-negative");
    LambdaSearch search;
    search.tolerance = tol;
    search.mode = mode;
    for (double lambda = start; lambda >= kLambdaFloor; lambda *= factor) {
        LambdaTrial trial;
        trial.lambda = lambda;
        try {
            SparseFit fit = stlsq(X, y, lambda);
            trial.residual = mode == ResidualMode::Raw ? fit.residual_norm : fit.normalized_residual();
            trial.active_count = fit.active_count();
            trial.passed = trial.residual <= tol;
            search.path.push_back(trial);
            if (trial.passed) {
                search.fit = std::move(fit);
                return search;
            }
        } catch (const AllPrunedError&) {
            trial.all_pruned = true;
            search.path.push_back(trial);
        }
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : search.path)
        if (!t.all_pruned) best = std::min(best, t.residual);
    throw NoFitError("no lambda down to " + format_shortest(kLambdaFloor) + " reaches " + to_string(mode) +
                     " residual " + format_shortest(tol) + " (best " + format_shortest(best) + ")");
}

namespace {

std::string format_coefficient(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

}  // namespace

std::string render_expression(const SparseFit& fit, const CandidateLibrary& lib, int digits) {
    if (fit.beta.size() != static_cast<Eigen::Index>(lib.size()))
        throw ConfigError("fit and library have different sizes");
    if (digits < 1 || digits > 17) throw ConfigError("digits must lie in [1, 17]");
    std::string out;
    for (std::size_t j = 0; j < lib.size(); ++j) {
        const double b = fit.beta[static_cast<Eigen::Index>(j)];
        if (b == 0.0 || (!fit.active.empty() && !fit.active[j])) continue;
        const auto& f = lib.functions[j];
        std::string term = format_coefficient(std::abs(b), digits);
        if (f.kind != CandidateKind::Constant) term += "*" + f.label;
        if (out.empty())
            out = b < 0 ? "-" + term : term;
        else
            out += (b < 0 ? " - " : " + ") + term;
    }
    return out.empty() ? "0" : out;
}

Vec parse_expression(const std::string& text, const CandidateLibrary& lib) {
    Vec beta = Vec::Zero(static_cast<Eigen::Index>(lib.size()));
    if (text == "0") return beta;
    // terms are separated by " + " / " - "; labels never contain spaced signs
    std::vector<std::pair<double, std::string>> terms;
    std::size_t pos = 0;
    double sign = 1.0;
    if (!text.empty() && text[0] == '-') {
        sign = -1.0;
        pos = 1;
    }
    while (pos <= text.size()) {
        const std::size_t plus = text.find(" + ", pos);
        const std::size_t minus = text.find(" - ", pos);
        const std::size_t next = std::min(plus, minus);
        terms.emplace_back(sign, text.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
        if (next == std::string::npos) break;
        sign = next == minus ? -1.0 : 1.0;
        pos = next + 3;
    }
    for (const auto& [s, term] : terms) {
        const std::size_t star = term.find('*');
        const std::string coef = term.substr(0, star);
        const std::string label = star == std::string::npos ? "1" : term.substr(star + 1);
        const auto j = lib.index_of(label);
        if (!j) throw FormatError("expression term '" + term + "' names no library candidate");
        double v = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(coef, &used);
            if (used != coef.size()) throw FormatError("bad coefficient '" + coef + "'");
        } catch (const std::logic_error&) {
            throw FormatError("bad coefficient '" + coef + "'");
        }
        beta[static_cast<Eigen::Index>(*j)] += s * v;
    }
    return beta;
}

std::string fit_report_text(const LambdaSearch& search, const CandidateLibrary& lib) {
    std::ostringstream os;
    os << "candidates: ";
    for (std::size_t j = 0; j < lib.size(); ++j) os << (j ? ", " : "") << lib.functions[j].label;
    os << "\nresidual criterion: " << to_string(search.mode) << " residual <= " << format_shortest(search.tolerance)
       << "\nlambda path:\n";
    for (const auto& t : search.path) {
        os << "  lambda " << format_shortest(t.lambda) << ": ";
        if (t.all_pruned)
            os << "all candidates pruned\n";
        else
            os << t.active_count << " active, residual " << format_shortest(t.residual)
               << (t.passed ? " (accepted)" : "") << "\n";
    }
    const auto& fit = search.fit;
    os << "selected lambda: " << format_shortest(fit.lambda) << "\ncoefficients:\n";
    for (std::size_t j = 0; j < lib.size(); ++j)
        os << "  " << lib.functions[j].label << " = " << format_shortest(fit.beta[static_cast<Eigen::Index>(j)])
           << (fit.active[j] ? "" : " (pruned)") << "\n";
    os << "normalized residual: " << format_shortest(fit.normalized_residual()) << "\n";
    os << "expression: " << render_expression(fit, lib, 4) << "\n";
    return os.str();
}

std::string fit_report_json(const LambdaSearch& search, const CandidateLibrary& lib) {
    nlohmann::ordered_json doc;
    doc["labels"] = lib.labels();
    doc["residual_mode"] = to_string(search.mode);
    doc["tolerance"] = search.tolerance;
    auto path = nlohmann::ordered_json::array();
    for (const auto& t : search.path) {
        nlohmann::ordered_json row;
        row["lambda"] = t.lambda;
        row["all_pruned"] = t.all_pruned;
        if (!t.all_pruned) {
            row["residual"] = t.residual;
            row["active_count"] = t.active_count;
        }
        row["passed"] = t.passed;
        path.push_back(row);
    }
    doc["lambda_path"] = path;
    const auto& fit = search.fit;
    doc["lambda"] = fit.lambda;
    nlohmann::ordered_json coefs = nlohmann::ordered_json::object();
    for (std::size_t j = 0; j < lib.size(); ++j) coefs[lib.functions[j].label] = fit.beta[static_cast<Eigen::Index>(j)];
    doc["coefficients"] = coefs;
    doc["active"] = fit.active;
    doc["residual_norm"] = fit.residual_norm;
    doc["normalized_residual"] = fit.normalized_residual();
    doc["n_samples"] = fit.n_samples;
    doc["iterations"] = fit.iterations;
    doc["expression"] = render_expression(fit, lib, 4);
    doc["expression_full"] = render_expression(fit, lib, 17);
    return doc.dump(2) + "\n";
}

}  // namespace hamlearn
