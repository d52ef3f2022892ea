#pragma once

#include "sqmf/quadform.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sqmf {

/// One per-point instance of min_tau ||phi - tau||^2 + ||psi - A(tau,tau)||^2 + lambda ||A(tau,tau)||^2.
struct ProjectionProblem {
    Vector phi;  ///< tangent coordinates U^T (x - c)
    Vector psi;  ///< normal coordinates V^T (x - c)
    std::shared_ptr<const QuadraticForm> form;
    double lambda = 0.0;

    ProjectionProblem() = default;
    ProjectionProblem(Vector phi_, Vector psi_, std::shared_ptr<const QuadraticForm> form_,
                      double lambda_ = 0.0);

    Eigen::Index d() const { return phi.size(); }
    Eigen::Index s() const { return psi.size(); }
};

enum class SolverMethod { gradient, newton, surrogate };

std::string to_string(SolverMethod method);
SolverMethod parse_solver_method(const std::string& name);

struct SolverSettings {
    SolverMethod method = SolverMethod::surrogate;
    double tol = 1e-9;
    int max_iters = 200;
    double mu0 = 0.1;  ///< gradient method: initial trial step of every backtracking search

    void validate() const;
};

struct SolveResult {
    Vector tau;
    std::vector<double> trace;  ///< f_lambda at every accepted iterate, starting at tau_0
    int iterations = 0;
    bool converged = false;
    bool stalled = false;  ///< line search exhausted away from a stationary point
    bool failed = false;   ///< non-finite iterate or linear solve failure
    double gradient_norm = 0.0;
    double symmetry_gap = 0.0;  ///< surrogate only: ||alpha_n - beta_n||
    /// Surrogate only: (alpha_n, beta_n) pairs when SolverSettings requests them.
    std::vector<std::pair<Vector, Vector>> surrogate_iterates;
};

double f_value(const ProjectionProblem& p, const Vector& tau);
Vector f_gradient(const ProjectionProblem& p, const Vector& tau);
Matrix f_hessian(const ProjectionProblem& p, const Vector& tau);

/// Backtracking gradient descent from tau_0 = phi.
SolveResult solve_gradient(const ProjectionProblem& p, const SolverSettings& settings);

/// Newton iteration from tau_0 = phi with Levenberg damping when the Hessian
/// is not positive definite and step halving until f_lambda does not increase.
SolveResult solve_newton(const ProjectionProblem& p, const SolverSettings& settings);

/// Alternating exact minimization of the symmetric biquadratic surrogate
/// g(alpha, beta) from alpha_0 = beta_0 = phi; returns (alpha + beta) / 2.
SolveResult solve_surrogate(const ProjectionProblem& p, const SolverSettings& settings,
                            bool keep_iterates = false);

SolveResult solve(const ProjectionProblem& p, const SolverSettings& settings);

/// Surrogate objective g_lambda(alpha, beta); g(tau, tau) = f_lambda(tau).
double surrogate_value(const ProjectionProblem& p, const Vector& alpha, const Vector& beta);

struct ConvexityDiagnostics {
    double b_max = 0.0;   ///< max_k sigma_1(A_k)
    double gamma = 0.0;
    /// s gamma^2 b^2 + ||psi||_1 b / 2 <= 1/8
    bool convexity_satisfied = false;
    double convexity_lhs = 0.0;
    /// s gamma^2 b^2 - ||psi||_1 b / 2 <= 1/8 (alternate sign)
    bool convexity_alt_satisfied = false;
    double convexity_alt_lhs = 0.0;
    double op_norm_adjoint_psi = 0.0;
    bool adjoint_small = false;          ///< ||A*(psi)||_op < 1
    std::optional<double> iterate_bound;   ///< ||phi|| / (1 - 2||A*(psi)||_op), when the denominator is positive
    /// iterate_bound <= sqrt((1 + 4||psi||_1 b) / (8 s b^2)); b = 0 counts as satisfied.
    bool radius_satisfied = false;
    double basin_sigma = 0.0;            ///< sigma_max(2 A_phi^T A_phi + A*(A(phi,phi) - psi))
    bool in_basin = false;               ///< basin_sigma < 1/4
};

ConvexityDiagnostics diagnostics(const ProjectionProblem& p, double gamma);

}  // namespace sqmf
