#pragma once

#include "sqmf/projection.hpp"
#include "sqmf/regression.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sqmf {

/// f(tau) = c + U tau + V A(tau, tau) with U^T U = I, V^T V = I, U^T V = 0.
class QuadraticModel {
public:
    QuadraticModel() = default;

    /// Validates shapes, the dimension constraint and orthonormality (1e-10).
    QuadraticModel(Vector c, Matrix U, Matrix V, Matrix theta, double lambda);

    static QuadraticModel from_state(const RegressionState& state, Eigen::Index d, double lambda);

    Eigen::Index D() const { return c_.size(); }
    Eigen::Index d() const { return U_.cols(); }
    Eigen::Index s() const { return V_.cols(); }
    double lambda() const { return lambda_; }
    const Vector& c() const { return c_; }
    const Matrix& U() const { return U_; }
    const Matrix& V() const { return V_; }
    const Matrix& theta() const { return theta_; }
    const QuadraticForm& form() const { return *form_; }
    std::shared_ptr<const QuadraticForm> shared_form() const { return form_; }

    Matrix Q() const;
    RegressionState state() const;

    Vector predict(const Vector& tau) const;
    Matrix predict_all(const Matrix& coords) const;

    /// The per-point subproblem for a sample x.
    ProjectionProblem problem_for(const Vector& x) const;

private:
    Vector c_;
    Matrix U_;
    Matrix V_;
    Matrix theta_;
    double lambda_ = 0.0;
    std::shared_ptr<const QuadraticForm> form_;
};

struct FitSettings {
    RegressionSettings regression;
    SolverSettings solver;
    int max_outer_iters = 100;
    /// Outer stop when |l^k - l^{k-1}| <= outer_tol * l^0.
    double outer_tol = 1e-7;
    /// Keep the previous tau_i when the fresh solve from phi_i is worse.
    bool keep_best_tau = true;

    void validate() const;
};

struct OuterStep {
    double after_regression = 0.0;           ///< l_lambda(Theta^k, c^k, Q^k, Phi^{k-1})
    double after_projection = 0.0;           ///< l_lambda(Theta^k, c^k, Q^k, Phi^k)
    double unregularized_after_projection = 0.0;  ///< l at the same point
    int inner_iterations = 0;
    bool inner_converged = false;
};

struct FitReport {
    std::vector<OuterStep> outer;
    SolverMethod solver_method = SolverMethod::surrogate;
    bool converged = false;
    double initial_objective = 0.0;
    StationarityReport stationarity;
    double max_projection_gradient = 0.0;  ///< max_i ||grad f_i(tau_i)|| at the final model
    int stalled_points = 0;
    int failed_points = 0;
    std::vector<int> non_monotone_steps;  ///< outer indices k with an objective increase
    std::vector<std::string> flags;

    std::vector<double> objective_trace() const;
};

struct FitResult {
    QuadraticModel model;
    Matrix coords;
    FitReport report;
};

/// Warm start for fit(): a model and coordinates from an earlier run.
struct FitStart {
    QuadraticModel model;
    Matrix coords;
};

/// Rank-d PCA coordinates of the centered data.
Matrix pca_coordinates(const Matrix& X, Eigen::Index d);

/// Alternates the regression step and the per-point projection sweep.
FitResult fit(const Matrix& X, Eigen::Index d, Eigen::Index s, double lambda,
              const FitSettings& settings = {}, const std::optional<FitStart>& start = std::nullopt);

/// Affine rank-d fit (Theta fixed at zero); its objective is the PCA residual.
FitResult fit_flat(const Matrix& X, Eigen::Index d, Eigen::Index s);

Vector predict(const QuadraticModel& model, const Vector& tau);

struct Projection {
    Vector tau;
    Vector x_hat;
    SolveResult solve;
};

Projection project(const QuadraticModel& model, const Vector& x, const SolverSettings& settings);

}  // namespace sqmf
