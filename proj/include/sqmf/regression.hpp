#pragma once

#include "sqmf/quadform.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sqmf {

enum class RegressionInit { identity, pca };

struct RegressionSettings {
    double epsilon = 1e-8;
    int max_inner_iters = 500;
    double lambda = 0.0;
    /// Relative diagonal loading: ridge * trace(Psi Psi^T) / rows is added when
    /// Psi Psi^T has condition number above 1e12.
    double ridge = 1e-10;
    RegressionInit init = RegressionInit::identity;

    void validate() const;
};

/// Parameters of the regression subproblem; Q = [U, V].
struct RegressionState {
    Vector c;
    Matrix Q;
    Matrix theta;
    double objective = 0.0;

    Eigen::Index d() const { return Q.cols() - theta.cols(); }
    Eigen::Index s() const { return theta.cols(); }
    Matrix U() const { return Q.leftCols(d()); }
    Matrix V() const { return Q.rightCols(s()); }
};

/// Stationarity measures at a regression state (the inner KKT conditions).
struct StationarityReport {
    double grad_c_norm = 0.0;          ///< ||d l / d c||
    double theta_normal_residual = 0.0;///< ||(1+lambda) Psi Psi^T Theta - Psi R^T V||_F
    double q_residual = 0.0;           ///< ||(I - QQ^T) B||_F + ||skew(Q^T B)||_F, B = R M^T
    bool distinct_singular_values = true;
};

struct RegressionResult {
    RegressionState state;
    std::vector<double> trace;  ///< objective after every sub-update, starting at the initial state
    int iterations = 0;
    bool converged = false;
    bool rank_deficient = false;
    bool ridge_applied = false;
    StationarityReport stationarity;
    std::vector<std::string> flags;
};

/// X - c 1^T.
Matrix residual_matrix(const Matrix& X, const Vector& c);

/// [Phi; Theta^T Psi(Phi)], (d+s) x n.
Matrix coefficient_matrix(const Matrix& coords, const Matrix& theta);

/// Row mean of X - Q M(Theta).
Vector update_c(const Matrix& X, const Matrix& Q, const Matrix& theta, const Matrix& coords);

struct QUpdate {
    Matrix Q;
    Vector singular_values;
    bool rank_deficient = false;
    bool distinct = true;
};

/// Orthogonal Procrustes step: the polar factor of B = R(c) M(Theta)^T.
/// Directions with zero singular value are completed from `previous` (the
/// orthonormal matrix closest to it among the maximizers); when `previous` is
/// empty the completion starts from [I; 0].
QUpdate update_q(const Matrix& X, const Vector& c, const Matrix& theta, const Matrix& coords,
                 const Matrix& previous = Matrix());

struct ThetaUpdate {
    Matrix theta;
    bool ridge_applied = false;
    bool degenerate = false;  ///< Psi(Phi) identically zero
};

/// Least-squares Theta for fixed (c, V), scaled by 1/(1+lambda).
ThetaUpdate update_theta(const Matrix& X, const Vector& c, const Matrix& V, const Matrix& coords,
                         double lambda, double ridge = 1e-10);

/// ||X - c 1^T - Q M(Theta)||_F^2 + lambda ||Theta^T Psi(Phi)||_F^2.
double objective(const Matrix& X, const Vector& c, const Matrix& Q, const Matrix& theta,
                 const Matrix& coords, double lambda);

StationarityReport stationarity(const Matrix& X, const RegressionState& state,
                                const Matrix& coords, double lambda);

/// Alternating c -> Q -> Theta updates until the parameter displacement drops
/// to epsilon. `warm` overrides the configured initialization.
RegressionResult fit_regression(const Matrix& X, const Matrix& coords, Eigen::Index s,
                                const RegressionSettings& settings,
                                const std::optional<RegressionState>& warm = std::nullopt);

/// Top-k left singular vectors of the centered data, sign-normalized.
Matrix pca_basis(const Matrix& X, Eigen::Index k);

/// Flip column signs so each column's largest-magnitude entry is positive.
void normalize_column_signs(Matrix& m);

}  // namespace sqmf
