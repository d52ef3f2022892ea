#pragma once

#include "sqmf/fitting.hpp"

#include <string>
#include <vector>

namespace sqmf {

struct NeighborhoodSpec {
    Eigen::Index k = 22;

    void validate(Eigen::Index d, Eigen::Index s) const;
};

/// Indices of the k nearest columns of X to x; ties go to the lower index.
std::vector<Eigen::Index> knn(const Matrix& X, const Vector& x, Eigen::Index k);

struct TangentEstimate {
    Matrix basis;      ///< D x d, orthonormal
    Matrix projector;  ///< basis * basis^T
    bool rank_deficient = false;
};

/// Tangent space of the model surface at tau from J = U + 2 V A_tau,
/// orthonormalized by a thin QR with positive diag(R).
TangentEstimate tangent_at(const QuadraticModel& model, const Vector& tau);

struct LpcaResult {
    Vector x_hat;
    Matrix projector;
    bool non_unique = false;  ///< d-th and (d+1)-th eigenvalues coincide
};

/// x_hat = c_x + P (x - c_x) with P from the top-d eigenvectors of the
/// neighborhood covariance.
LpcaResult lpca_denoise(const Matrix& X, const Vector& x, const NeighborhoodSpec& spec, Eigen::Index d);
LpcaResult lpca_from_neighbors(const Matrix& neighbors, const Vector& x, Eigen::Index d);

struct DenoiseResult {
    Vector x_hat;
    Vector tau;
    TangentEstimate tangent;
    bool fallback = false;  ///< local fit unusable, LPCA answer returned instead
    std::vector<std::string> flags;
};

/// Fits a local model on the k nearest neighbors of x and projects x onto it.
DenoiseResult denoise_point(const Matrix& X, const Vector& x, const NeighborhoodSpec& spec, Eigen::Index d,
                            Eigen::Index s, double lambda, const FitSettings& settings = {});
DenoiseResult denoise_from_neighbors(const Matrix& neighbors, const Vector& x, Eigen::Index d, Eigen::Index s,
                                     double lambda, const FitSettings& settings = {});

/// Mean squared Euclidean distance between columns.
double metric_fe(const Matrix& denoised, const Matrix& truth);

/// Mean squared Frobenius distance between paired projectors.
double metric_te(const std::vector<Matrix>& estimates, const std::vector<Matrix>& truths);

Matrix gather_columns(const Matrix& X, const std::vector<Eigen::Index>& idx);

}  // namespace sqmf
