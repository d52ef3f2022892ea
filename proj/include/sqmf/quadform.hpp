#pragma once

#include "sqmf/error.hpp"

#include <Eigen/Dense>

#include <vector>

namespace sqmf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Number of quadratic monomials in d variables, d(d+1)/2.
constexpr Eigen::Index packed_size(Eigen::Index d) { return d * (d + 1) / 2; }

/// Row of monomial tau_j * tau_k (j <= k) in the lexicographic ordering
/// (0,0),(0,1),...,(0,d-1),(1,1),...,(d-1,d-1).
constexpr Eigen::Index packed_index(Eigen::Index j, Eigen::Index k, Eigen::Index d) {
    if (j > k) std::swap(j, k);
    return j * d - j * (j - 1) / 2 + (k - j);
}

/// Checks 1 <= s <= min(d(d+1)/2, D-d) and d >= 1. Throws ValidationError.
void validate_dims(Eigen::Index D, Eigen::Index d, Eigen::Index s);

/// Quadratic monomials of one coordinate vector.
Vector psi_vector(const Vector& tau);

/// Column-wise monomials of a d x n coordinate matrix; result is d(d+1)/2 x n.
Matrix psi_map(const Matrix& coords);

/// The bilinear map A: R^d x R^d -> R^s stored as s dense symmetric d x d slices.
class QuadraticForm {
public:
    QuadraticForm() = default;

    /// Zero form.
    QuadraticForm(Eigen::Index d, Eigen::Index s);

    /// Throws ValidationError unless every slice is d x d and exactly symmetric.
    explicit QuadraticForm(std::vector<Matrix> slices);

    /// Slice k satisfies tau^T A_k tau = theta.col(k) . psi(tau); off-diagonal
    /// coefficients are split in half between (j,l) and (l,j).
    static QuadraticForm from_theta(const Matrix& theta, Eigen::Index d);

    /// Inverse of from_theta; exact.
    Matrix theta() const;

    Eigen::Index d() const { return d_; }
    Eigen::Index s() const { return static_cast<Eigen::Index>(slices_.size()); }
    const Matrix& slice(Eigen::Index k) const { return slices_[static_cast<std::size_t>(k)]; }
    const std::vector<Matrix>& slices() const { return slices_; }

    /// A(tau, eta)_k = tau^T A_k eta.
    Vector apply(const Vector& tau, const Vector& eta) const;

    /// s x d matrix whose row k is (A_k tau)^T, so that action(tau) * eta = apply(tau, eta).
    Matrix action(const Vector& tau) const;
    void action_into(const Vector& tau, Matrix& out) const;

    /// Adjoint A*(c) = sum_k c_k A_k.
    Matrix adjoint(const Vector& c) const;

    /// max_k sigma_1(A_k).
    double max_slice_norm() const;

    bool is_zero() const;

private:
    Eigen::Index d_ = 0;
    std::vector<Matrix> slices_;
};

inline QuadraticForm theta_to_form(const Matrix& theta, Eigen::Index d, Eigen::Index s) {
    require(theta.cols() == s, "theta_to_form: theta must have s columns");
    return QuadraticForm::from_theta(theta, d);
}

}  // namespace sqmf
