#include "sqmf/quadform.hpp"

#include <string>

namespace sqmf {

void validate_dims(Eigen::Index D, Eigen::Index d, Eigen::Index s) {
    require(d >= 1, "latent dimension d must be >= 1");
    require(s >= 1, "normal dimension s must be >= 1");
    require(s <= packed_size(d),
            "s must not exceed d(d+1)/2 = " + std::to_string(packed_size(d)));
    require(d + s <= D, "d + s must not exceed the ambient dimension D = " + std::to_string(D));
}

Vector psi_vector(const Vector& tau) {
    const Eigen::Index d = tau.size();
    Vector out(packed_size(d));
    Eigen::Index row = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index k = j; k < d; ++k) out(row++) = tau(j) * tau(k);
    }
    return out;
}

Matrix psi_map(const Matrix& coords) {
    const Eigen::Index d = coords.rows();
    Matrix out(packed_size(d), coords.cols());
    for (Eigen::Index i = 0; i < coords.cols(); ++i) {
        Eigen::Index row = 0;
        for (Eigen::Index j = 0; j < d; ++j) {
            for (Eigen::Index k = j; k < d; ++k) out(row++, i) = coords(j, i) * coords(k, i);
        }
    }
    return out;
}

QuadraticForm::QuadraticForm(Eigen::Index d, Eigen::Index s)
    : d_(d), slices_(static_cast<std::size_t>(s), Matrix::Zero(d, d)) {
    require(d >= 1 && s >= 1, "QuadraticForm: d and s must be positive");
}

QuadraticForm::QuadraticForm(std::vector<Matrix> slices) : slices_(std::move(slices)) {
    require(!slices_.empty(), "QuadraticForm: at least one slice required");
    d_ = slices_.front().rows();
    for (const auto& a : slices_) {
        require(a.rows() == d_ && a.cols() == d_, "QuadraticForm: slices must all be d x d");
        require(a == a.transpose(), "QuadraticForm: slices must be exactly symmetric");
    }
}

QuadraticForm QuadraticForm::from_theta(const Matrix& theta, Eigen::Index d) {
    require(theta.rows() == packed_size(d), "theta must have d(d+1)/2 rows");
    require(theta.cols() >= 1, "theta must have at least one column");
    QuadraticForm form(d, theta.cols());
    for (Eigen::Index k = 0; k < theta.cols(); ++k) {
        Matrix& a = form.slices_[static_cast<std::size_t>(k)];
        Eigen::Index row = 0;
        for (Eigen::Index j = 0; j < d; ++j) {
            a(j, j) = theta(row++, k);
            for (Eigen::Index l = j + 1; l < d; ++l) {
                const double half = theta(row++, k) / 2.0;
                a(j, l) = half;
                a(l, j) = half;
            }
        }
    }
    return form;
}

Matrix QuadraticForm::theta() const {
    Matrix out(packed_size(d_), s());
    for (Eigen::Index k = 0; k < s(); ++k) {
        const Matrix& a = slice(k);
        Eigen::Index row = 0;
        for (Eigen::Index j = 0; j < d_; ++j) {
            out(row++, k) = a(j, j);
            // Halving by 2 and doubling back is exact in binary floating point.
            for (Eigen::Index l = j + 1; l < d_; ++l) out(row++, k) = 2.0 * a(j, l);
        }
    }
    return out;
}

Vector QuadraticForm::apply(const Vector& tau, const Vector& eta) const {
    require(tau.size() == d_ && eta.size() == d_, "apply_form: vectors must have length d");
    Vector out(s());
    for (Eigen::Index k = 0; k < s(); ++k) out(k) = tau.dot(slice(k).lazyProduct(eta));
    return out;
}

Matrix QuadraticForm::action(const Vector& tau) const {
    Matrix out(s(), d_);
    action_into(tau, out);
    return out;
}

void QuadraticForm::action_into(const Vector& tau, Matrix& out) const {
    require(tau.size() == d_, "action_matrix: tau must have length d");
    out.resize(s(), d_);
    // Slices are symmetric, so row k is tau^T A_k.
    for (Eigen::Index k = 0; k < s(); ++k) out.row(k).noalias() = tau.transpose() * slice(k);
}

Matrix QuadraticForm::adjoint(const Vector& c) const {
    require(c.size() == s(), "adjoint: coefficient vector must have length s");
    Matrix out = Matrix::Zero(d_, d_);
    for (Eigen::Index k = 0; k < s(); ++k) out += c(k) * slice(k);
    return out;
}

double QuadraticForm::max_slice_norm() const {
    double b = 0.0;
    for (const auto& a : slices_) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
        b = std::max(b, eig.eigenvalues().cwiseAbs().maxCoeff());
    }
    return b;
}

bool QuadraticForm::is_zero() const {
    for (const auto& a : slices_) {
        if (!a.isZero(0.0)) return false;
    }
    return true;
}

}  // namespace sqmf
