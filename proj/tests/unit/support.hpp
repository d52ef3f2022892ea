#pragma once

// Shared generators for the unit tests. Everything is driven by SampleStream
// so each test case sees the same inputs on every platform.

#include "sqmf/data.hpp"
#include "sqmf/fitting.hpp"
#include "sqmf/projection.hpp"
#include "sqmf/quadform.hpp"

#include <Eigen/QR>

#include <cmath>
#include <memory>

namespace sqmf::testing {

class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t tag = 0) : stream_(seed, 0xABCD + tag, 0) {}

    double normal() { return stream_.normal(); }
    double uniform(double lo = 0.0, double hi = 1.0) { return lo + (hi - lo) * stream_.uniform(); }
    int integer(int lo, int hi) { return lo + static_cast<int>(stream_.uniform() * (hi - lo + 1)); }

    Vector vector(Eigen::Index n, double scale = 1.0) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * normal();
        return v;
    }

    Matrix matrix(Eigen::Index r, Eigen::Index c, double scale = 1.0) {
        Matrix m(r, c);
        for (Eigen::Index j = 0; j < c; ++j) {
            for (Eigen::Index i = 0; i < r; ++i) m(i, j) = scale * normal();
        }
        return m;
    }

    /// D x m with orthonormal columns.
    Matrix orthonormal(Eigen::Index D, Eigen::Index m) {
        Eigen::HouseholderQR<Matrix> qr(matrix(D, m));
        return qr.householderQ() * Matrix::Identity(D, m);
    }

    Matrix orthogonal(Eigen::Index D) { return orthonormal(D, D); }

    std::shared_ptr<const QuadraticForm> form(Eigen::Index d, Eigen::Index s, double scale = 1.0) {
        return std::make_shared<const QuadraticForm>(theta_to_form(matrix(packed_size(d), s, scale), d, s));
    }

    ProjectionProblem problem(Eigen::Index d, Eigen::Index s, double form_scale = 1.0, double lambda = 0.0) {
        return ProjectionProblem(vector(d), vector(s), form(d, s, form_scale), lambda);
    }

    QuadraticModel model(Eigen::Index D, Eigen::Index d, Eigen::Index s, double theta_scale = 1.0,
                         double lambda = 0.0) {
        const Matrix Q = orthonormal(D, d + s);
        return QuadraticModel(vector(D), Q.leftCols(d), Q.rightCols(s), matrix(packed_size(d), s, theta_scale),
                              lambda);
    }

private:
    SampleStream stream_;
};

inline double rel_err(const Matrix& a, const Matrix& b) {
    return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace sqmf::testing
