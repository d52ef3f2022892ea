#include "doctest.h"
#include "support.hpp"

#include "sqmf/regression.hpp"

using namespace sqmf;
using sqmf::testing::Rng;

namespace {

struct Instance {
    Matrix X;
    Matrix coords;
    Vector c;
    Matrix Q;
    Matrix theta;
};

// X = c + U Phi + V Theta^T Psi(Phi) (+ noise).
Instance synth(Rng& rng, Eigen::Index D, Eigen::Index d, Eigen::Index s, Eigen::Index n, double noise,
               double theta_scale = 0.3) {
    Instance in;
    in.coords = rng.matrix(d, n);
    in.c = rng.vector(D);
    in.Q = rng.orthonormal(D, d + s);
    in.theta = rng.matrix(packed_size(d), s, theta_scale);
    in.X = (in.Q * coefficient_matrix(in.coords, in.theta)).colwise() + in.c;
    in.X += rng.matrix(D, n, noise);
    return in;
}

// Sum over samples of ||x_i - c - U tau_i - V A(tau_i, tau_i)||^2 + lambda ||A(tau_i, tau_i)||^2.
double per_column_objective(const Matrix& X, const Vector& c, const Matrix& Q, const Matrix& theta,
                            const Matrix& coords, double lambda) {
    const Eigen::Index d = coords.rows();
    const Eigen::Index s = theta.cols();
    const QuadraticForm A = theta_to_form(theta, d, s);
    double total = 0.0;
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
        const Vector tau = coords.col(i);
        const Vector quad = A.apply(tau, tau);
        const Vector r = X.col(i) - c - Q.leftCols(d) * tau - Q.rightCols(s) * quad;
        total += r.squaredNorm() + lambda * quad.squaredNorm();
    }
    return total;
}

}  // namespace

TEST_CASE("residual_matrix") {
    Rng rng(1);
    const Matrix X = rng.matrix(3, 5);
    CHECK(residual_matrix(X, Vector::Zero(3)) == X);

    const Vector x = rng.vector(3);
    const Matrix same = x.replicate(1, 4);
    CHECK(residual_matrix(same, x).isZero(0.0));

    Matrix X1(1, 2);
    X1 << 1, 2;
    CHECK(residual_matrix(X1, (Vector(1) << 1).finished()) == (Matrix(1, 2) << 0, 1).finished());

    CHECK_THROWS_AS(residual_matrix(X, Vector::Zero(2)), ValidationError);
}

TEST_CASE("coefficient_matrix") {
    Rng rng(2);
    const Matrix coords = rng.matrix(2, 6);
    const Matrix M0 = coefficient_matrix(coords, Matrix::Zero(3, 1));
    CHECK(M0.topRows(2) == coords);
    CHECK(M0.bottomRows(1).isZero(0.0));

    const double theta = 0.7;
    const double t = -1.3;
    const Matrix M1 = coefficient_matrix((Matrix(1, 1) << t).finished(), (Matrix(1, 1) << theta).finished());
    CHECK(M1(0, 0) == t);
    CHECK(M1(1, 0) == doctest::Approx(theta * t * t));

    const Matrix th = rng.matrix(3, 2);
    const QuadraticForm A = theta_to_form(th, 2, 2);
    const Matrix M = coefficient_matrix(coords, th);
    for (Eigen::Index i = 0; i < coords.cols(); ++i) {
        CHECK((M.col(i).tail(2) - A.apply(coords.col(i), coords.col(i))).norm() <= 1e-12);
    }
    CHECK_THROWS_AS(coefficient_matrix(coords, Matrix::Zero(2, 1)), ValidationError);
}

TEST_CASE("update_c") {
    Rng rng(3);
    const Matrix X = rng.matrix(4, 7);
    const Matrix Q = rng.orthonormal(4, 3);
    const Matrix coords0 = Matrix::Zero(2, 7);
    CHECK((update_c(X, Q, Matrix::Zero(3, 1), coords0) - X.rowwise().mean()).norm() <= 1e-14);

    Instance exact = synth(rng, 4, 2, 1, 9, 0.0);
    exact.X = exact.Q * coefficient_matrix(exact.coords, exact.theta);
    CHECK(update_c(exact.X, exact.Q, exact.theta, exact.coords).norm() <= 1e-13);

    // Central-difference gradient of the objective in c at the returned c.
    Instance in = synth(rng, 5, 2, 2, 12, 0.1);
    const Vector c = update_c(in.X, in.Q, in.theta, in.coords);
    const double h = 1e-6;
    Vector grad(5);
    for (Eigen::Index k = 0; k < 5; ++k) {
        Vector cp = c, cm = c;
        cp(k) += h;
        cm(k) -= h;
        grad(k) = (objective(in.X, cp, in.Q, in.theta, in.coords, 0.0) -
                   objective(in.X, cm, in.Q, in.theta, in.coords, 0.0)) / (2 * h);
    }
    CHECK(grad.norm() <= 1e-6);

    CHECK_THROWS_AS(update_c(Matrix(3, 0), Matrix::Identity(3, 2), Matrix::Zero(1, 1), Matrix(1, 0)),
                    ValidationError);
}

TEST_CASE("update_q on already-diagonal and orthonormal cross products") {
    Rng rng(4);
    // X = B M^{-T} gives the cross product B for an invertible M.
    const Matrix M = (Matrix(2, 2) << 1.0, 0.5, 1.0, 0.25).finished();  // tau = (1, 0.5), Psi = (1, 0.25)
    const Matrix coords1 = M.topRows(1);
    const Matrix theta1 = (Matrix(1, 1) << 1.0).finished();
    CHECK((coefficient_matrix(coords1, theta1) - M).norm() <= 1e-15);
    Matrix B(3, 2);
    B << 2, 0, 0, 1, 0, 0;
    const Matrix X1 = B * M.transpose().inverse();
    const QUpdate q1 = update_q(X1, Vector::Zero(3), theta1, coords1);
    CHECK((q1.Q - (Matrix(3, 2) << 1, 0, 0, 1, 0, 0).finished()).norm() <= 1e-12);
    CHECK_FALSE(q1.rank_deficient);

    const Matrix G = rng.orthonormal(3, 2);
    const Matrix X2 = G * M.transpose().inverse();
    const QUpdate q2 = update_q(X2, Vector::Zero(3), theta1, coords1);
    CHECK((q2.Q - G).norm() <= 1e-12);
}

TEST_CASE("update_q beats random orthonormal matrices (Procrustes oracle)") {
    Rng rng(5);
    Instance in = synth(rng, 6, 2, 1, 15, 0.2);
    const Vector c = in.X.rowwise().mean();
    const QUpdate q = update_q(in.X, c, in.theta, in.coords);
    const Matrix B = residual_matrix(in.X, c) * coefficient_matrix(in.coords, in.theta).transpose();
    const double best = (B.array() * q.Q.array()).sum();
    CHECK(best == doctest::Approx(q.singular_values.sum()).epsilon(1e-12));
    CHECK((q.Q.transpose() * q.Q - Matrix::Identity(3, 3)).norm() <= 1e-12);
    for (int k = 0; k < 1000; ++k) {
        const Matrix R = rng.orthonormal(6, 3);
        CHECK((B.array() * R.array()).sum() <= best + 1e-12);
    }
}

TEST_CASE("update_q completes rank-deficient cross products near the previous Q") {
    Rng rng(6);
    const Matrix coords = rng.matrix(2, 10);
    const Matrix X = rng.matrix(5, 10);
    // Theta = 0 makes the last column of B zero.
    const Matrix prev = rng.orthonormal(5, 3);
    const QUpdate q = update_q(X, X.rowwise().mean(), Matrix::Zero(3, 1), coords, prev);
    CHECK(q.rank_deficient);
    CHECK((q.Q.transpose() * q.Q - Matrix::Identity(3, 3)).norm() <= 1e-12);
    const Matrix B = residual_matrix(X, X.rowwise().mean()) * coefficient_matrix(coords, Matrix::Zero(3, 1)).transpose();
    CHECK((B.array() * q.Q.array()).sum() == doctest::Approx(q.singular_values.sum()).epsilon(1e-12));

    // Deterministic for identical inputs.
    const QUpdate again = update_q(X, X.rowwise().mean(), Matrix::Zero(3, 1), coords, prev);
    CHECK(again.Q == q.Q);
}

TEST_CASE("update_theta") {
    Rng rng(7);
    Instance in = synth(rng, 5, 2, 2, 20, 0.1);
    const Vector c = in.X.rowwise().mean();
    const Matrix V = in.Q.rightCols(2);

    // V^T R(c) = 0: project the normal part out of the data.
    const Matrix P = Matrix::Identity(5, 5) - V * V.transpose();
    const Matrix Xflat = (P * residual_matrix(in.X, c)).colwise() + c;
    CHECK(update_theta(Xflat, c, V, in.coords, 0.0).theta.norm() <= 1e-12);

    const Matrix t0 = update_theta(in.X, c, V, in.coords, 0.0).theta;
    const Matrix t1 = update_theta(in.X, c, V, in.coords, 1.0).theta;
    CHECK((t1 - t0 / 2.0).norm() <= 1e-14 * std::max(1.0, t0.norm()));

    const Matrix psi = psi_map(in.coords);
    const Matrix residual = psi * psi.transpose() * t0 - psi * residual_matrix(in.X, c).transpose() * V;
    CHECK(residual.norm() <= 1e-8);

    const ThetaUpdate degenerate = update_theta(in.X, c, V, Matrix::Zero(2, 20), 0.0);
    CHECK(degenerate.degenerate);
    CHECK(degenerate.theta.isZero(0.0));
}

TEST_CASE("update_theta applies a flagged ridge to ill-conditioned Psi Psi^T") {
    Rng rng(8);
    // All coordinates on the line tau_2 = 0 make Psi rows 2 and 3 vanish.
    Matrix coords = Matrix::Zero(2, 12);
    coords.row(0) = rng.vector(12).transpose();
    const Matrix X = rng.matrix(4, 12);
    const Matrix V = rng.orthonormal(4, 1);
    const ThetaUpdate out = update_theta(X, X.rowwise().mean(), V, coords, 0.0);
    CHECK(out.ridge_applied);
    CHECK(out.theta.allFinite());
}

TEST_CASE("objective") {
    Rng rng(9);
    Instance exact = synth(rng, 5, 2, 1, 10, 0.0);
    CHECK(objective(exact.X, exact.c, exact.Q, exact.theta, exact.coords, 0.0) <= 1e-24 * 1e6);

    const Matrix zero = Matrix::Zero(3, 1);
    const double flat = objective(exact.X, exact.c, exact.Q, zero, exact.coords, 0.0);
    const double expect = ((exact.X.colwise() - exact.c) - exact.Q.leftCols(2) * exact.coords).squaredNorm();
    CHECK(flat == doctest::Approx(expect).epsilon(1e-12));

    Instance noisy = synth(rng, 6, 3, 2, 25, 0.3);
    for (double lambda : {0.0, 0.5, 2.0}) {
        const double fast = objective(noisy.X, noisy.c, noisy.Q, noisy.theta, noisy.coords, lambda);
        const double slow = per_column_objective(noisy.X, noisy.c, noisy.Q, noisy.theta, noisy.coords, lambda);
        CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
        CHECK(fast >= 0.0);
    }
}

TEST_CASE("fit_regression recovers a noiseless instance given the true coordinates") {
    Rng rng(10);
    for (int trial = 0; trial < 5; ++trial) {
        Instance in = synth(rng, 6, 2, 2, 40, 0.0);
        RegressionSettings settings;
        settings.init = RegressionInit::pca;
        settings.max_inner_iters = 5000;
        settings.epsilon = 1e-20;
        const RegressionResult r = fit_regression(in.X, in.coords, 2, settings);
        CHECK(r.state.objective <= 1e-8);
    }
}

TEST_CASE("fit_regression with all-zero coordinates is degenerate but finite") {
    Rng rng(11);
    const Matrix X = rng.matrix(4, 9);
    const RegressionResult r = fit_regression(X, Matrix::Zero(2, 9), 1, RegressionSettings{});
    CHECK((r.state.c - X.rowwise().mean()).norm() <= 1e-12);
    CHECK(r.state.theta.isZero(0.0));
    CHECK(r.rank_deficient);
    CHECK((r.state.Q.transpose() * r.state.Q - Matrix::Identity(3, 3)).norm() <= 1e-10);
}

TEST_CASE("property: inner objective trace is non-increasing and Q stays orthonormal") {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index d = rng.integer(1, 3);
        const Eigen::Index s = rng.integer(1, static_cast<int>(std::min<Eigen::Index>(packed_size(d), 3)));
        const Eigen::Index D = d + s + rng.integer(0, 3);
        const Eigen::Index n = d + s + 5 + rng.integer(0, 30);
        Instance in = synth(rng, D, d, s, n, rng.uniform(0.0, 0.5));
        const Matrix coords = in.coords + rng.matrix(d, n, 0.1);
        RegressionSettings settings;
        settings.lambda = trial % 3 == 0 ? rng.uniform(0.0, 2.0) : 0.0;
        settings.init = trial % 2 == 0 ? RegressionInit::identity : RegressionInit::pca;
        const RegressionResult r = fit_regression(in.X, coords, s, settings);
        for (std::size_t k = 1; k < r.trace.size(); ++k) {
            CHECK(r.trace[k] <= r.trace[k - 1] + 1e-10);
        }
        CHECK((r.state.Q.transpose() * r.state.Q - Matrix::Identity(d + s, d + s)).norm() <= 1e-10);
    }
}

TEST_CASE("stationarity residuals vanish at a converged state") {
    Rng rng(13);
    Instance in = synth(rng, 5, 2, 1, 30, 0.05);
    RegressionSettings settings;
    settings.epsilon = 1e-24;
    settings.max_inner_iters = 5000;
    settings.lambda = 0.3;
    const RegressionResult r = fit_regression(in.X, in.coords, 1, settings);
    CHECK(r.stationarity.grad_c_norm <= 1e-8);
    CHECK(r.stationarity.theta_normal_residual <= 1e-8);
}

TEST_CASE("settings validation") {
    RegressionSettings bad;
    bad.epsilon = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = RegressionSettings{};
    bad.lambda = -1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = RegressionSettings{};
    bad.ridge = -1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("pca_basis is orthonormal and sign-normalized") {
    Rng rng(14);
    const Matrix X = rng.matrix(5, 40);
    const Matrix B = pca_basis(X, 3);
    CHECK((B.transpose() * B - Matrix::Identity(3, 3)).norm() <= 1e-12);
    for (Eigen::Index j = 0; j < 3; ++j) {
        Eigen::Index arg = 0;
        B.col(j).cwiseAbs().maxCoeff(&arg);
        CHECK(B(arg, j) > 0.0);
    }
}
