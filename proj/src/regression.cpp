#include "sqmf/regression.hpp"

#include <cmath>
#include <limits>

namespace sqmf {

namespace {

constexpr double kConditionLimit = 1e12;

// Grow an orthonormal set `basis` (D x r) by `extra` columns, trying the
// columns of `candidates` in order and then the standard basis.
Matrix complete_orthonormal(const Matrix& basis, const Matrix& candidates, Eigen::Index extra) {
    const Eigen::Index D = basis.rows();
    Matrix out(D, basis.cols() + extra);
    out.leftCols(basis.cols()) = basis;
    Eigen::Index filled = basis.cols();
    auto try_add = [&](Vector v) {
        for (int pass = 0; pass < 2; ++pass) {
            v -= out.leftCols(filled) * (out.leftCols(filled).transpose() * v);
        }
        const double norm = v.norm();
        if (norm > 1e-8) out.col(filled++) = v / norm;
    };
    for (Eigen::Index j = 0; j < candidates.cols() && filled < out.cols(); ++j) {
        try_add(candidates.col(j));
    }
    for (Eigen::Index j = 0; j < D && filled < out.cols(); ++j) try_add(Vector::Unit(D, j));
    if (filled < out.cols()) throw NumericalError("update_q: cannot complete orthonormal basis");
    return out.rightCols(extra);
}

Matrix default_previous(Eigen::Index D, Eigen::Index m) { return Matrix::Identity(D, m); }

}  // namespace

void RegressionSettings::validate() const {
    require(epsilon > 0.0, "epsilon must be positive");
    require(max_inner_iters >= 1, "max_inner_iters must be >= 1");
    require(lambda >= 0.0, "lambda must be non-negative");
    require(ridge >= 0.0, "ridge must be non-negative");
}

void normalize_column_signs(Matrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        Eigen::Index arg = 0;
        m.col(j).cwiseAbs().maxCoeff(&arg);
        if (m(arg, j) < 0.0) m.col(j) = -m.col(j);
    }
}

Matrix residual_matrix(const Matrix& X, const Vector& c) {
    require(c.size() == X.rows(), "residual_matrix: c must have length D");
    return X.colwise() - c;
}

Matrix coefficient_matrix(const Matrix& coords, const Matrix& theta) {
    const Eigen::Index d = coords.rows();
    require(theta.rows() == packed_size(d), "coefficient_matrix: theta must have d(d+1)/2 rows");
    Matrix M(d + theta.cols(), coords.cols());
    M.topRows(d) = coords;
    M.bottomRows(theta.cols()).noalias() = theta.transpose() * psi_map(coords);
    return M;
}

Vector update_c(const Matrix& X, const Matrix& Q, const Matrix& theta, const Matrix& coords) {
    require(X.cols() > 0, "update_c: no samples");
    require(coords.cols() == X.cols(), "update_c: coordinate count must match sample count");
    require(Q.rows() == X.rows(), "update_c: Q must have D rows");
    const Matrix QM = Q * coefficient_matrix(coords, theta);
    return (X - QM).rowwise().mean();
}

QUpdate update_q(const Matrix& X, const Vector& c, const Matrix& theta, const Matrix& coords,
                 const Matrix& previous) {
    const Eigen::Index D = X.rows();
    const Eigen::Index m = coords.rows() + theta.cols();
    require(m <= D, "update_q: d + s must not exceed D");
    const Matrix B = residual_matrix(X, c) * coefficient_matrix(coords, theta).transpose();
    if (!B.allFinite()) throw NumericalError("update_q: non-finite cross-product matrix");

    Eigen::JacobiSVD<Matrix> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Matrix Y = svd.matrixU();
    Matrix Z = svd.matrixV();
    for (Eigen::Index j = 0; j < m; ++j) {
        Eigen::Index arg = 0;
        Y.col(j).cwiseAbs().maxCoeff(&arg);
        if (Y(arg, j) < 0.0) {
            Y.col(j) = -Y.col(j);
            Z.col(j) = -Z.col(j);
        }
    }

    QUpdate out;
    out.singular_values = svd.singularValues();
    const double top = m > 0 ? out.singular_values(0) : 0.0;
    const double tol = static_cast<double>(std::max(D, m)) * std::numeric_limits<double>::epsilon() * top;
    Eigen::Index rank = 0;
    while (rank < m && top > 0.0 && out.singular_values(rank) > tol) ++rank;
    for (Eigen::Index j = 1; j < m; ++j) {
        if (out.singular_values(j - 1) - out.singular_values(j) <= 1e-10 * std::max(top, 1e-300)) {
            out.distinct = false;
        }
    }

    if (rank == m) {
        out.Q = Y * Z.transpose();
        return out;
    }

    // Zero singular directions: any orthonormal completion attains the same
    // inner product. Take the one nearest to the previous Q.
    out.rank_deficient = true;
    const Matrix prev = previous.size() == 0 ? default_previous(D, m) : previous;
    require(prev.rows() == D && prev.cols() == m, "update_q: previous Q has wrong shape");
    const Matrix Yr = Y.leftCols(rank);
    const Matrix Zr = Z.leftCols(rank);
    const Matrix Zn = Z.rightCols(m - rank);
    Matrix C = prev * Zn;
    C -= Yr * (Yr.transpose() * C);
    Eigen::JacobiSVD<Matrix> csvd(C, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::Index k = m - rank;
    Eigen::Index crank = 0;
    while (crank < k && csvd.singularValues()(crank) > 1e-10) ++crank;
    Matrix W;
    if (crank == k) {
        W = csvd.matrixU() * csvd.matrixV().transpose();
    } else {
        Matrix left = csvd.matrixU().leftCols(crank);
        Matrix basis(D, rank + crank);
        basis << Yr, left;
        Matrix fill = complete_orthonormal(basis, prev, k - crank);
        Matrix full(D, k);
        full << left, fill;
        W = full * csvd.matrixV().transpose();
    }
    out.Q = Yr * Zr.transpose() + W * Zn.transpose();
    return out;
}

ThetaUpdate update_theta(const Matrix& X, const Vector& c, const Matrix& V, const Matrix& coords,
                         double lambda, double ridge) {
    require(lambda >= 0.0, "update_theta: lambda must be non-negative");
    require(V.rows() == X.rows(), "update_theta: V must have D rows");
    const Matrix psi = psi_map(coords);
    const Eigen::Index p = psi.rows();
    Matrix gram = psi * psi.transpose();
    const Matrix rhs = psi * (residual_matrix(X, c).transpose() * V);

    ThetaUpdate out;
    const double trace = gram.trace();
    if (!(trace > 0.0)) {
        out.theta = Matrix::Zero(p, V.cols());
        out.degenerate = true;
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(p - 1);
    if (!(lo > 0.0) || hi / lo > kConditionLimit) {
        gram.diagonal().array() += ridge * trace / static_cast<double>(p);
        out.ridge_applied = true;
        if (ridge == 0.0) {
            out.theta = gram.completeOrthogonalDecomposition().solve(rhs) / (1.0 + lambda);
            return out;
        }
    }
    out.theta = gram.ldlt().solve(rhs) / (1.0 + lambda);
    return out;
}

double objective(const Matrix& X, const Vector& c, const Matrix& Q, const Matrix& theta,
                 const Matrix& coords, double lambda) {
    require(coords.cols() == X.cols(), "objective: coordinate count must match sample count");
    require(Q.rows() == X.rows() && Q.cols() == coords.rows() + theta.cols(),
            "objective: Q must be D x (d+s)");
    const Matrix M = coefficient_matrix(coords, theta);
    double value = (residual_matrix(X, c) - Q * M).squaredNorm();
    if (lambda != 0.0) value += lambda * M.bottomRows(theta.cols()).squaredNorm();
    return value;
}

StationarityReport stationarity(const Matrix& X, const RegressionState& state,
                                const Matrix& coords, double lambda) {
    StationarityReport out;
    const Matrix M = coefficient_matrix(coords, state.theta);
    const Matrix R = residual_matrix(X, state.c);
    out.grad_c_norm = (2.0 * (R - state.Q * M).rowwise().sum()).norm();

    const Matrix psi = psi_map(coords);
    const Matrix V = state.V();
    out.theta_normal_residual =
        ((1.0 + lambda) * (psi * psi.transpose()) * state.theta - psi * (R.transpose() * V)).norm();

    const Matrix B = R * M.transpose();
    const Matrix QtB = state.Q.transpose() * B;
    out.q_residual = (B - state.Q * QtB).norm() + (0.5 * (QtB - QtB.transpose())).norm();

    Eigen::JacobiSVD<Matrix> svd(B);
    const Vector& sv = svd.singularValues();
    for (Eigen::Index j = 1; j < sv.size(); ++j) {
        if (sv(j - 1) - sv(j) <= 1e-10 * std::max(sv(0), 1e-300)) out.distinct_singular_values = false;
    }
    return out;
}

Matrix pca_basis(const Matrix& X, Eigen::Index k) {
    require(k <= X.rows(), "pca_basis: k must not exceed D");
    const Matrix centered = X.colwise() - X.rowwise().mean();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(centered * centered.transpose());
    if (eig.info() != Eigen::Success) throw NumericalError("pca_basis: eigensolver failed");
    Matrix basis = eig.eigenvectors().rowwise().reverse().leftCols(k);
    normalize_column_signs(basis);
    return basis;
}

RegressionResult fit_regression(const Matrix& X, const Matrix& coords, Eigen::Index s,
                                const RegressionSettings& settings,
                                const std::optional<RegressionState>& warm) {
    settings.validate();
    const Eigen::Index D = X.rows();
    const Eigen::Index n = X.cols();
    const Eigen::Index d = coords.rows();
    const Eigen::Index m = d + s;
    require(coords.cols() == n, "fit_regression: coordinate count must match sample count");
    require(d >= 1 && s >= 1, "fit_regression: d and s must be positive");
    require(m <= D, "fit_regression: d + s must not exceed D");
    require(n >= m, "fit_regression: need at least d + s samples");

    RegressionResult result;
    RegressionState& st = result.state;
    if (warm) {
        st = *warm;
        require(st.c.size() == D && st.Q.rows() == D && st.Q.cols() == m &&
                    st.theta.rows() == packed_size(d) && st.theta.cols() == s,
                "fit_regression: warm start has wrong shape");
    } else {
        st.c = Vector::Zero(D);
        st.theta = Matrix::Zero(packed_size(d), s);
        st.Q = settings.init == RegressionInit::pca ? pca_basis(X, m) : Matrix::Identity(D, m);
    }
    const double lambda = settings.lambda;
    auto record = [&](const char* stage) {
        st.objective = objective(X, st.c, st.Q, st.theta, coords, lambda);
        if (!std::isfinite(st.objective)) {
            throw NumericalError(std::string("fit_regression: non-finite objective after ") + stage);
        }
        result.trace.push_back(st.objective);
    };
    record("initialization");

    for (int t = 0; t < settings.max_inner_iters; ++t) {
        const Vector c_prev = st.c;
        const Matrix q_prev = st.Q;
        const Matrix theta_prev = st.theta;

        st.c = update_c(X, st.Q, st.theta, coords);
        record("c update");

        QUpdate q = update_q(X, st.c, st.theta, coords, st.Q);
        st.Q = std::move(q.Q);
        result.rank_deficient = result.rank_deficient || q.rank_deficient;
        record("Q update");

        ThetaUpdate th = update_theta(X, st.c, st.V(), coords, lambda, settings.ridge);
        st.theta = std::move(th.theta);
        result.ridge_applied = result.ridge_applied || th.ridge_applied;
        record("theta update");

        result.iterations = t + 1;
        const double q_shift =
            std::max(0.0, 2.0 * static_cast<double>(m) - 2.0 * (st.Q.transpose() * q_prev).squaredNorm());
        const double displacement =
            (st.c - c_prev).squaredNorm() + (st.theta - theta_prev).squaredNorm() + q_shift;
        if (displacement <= settings.epsilon) {
            result.converged = true;
            break;
        }
    }

    result.stationarity = stationarity(X, st, coords, lambda);
    if (result.rank_deficient) result.flags.emplace_back("rank_deficient_cross_product");
    if (result.ridge_applied) result.flags.emplace_back("ridge_loading_applied");
    if (!result.stationarity.distinct_singular_values) result.flags.emplace_back("repeated_singular_values");
    if (!result.converged) result.flags.emplace_back("inner_iteration_limit");
    return result;
}

}  // namespace sqmf
