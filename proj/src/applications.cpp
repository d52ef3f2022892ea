#include "sqmf/applications.hpp"

#include "sqmf/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace sqmf {

void NeighborhoodSpec::validate(Eigen::Index d, Eigen::Index s) const {
    require(k >= d + s + 1, "neighborhood: k must be >= d + s + 1");
}

std::vector<Eigen::Index> knn(const Matrix& X, const Vector& x, Eigen::Index k) {
    require(k >= 1, "knn: k must be >= 1");
    require(k <= X.cols(), "knn: k must not exceed the number of points");
    require(x.size() == X.rows(), "knn: query dimension must match the data");
    std::vector<std::pair<double, Eigen::Index>> scratch;
    Eigen::Matrix<Eigen::Index, Eigen::Dynamic, 1> out(k);
    detail::knn_one(X, x, k, scratch, out);
    return {out.data(), out.data() + k};
}

Matrix gather_columns(const Matrix& X, const std::vector<Eigen::Index>& idx) {
    Matrix out(X.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = X.col(idx[j]);
    return out;
}

TangentEstimate tangent_at(const QuadraticModel& model, const Vector& tau) {
    require(tau.size() == model.d(), "tangent_at: tau must have length d");
    const Eigen::Index D = model.D();
    const Eigen::Index d = model.d();
    const Matrix J = model.U() + 2.0 * model.V() * model.form().action(tau);

    Eigen::HouseholderQR<Matrix> qr(J);
    Matrix basis = qr.householderQ() * Matrix::Identity(D, d);
    const Matrix R = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < d; ++j) {
        if (R(j, j) < 0.0) basis.col(j) = -basis.col(j);
    }

    TangentEstimate out;
    out.projector = basis * basis.transpose();
    out.basis = std::move(basis);
    Eigen::JacobiSVD<Matrix> svd(J);
    out.rank_deficient = svd.singularValues()(d - 1) <= 1e-10;
    return out;
}

LpcaResult lpca_from_neighbors(const Matrix& neighbors, const Vector& x, Eigen::Index d) {
    require(neighbors.cols() >= d + 1, "lpca: need at least d + 1 neighbors");
    require(d >= 1 && d < neighbors.rows(), "lpca: need 1 <= d < D");
    require(x.size() == neighbors.rows(), "lpca: query dimension must match the data");
    const Eigen::Index D = neighbors.rows();
    const Vector mean = neighbors.rowwise().mean();
    const Matrix centered = neighbors.colwise() - mean;
    const Matrix M = centered * centered.transpose() / static_cast<double>(neighbors.cols());

    Eigen::SelfAdjointEigenSolver<Matrix> eig(M);
    if (eig.info() != Eigen::Success) throw NumericalError("lpca: eigendecomposition failed");
    const Vector& values = eig.eigenvalues();
    Matrix basis = eig.eigenvectors().rightCols(d).rowwise().reverse();
    normalize_column_signs(basis);

    LpcaResult out;
    out.projector = basis * basis.transpose();
    out.x_hat = mean + out.projector * (x - mean);
    const double scale = std::max(values(D - 1), std::numeric_limits<double>::min());
    out.non_unique = values(D - d) - values(D - d - 1) <= 1e-10 * scale;
    return out;
}

LpcaResult lpca_denoise(const Matrix& X, const Vector& x, const NeighborhoodSpec& spec, Eigen::Index d) {
    require(spec.k >= d + 1, "lpca: k must be >= d + 1");
    return lpca_from_neighbors(gather_columns(X, knn(X, x, spec.k)), x, d);
}

DenoiseResult denoise_from_neighbors(const Matrix& neighbors, const Vector& x, Eigen::Index d, Eigen::Index s,
                                     double lambda, const FitSettings& settings) {
    DenoiseResult out;
    auto fall_back = [&](const std::string& why) {
        const LpcaResult lp = lpca_from_neighbors(neighbors, x, d);
        out.x_hat = lp.x_hat;
        out.tau = Vector::Zero(d);
        out.tangent.projector = lp.projector;
        Eigen::SelfAdjointEigenSolver<Matrix> eig(lp.projector);
        out.tangent.basis = eig.eigenvectors().rightCols(d);
        out.fallback = true;
        out.flags.push_back(why);
        return out;
    };

    FitResult local;
    try {
        local = fit(neighbors, d, s, lambda, settings);
    } catch (const NumericalError&) {
        return fall_back("local_fit_numerical_error");
    } catch (const ValidationError&) {
        return fall_back("local_fit_invalid");
    }
    if (local.report.failed_points > 0) return fall_back("local_fit_projection_failed");

    const Projection pr = project(local.model, x, settings.solver);
    if (pr.solve.failed || !pr.x_hat.allFinite()) return fall_back("projection_failed");
    out.x_hat = pr.x_hat;
    out.tau = pr.tau;
    out.tangent = tangent_at(local.model, pr.tau);
    if (out.tangent.rank_deficient) out.flags.emplace_back("tangent_rank_deficient");
    if (pr.solve.stalled) out.flags.emplace_back("projection_stalled");
    if (!local.report.converged) out.flags.emplace_back("local_fit_outer_limit");
    return out;
}

DenoiseResult denoise_point(const Matrix& X, const Vector& x, const NeighborhoodSpec& spec, Eigen::Index d,
                            Eigen::Index s, double lambda, const FitSettings& settings) {
    spec.validate(d, s);
    return denoise_from_neighbors(gather_columns(X, knn(X, x, spec.k)), x, d, s, lambda, settings);
}

double metric_fe(const Matrix& denoised, const Matrix& truth) {
    require(denoised.rows() == truth.rows() && denoised.cols() == truth.cols(), "metric_fe: shape mismatch");
    require(truth.cols() > 0, "metric_fe: no samples");
    return (denoised - truth).colwise().squaredNorm().sum() / static_cast<double>(truth.cols());
}

double metric_te(const std::vector<Matrix>& estimates, const std::vector<Matrix>& truths) {
    require(estimates.size() == truths.size(), "metric_te: length mismatch");
    require(!truths.empty(), "metric_te: no samples");
    double total = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        require(estimates[i].rows() == truths[i].rows() && estimates[i].cols() == truths[i].cols(),
                "metric_te: projector shape mismatch");
        total += (estimates[i] - truths[i]).squaredNorm();
    }
    return total / static_cast<double>(truths.size());
}

}  // namespace sqmf
