#include "sqmf/kernels.hpp"

#include <algorithm>

namespace sqmf {

namespace detail {

PointStatus classify(const SolveResult& r) {
    if (r.failed) return PointStatus::failed;
    if (r.stalled) return PointStatus::stalled;
    if (!r.converged) return PointStatus::iteration_limit;
    return PointStatus::converged;
}

void project_one(const QuadraticModel& model, const Matrix& X, const SolverSettings& settings,
                 Eigen::Index i, ProjectionSweep& out) {
    const ProjectionProblem p = model.problem_for(X.col(i));
    const SolveResult r = solve(p, settings);
    out.coords.col(i) = r.tau;
    out.values(i) = f_value(p, r.tau);
    out.gradient_norms(i) = r.gradient_norm;
    out.status[static_cast<std::size_t>(i)] = classify(r);
}

void knn_one(const Matrix& points, const Vector& query, Eigen::Index k,
             std::vector<std::pair<double, Eigen::Index>>& scratch,
             Eigen::Ref<Eigen::Matrix<Eigen::Index, Eigen::Dynamic, 1>> out) {
    const Eigen::Index n = points.cols();
    scratch.resize(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        scratch[static_cast<std::size_t>(j)] = {(points.col(j) - query).squaredNorm(), j};
    }
    // Pairs compare by distance, then index: ties go to the lower index.
    std::partial_sort(scratch.begin(), scratch.begin() + k, scratch.end());
    for (Eigen::Index j = 0; j < k; ++j) out(j) = scratch[static_cast<std::size_t>(j)].second;
}

}  // namespace detail

namespace {

ProjectionSweep make_sweep(const QuadraticModel& model, Eigen::Index n) {
    ProjectionSweep out;
    out.coords.resize(model.d(), n);
    out.values.resize(n);
    out.gradient_norms.resize(n);
    out.status.assign(static_cast<std::size_t>(n), PointStatus::converged);
    return out;
}

void check_knn_args(const Matrix& points, const Matrix& queries, Eigen::Index k) {
    require(k >= 1, "knn: k must be >= 1");
    require(k <= points.cols(), "knn: k must not exceed the number of points");
    require(points.rows() == queries.rows(), "knn: query dimension must match the data");
}

}  // namespace

namespace serial {

ProjectionSweep project_all(const QuadraticModel& model, const Matrix& X, const SolverSettings& settings) {
    require(X.rows() == model.D(), "project_all: data dimension must match the model");
    settings.validate();
    ProjectionSweep out = make_sweep(model, X.cols());
    for (Eigen::Index i = 0; i < X.cols(); ++i) detail::project_one(model, X, settings, i, out);
    return out;
}

NeighborTable knn_all(const Matrix& points, const Matrix& queries, Eigen::Index k) {
    check_knn_args(points, queries, k);
    NeighborTable out(k, queries.cols());
    std::vector<std::pair<double, Eigen::Index>> scratch;
    for (Eigen::Index q = 0; q < queries.cols(); ++q) {
        detail::knn_one(points, queries.col(q), k, scratch, out.col(q));
    }
    return out;
}

}  // namespace serial

}  // namespace sqmf
