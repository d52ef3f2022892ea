#include "sqmf/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sqmf {

void set_thread_count(int n) {
#ifdef _OPENMP
    if (n > 0) {
        omp_set_num_threads(n);
    } else {
        omp_set_num_threads(omp_get_num_procs());
    }
#else
    (void)n;
#endif
}

int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace omp {

ProjectionSweep project_all(const QuadraticModel& model, const Matrix& X, const SolverSettings& settings) {
    require(X.rows() == model.D(), "project_all: data dimension must match the model");
    settings.validate();
    const Eigen::Index n = X.cols();
    ProjectionSweep out;
    out.coords.resize(model.d(), n);
    out.values.resize(n);
    out.gradient_norms.resize(n);
    out.status.assign(static_cast<std::size_t>(n), PointStatus::converged);
#pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index i = 0; i < n; ++i) detail::project_one(model, X, settings, i, out);
    return out;
}

NeighborTable knn_all(const Matrix& points, const Matrix& queries, Eigen::Index k) {
    require(k >= 1, "knn: k must be >= 1");
    require(k <= points.cols(), "knn: k must not exceed the number of points");
    require(points.rows() == queries.rows(), "knn: query dimension must match the data");
    NeighborTable out(k, queries.cols());
#pragma omp parallel
    {
        std::vector<std::pair<double, Eigen::Index>> scratch;
#pragma omp for schedule(static)
        for (Eigen::Index q = 0; q < queries.cols(); ++q) {
            detail::knn_one(points, queries.col(q), k, scratch, out.col(q));
        }
    }
    return out;
}

}  // namespace omp

}  // namespace sqmf
