#pragma once

// Data-parallel sweeps. Every kernel has a serial reference in sqmf::serial and
// an OpenMP version in sqmf::omp with identical per-item arithmetic, so the two
// agree bit for bit at any thread count.

#include "sqmf/fitting.hpp"

#include <cstdint>
#include <vector>

namespace sqmf {

enum class PointStatus : std::uint8_t { converged = 0, iteration_limit = 1, stalled = 2, failed = 3 };

struct ProjectionSweep {
    Matrix coords;              ///< d x n solutions
    Vector values;              ///< f_lambda,i at the solutions
    Vector gradient_norms;
    std::vector<PointStatus> status;
};

/// Brute-force k nearest columns of `points` for each column of `queries`;
/// ties broken by lower index. Result is k x m.
using NeighborTable = Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic>;

namespace serial {
ProjectionSweep project_all(const QuadraticModel& model, const Matrix& X, const SolverSettings& settings);
NeighborTable knn_all(const Matrix& points, const Matrix& queries, Eigen::Index k);
}  // namespace serial

namespace omp {
ProjectionSweep project_all(const QuadraticModel& model, const Matrix& X, const SolverSettings& settings);
NeighborTable knn_all(const Matrix& points, const Matrix& queries, Eigen::Index k);
}  // namespace omp

/// Caps the OpenMP thread count; n <= 0 restores the runtime default.
void set_thread_count(int n);
int thread_count();

namespace detail {
PointStatus classify(const SolveResult& r);
void project_one(const QuadraticModel& model, const Matrix& X, const SolverSettings& settings,
                 Eigen::Index i, ProjectionSweep& out);
void knn_one(const Matrix& points, const Vector& query, Eigen::Index k,
             std::vector<std::pair<double, Eigen::Index>>& scratch, Eigen::Ref<Eigen::Matrix<Eigen::Index, Eigen::Dynamic, 1>> out);
}  // namespace detail

}  // namespace sqmf
