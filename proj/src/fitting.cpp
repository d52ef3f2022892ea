#include "sqmf/fitting.hpp"

#include "sqmf/kernels.hpp"

#include <cmath>
#include <string>

namespace sqmf {

namespace {

constexpr double kOrthoTol = 1e-10;

}  // namespace

QuadraticModel::QuadraticModel(Vector c, Matrix U, Matrix V, Matrix theta, double lambda)
    : c_(std::move(c)), U_(std::move(U)), V_(std::move(V)), theta_(std::move(theta)), lambda_(lambda) {
    const Eigen::Index D = c_.size();
    require(U_.rows() == D && V_.rows() == D, "model: U and V must have D rows");
    validate_dims(D, U_.cols(), V_.cols());
    require(theta_.rows() == packed_size(U_.cols()) && theta_.cols() == V_.cols(),
            "model: theta must be d(d+1)/2 x s");
    require(lambda_ >= 0.0, "model: lambda must be non-negative");
    require(c_.allFinite() && U_.allFinite() && V_.allFinite() && theta_.allFinite(),
            "model: parameters must be finite");
    const Eigen::Index d = U_.cols();
    const Eigen::Index s = V_.cols();
    require((U_.transpose() * U_ - Matrix::Identity(d, d)).norm() <= kOrthoTol, "model: U is not orthonormal");
    require((V_.transpose() * V_ - Matrix::Identity(s, s)).norm() <= kOrthoTol, "model: V is not orthonormal");
    require((U_.transpose() * V_).norm() <= kOrthoTol, "model: U and V are not orthogonal");
    form_ = std::make_shared<const QuadraticForm>(QuadraticForm::from_theta(theta_, d));
}

QuadraticModel QuadraticModel::from_state(const RegressionState& state, Eigen::Index d, double lambda) {
    return QuadraticModel(state.c, state.Q.leftCols(d), state.Q.rightCols(state.Q.cols() - d), state.theta,
                          lambda);
}

Matrix QuadraticModel::Q() const {
    Matrix q(D(), d() + s());
    q << U_, V_;
    return q;
}

RegressionState QuadraticModel::state() const {
    RegressionState st;
    st.c = c_;
    st.Q = Q();
    st.theta = theta_;
    return st;
}

Vector QuadraticModel::predict(const Vector& tau) const {
    require(tau.size() == d(), "predict: tau must have length d");
    return c_ + U_ * tau + V_ * form_->apply(tau, tau);
}

Matrix QuadraticModel::predict_all(const Matrix& coords) const {
    require(coords.rows() == d(), "predict_all: coordinates must have d rows");
    return (U_ * coords + V_ * (theta_.transpose() * psi_map(coords))).colwise() + c_;
}

ProjectionProblem QuadraticModel::problem_for(const Vector& x) const {
    require(x.size() == D(), "project: point must have length D");
    const Vector centered = x - c_;
    return ProjectionProblem(U_.transpose() * centered, V_.transpose() * centered, form_, lambda_);
}

void FitSettings::validate() const {
    regression.validate();
    solver.validate();
    require(max_outer_iters >= 1, "max_outer_iters must be >= 1");
    require(outer_tol >= 0.0, "outer_tol must be non-negative");
}

std::vector<double> FitReport::objective_trace() const {
    std::vector<double> out;
    out.reserve(2 * outer.size() + 1);
    out.push_back(initial_objective);
    for (const auto& step : outer) {
        out.push_back(step.after_regression);
        out.push_back(step.after_projection);
    }
    return out;
}

Matrix pca_coordinates(const Matrix& X, Eigen::Index d) {
    const Matrix basis = pca_basis(X, d);
    return basis.transpose() * (X.colwise() - X.rowwise().mean());
}

namespace {

void validate_fit_inputs(const Matrix& X, Eigen::Index d, Eigen::Index s, double lambda) {
    const Eigen::Index D = X.rows();
    const Eigen::Index n = X.cols();
    validate_dims(D, d, s);
    require(n >= d + s + 1, "fit: need n >= d + s + 1 samples (n = " + std::to_string(n) + ")");
    require(lambda >= 0.0, "fit: lambda must be non-negative");
    require(X.allFinite(), "fit: data contains non-finite values");
    require((X.colwise() - X.rowwise().mean()).squaredNorm() > 0.0, "fit: data has zero variance");
}

}  // namespace

FitResult fit_flat(const Matrix& X, Eigen::Index d, Eigen::Index s) {
    validate_fit_inputs(X, d, s, 0.0);
    const Matrix basis = pca_basis(X, d + s);
    const Vector mean = X.rowwise().mean();
    FitResult out;
    out.model = QuadraticModel(mean, basis.leftCols(d), basis.rightCols(s), Matrix::Zero(packed_size(d), s), 0.0);
    out.coords = basis.leftCols(d).transpose() * (X.colwise() - mean);
    const double value = objective(X, mean, basis, out.model.theta(), out.coords, 0.0);
    out.report.initial_objective = value;
    out.report.outer.push_back({value, value, value, 0, true});
    out.report.converged = true;
    return out;
}

FitResult fit(const Matrix& X, Eigen::Index d, Eigen::Index s, double lambda, const FitSettings& settings,
              const std::optional<FitStart>& start) {
    validate_fit_inputs(X, d, s, lambda);
    settings.validate();
    RegressionSettings reg = settings.regression;
    reg.lambda = lambda;

    FitResult out;
    FitReport& report = out.report;
    report.solver_method = settings.solver.method;

    std::optional<RegressionState> warm;
    Matrix coords;
    if (start) {
        require(start->model.D() == X.rows() && start->model.d() == d && start->model.s() == s,
                "fit: warm start model has wrong dimensions");
        require(start->coords.rows() == d && start->coords.cols() == X.cols(),
                "fit: warm start coordinates have wrong shape");
        coords = start->coords;
        warm = start->model.state();
        report.initial_objective = objective(X, warm->c, warm->Q, warm->theta, coords, lambda);
    } else {
        coords = pca_coordinates(X, d);
        // With Theta = 0 the regularizer vanishes: this is the affine PCA loss.
        report.initial_objective = (X.colwise() - X.rowwise().mean()).squaredNorm() - coords.squaredNorm();
        report.initial_objective = std::max(0.0, report.initial_objective);
    }

    const double scale = std::max(1.0, report.initial_objective);
    const double slack = 1e-8 * scale;
    double previous = report.initial_objective;
    RegressionResult rr;
    std::vector<PointStatus> last_status;
    for (int k = 0; k < settings.max_outer_iters; ++k) {
        rr = fit_regression(X, coords, s, reg, warm);
        warm = rr.state;
        out.model = QuadraticModel::from_state(rr.state, d, lambda);

        ProjectionSweep sweep = omp::project_all(out.model, X, settings.solver);
        if (settings.keep_best_tau) {
            for (Eigen::Index i = 0; i < X.cols(); ++i) {
                const ProjectionProblem p = out.model.problem_for(X.col(i));
                const Vector old_tau = coords.col(i);
                if (f_value(p, old_tau) < sweep.values(i)) sweep.coords.col(i) = old_tau;
            }
        }
        coords = std::move(sweep.coords);
        last_status = std::move(sweep.status);

        OuterStep step;
        step.after_regression = rr.state.objective;
        step.after_projection = objective(X, rr.state.c, rr.state.Q, rr.state.theta, coords, lambda);
        step.unregularized_after_projection =
            lambda == 0.0 ? step.after_projection : objective(X, rr.state.c, rr.state.Q, rr.state.theta, coords, 0.0);
        step.inner_iterations = rr.iterations;
        step.inner_converged = rr.converged;
        if (!std::isfinite(step.after_projection)) throw NumericalError("fit: non-finite objective");
        if (step.after_regression > previous + slack || step.after_projection > step.after_regression + slack) {
            report.non_monotone_steps.push_back(k);
        }
        report.outer.push_back(step);

        const double change = std::abs(step.after_projection - previous);
        previous = step.after_projection;
        if (change <= settings.outer_tol * report.initial_objective) {
            report.converged = true;
            break;
        }
    }

    // Final diagnostics at (model, coords).
    RegressionState final_state = out.model.state();
    report.stationarity = stationarity(X, final_state, coords, lambda);
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
        const ProjectionProblem p = out.model.problem_for(X.col(i));
        report.max_projection_gradient = std::max(report.max_projection_gradient, f_gradient(p, coords.col(i)).norm());
    }
    for (const PointStatus st : last_status) {
        if (st == PointStatus::stalled) ++report.stalled_points;
        if (st == PointStatus::failed) ++report.failed_points;
    }
    report.flags = rr.flags;
    if (!report.non_monotone_steps.empty()) report.flags.emplace_back("non_monotone_outer_steps");
    if (!report.converged) report.flags.emplace_back("outer_iteration_limit");
    if (report.stalled_points > 0) report.flags.emplace_back("projection_stalled");
    if (report.failed_points > 0) report.flags.emplace_back("projection_failed");
    out.coords = std::move(coords);
    return out;
}

Vector predict(const QuadraticModel& model, const Vector& tau) { return model.predict(tau); }

Projection project(const QuadraticModel& model, const Vector& x, const SolverSettings& settings) {
    const ProjectionProblem p = model.problem_for(x);
    Projection out;
    out.solve = solve(p, settings);
    out.tau = out.solve.tau;
    out.x_hat = model.predict(out.tau);
    return out;
}

}  // namespace sqmf
