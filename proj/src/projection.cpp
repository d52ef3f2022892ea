#include "sqmf/projection.hpp"

#include <cmath>

namespace sqmf {

namespace {

constexpr int kMaxHalvings = 60;
constexpr double kDefiniteFloor = 1e-10;

// Residual of the stationarity equation that a failed line search can no
// longer resolve in double precision.
bool precision_limited(double gradient_norm, const Vector& tau, const Vector& phi) {
    return gradient_norm <= 1e-6 * (1.0 + tau.norm() + phi.norm());
}

struct Eval {
    Vector a;  // A(tau, tau)
    Matrix action;
};

Eval evaluate(const ProjectionProblem& p, const Vector& tau) {
    Eval e;
    e.action = p.form->action(tau);
    e.a = e.action * tau;
    return e;
}

}  // namespace

ProjectionProblem::ProjectionProblem(Vector phi_, Vector psi_,
                                     std::shared_ptr<const QuadraticForm> form_, double lambda_)
    : phi(std::move(phi_)), psi(std::move(psi_)), form(std::move(form_)), lambda(lambda_) {
    require(form != nullptr, "ProjectionProblem: form is required");
    require(phi.size() == form->d(), "ProjectionProblem: phi must have length d");
    require(psi.size() == form->s(), "ProjectionProblem: psi must have length s");
    require(lambda >= 0.0, "ProjectionProblem: lambda must be non-negative");
}

std::string to_string(SolverMethod method) {
    switch (method) {
        case SolverMethod::gradient: return "gradient";
        case SolverMethod::newton: return "newton";
        case SolverMethod::surrogate: return "surrogate";
    }
    return "unknown";
}

SolverMethod parse_solver_method(const std::string& name) {
    if (name == "gradient") return SolverMethod::gradient;
    if (name == "newton") return SolverMethod::newton;
    if (name == "surrogate") return SolverMethod::surrogate;
    throw ValidationError("unknown solver method '" + name + "' (expected gradient, newton or surrogate)");
}

void SolverSettings::validate() const {
    require(tol > 0.0, "solver tol must be positive");
    require(max_iters >= 1, "solver max_iters must be >= 1");
    require(mu0 > 0.0, "solver mu0 must be positive");
}

double f_value(const ProjectionProblem& p, const Vector& tau) {
    const Vector a = p.form->apply(tau, tau);
    return (p.phi - tau).squaredNorm() + (p.psi - a).squaredNorm() + p.lambda * a.squaredNorm();
}

Vector f_gradient(const ProjectionProblem& p, const Vector& tau) {
    const Eval e = evaluate(p, tau);
    return 2.0 * (tau - p.phi) + 4.0 * e.action.transpose() * ((1.0 + p.lambda) * e.a - p.psi);
}

Matrix f_hessian(const ProjectionProblem& p, const Vector& tau) {
    const Eval e = evaluate(p, tau);
    const double w = 1.0 + p.lambda;
    Matrix H = 8.0 * w * e.action.transpose() * e.action;
    H += 4.0 * p.form->adjoint(w * e.a - p.psi);
    H.diagonal().array() += 2.0;
    return 0.5 * (H + H.transpose());
}

double surrogate_value(const ProjectionProblem& p, const Vector& alpha, const Vector& beta) {
    const Vector a = p.form->apply(alpha, beta);
    return 0.5 * (p.phi - alpha).squaredNorm() + 0.5 * (p.phi - beta).squaredNorm() +
           (p.psi - a).squaredNorm() + p.lambda * a.squaredNorm();
}

SolveResult solve_gradient(const ProjectionProblem& p, const SolverSettings& settings) {
    settings.validate();
    SolveResult r;
    r.tau = p.phi;
    double f = f_value(p, r.tau);
    r.trace.push_back(f);
    for (int it = 0; it < settings.max_iters; ++it) {
        const Vector g = f_gradient(p, r.tau);
        r.gradient_norm = g.norm();
        if (!std::isfinite(r.gradient_norm)) {
            r.failed = true;
            return r;
        }
        if (r.gradient_norm <= settings.tol) {
            r.converged = true;
            return r;
        }
        double mu = settings.mu0;
        bool accepted = false;
        for (int h = 0; h <= kMaxHalvings; ++h, mu *= 0.5) {
            Vector candidate = r.tau - mu * g;
            const double fc = f_value(p, candidate);
            if (std::isfinite(fc) && fc < f) {
                r.tau = std::move(candidate);
                f = fc;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (precision_limited(r.gradient_norm, r.tau, p.phi)) {
                r.converged = true;
            } else {
                r.stalled = true;
            }
            return r;
        }
        r.trace.push_back(f);
        r.iterations = it + 1;
    }
    r.gradient_norm = f_gradient(p, r.tau).norm();
    r.converged = r.gradient_norm <= settings.tol;
    return r;
}

SolveResult solve_newton(const ProjectionProblem& p, const SolverSettings& settings) {
    settings.validate();
    SolveResult r;
    r.tau = p.phi;
    double f = f_value(p, r.tau);
    r.trace.push_back(f);
    for (int it = 0; it < settings.max_iters; ++it) {
        const Vector g = f_gradient(p, r.tau);
        r.gradient_norm = g.norm();
        if (!std::isfinite(r.gradient_norm)) {
            r.failed = true;
            return r;
        }
        if (r.gradient_norm <= settings.tol) {
            r.converged = true;
            return r;
        }
        Matrix H = f_hessian(p, r.tau);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(H, Eigen::EigenvaluesOnly);
        const double lowest = eig.eigenvalues()(0);
        if (!(lowest > kDefiniteFloor)) {
            // Levenberg damping: the first mu of the doubling sequence 1e-8 * 2^k
            // that lifts the spectrum above the floor.
            double mu = 1e-8;
            while (lowest + mu <= kDefiniteFloor) mu *= 2.0;
            H.diagonal().array() += mu;
        }
        Eigen::LLT<Matrix> llt(H);
        if (llt.info() != Eigen::Success) {
            r.failed = true;
            return r;
        }
        const Vector step = -llt.solve(g);
        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h <= kMaxHalvings; ++h, t *= 0.5) {
            Vector candidate = r.tau + t * step;
            const double fc = f_value(p, candidate);
            if (std::isfinite(fc) && fc < f) {
                r.tau = std::move(candidate);
                f = fc;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (precision_limited(r.gradient_norm, r.tau, p.phi)) {
                r.converged = true;
            } else {
                r.stalled = true;
            }
            return r;
        }
        r.trace.push_back(f);
        r.iterations = it + 1;
    }
    r.gradient_norm = f_gradient(p, r.tau).norm();
    r.converged = r.gradient_norm <= settings.tol;
    return r;
}

SolveResult solve_surrogate(const ProjectionProblem& p, const SolverSettings& settings,
                            bool keep_iterates) {
    settings.validate();
    const Eigen::Index d = p.d();
    const double w = 2.0 * (1.0 + p.lambda);
    const Matrix adj_psi2 = 2.0 * p.form->adjoint(p.psi);

    Matrix act(p.s(), d);
    Matrix system(d, d);
    Vector rhs(d);
    Eigen::LLT<Matrix> llt(d);
    auto half_step = [&](const Vector& other, Vector& out) {
        p.form->action_into(other, act);
        system.noalias() = w * act.transpose() * act;
        system.diagonal().array() += 1.0;
        llt.compute(system);
        if (llt.info() != Eigen::Success) return false;
        rhs = p.phi;
        rhs.noalias() += adj_psi2 * other;
        out = llt.solve(rhs);
        return out.allFinite();
    };

    SolveResult r;
    Vector alpha = p.phi;
    Vector beta = p.phi;
    r.trace.push_back(surrogate_value(p, alpha, beta));
    if (keep_iterates) r.surrogate_iterates.emplace_back(alpha, beta);
    Vector next_alpha(d), next_beta(d);
    for (int it = 0; it < settings.max_iters; ++it) {
        if (!half_step(beta, next_alpha) || !half_step(next_alpha, next_beta)) {
            r.failed = true;
            break;
        }
        const double shift = std::max({(next_alpha - alpha).norm(), (next_beta - beta).norm(),
                                       (next_alpha - next_beta).norm()});
        alpha = next_alpha;
        beta = next_beta;
        r.iterations = it + 1;
        r.trace.push_back(surrogate_value(p, alpha, beta));
        if (keep_iterates) r.surrogate_iterates.emplace_back(alpha, beta);
        if (shift <= settings.tol) {
            r.converged = true;
            break;
        }
    }
    r.tau = 0.5 * (alpha + beta);
    r.symmetry_gap = (alpha - beta).norm();
    r.gradient_norm = f_gradient(p, r.tau).norm();
    return r;
}

SolveResult solve(const ProjectionProblem& p, const SolverSettings& settings) {
    switch (settings.method) {
        case SolverMethod::gradient: return solve_gradient(p, settings);
        case SolverMethod::newton: return solve_newton(p, settings);
        case SolverMethod::surrogate: return solve_surrogate(p, settings);
    }
    throw ValidationError("unknown solver method");
}

ConvexityDiagnostics diagnostics(const ProjectionProblem& p, double gamma) {
    require(gamma > 0.0, "diagnostics: gamma must be positive");
    ConvexityDiagnostics out;
    const double s = static_cast<double>(p.s());
    const double b = p.form->max_slice_norm();
    const double psi_l1 = p.psi.lpNorm<1>();
    out.b_max = b;
    out.gamma = gamma;
    out.convexity_lhs = s * gamma * gamma * b * b + 0.5 * psi_l1 * b;
    out.convexity_satisfied = out.convexity_lhs <= 0.125;
    out.convexity_alt_lhs = s * gamma * gamma * b * b - 0.5 * psi_l1 * b;
    out.convexity_alt_satisfied = out.convexity_alt_lhs <= 0.125;

    Eigen::SelfAdjointEigenSolver<Matrix> adj(p.form->adjoint(p.psi), Eigen::EigenvaluesOnly);
    out.op_norm_adjoint_psi = adj.eigenvalues().cwiseAbs().maxCoeff();
    out.adjoint_small = out.op_norm_adjoint_psi < 1.0;
    if (out.op_norm_adjoint_psi < 0.5) {
        out.iterate_bound = p.phi.norm() / (1.0 - 2.0 * out.op_norm_adjoint_psi);
        out.radius_satisfied =
            b == 0.0 || *out.iterate_bound <= std::sqrt((1.0 + 4.0 * psi_l1 * b) / (8.0 * s * b * b));
    }

    const Matrix act = p.form->action(p.phi);
    const Matrix basin = 2.0 * act.transpose() * act + p.form->adjoint(act * p.phi - p.psi);
    Eigen::SelfAdjointEigenSolver<Matrix> be(0.5 * (basin + basin.transpose()), Eigen::EigenvaluesOnly);
    out.basin_sigma = be.eigenvalues().cwiseAbs().maxCoeff();
    out.in_basin = out.basin_sigma < 0.25;
    return out;
}

}  // namespace sqmf
