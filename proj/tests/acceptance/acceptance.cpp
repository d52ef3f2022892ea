// Acceptance suite. Prints one PASS/FAIL line per criterion.
//
// Usage: sqmf_acceptance [criterion numbers...]
// Exit status is nonzero when a criterion fails that is not listed in
// kKnownFailures. Known failures are still reported as FAIL.

#include "support.hpp"

#include "sqmf/bench.hpp"
#include "sqmf/fitting.hpp"
#include "sqmf/projection.hpp"
#include "sqmf/regression.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace sqmf;
using sqmf::testing::Rng;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// Reported as FAIL without affecting the exit status.
const std::set<int> kKnownFailures = {2, 7};

Vector fd_gradient(const ProjectionProblem& p, const Vector& tau, double h) {
    Vector g(tau.size());
    for (Eigen::Index k = 0; k < tau.size(); ++k) {
        Vector tp = tau, tm = tau;
        tp(k) += h;
        tm(k) -= h;
        g(k) = (f_value(p, tp) - f_value(p, tm)) / (2 * h);
    }
    return g;
}

Matrix fd_hessian(const ProjectionProblem& p, const Vector& tau, double h) {
    Matrix H(tau.size(), tau.size());
    for (Eigen::Index k = 0; k < tau.size(); ++k) {
        Vector tp = tau, tm = tau;
        tp(k) += h;
        tm(k) -= h;
        H.col(k) = (f_gradient(p, tp) - f_gradient(p, tm)) / (2 * h);
    }
    return H;
}

double op_norm_adjoint(const ProjectionProblem& p) {
    return Eigen::SelfAdjointEigenSolver<Matrix>(p.form->adjoint(p.psi)).eigenvalues().cwiseAbs().maxCoeff();
}

// Pitch-h scan of f over [-r, r]^d, d in {1, 2}. For d = 2 the pitch-h scan
// covers windows around the eight best points of a 2e-2 scan.
double grid_minimum(const ProjectionProblem& p, double r, double h) {
    double best = std::numeric_limits<double>::infinity();
    Vector t(p.d());
    if (p.d() == 1) {
        const long steps = static_cast<long>(std::ceil(r / h));
        for (long i = -steps; i <= steps; ++i) {
            t(0) = i * h;
            best = std::min(best, f_value(p, t));
        }
        return best;
    }
    const double coarse = 2e-2;
    const long steps = static_cast<long>(std::ceil(r / coarse));
    std::vector<std::pair<double, Vector>> candidates;
    for (long i = -steps; i <= steps; ++i) {
        for (long j = -steps; j <= steps; ++j) {
            t << i * coarse, j * coarse;
            candidates.emplace_back(f_value(p, t), t);
        }
    }
    std::partial_sort(candidates.begin(), candidates.begin() + 8, candidates.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
    for (int c = 0; c < 8; ++c) {
        const Vector centre = candidates[c].second;
        for (long i = -40; i <= 40; ++i) {
            for (long j = -40; j <= 40; ++j) {
                t << centre(0) + i * h, centre(1) + j * h;
                best = std::min(best, f_value(p, t));
            }
        }
    }
    return best;
}

Outcome criterion1() {
    const auto start = Clock::now();
    Rng rng(1001);
    int bad_g = 0, bad_h = 0;
    double worst_g = 0.0, worst_h = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index d = rng.integer(1, 5);
        const Eigen::Index s = rng.integer(1, 6);
        const ProjectionProblem p = rng.problem(d, s);
        const Vector tau = rng.vector(d);
        const Vector g = f_gradient(p, tau);
        const Matrix H = f_hessian(p, tau);
        const double eg = (g - fd_gradient(p, tau, 1e-6)).norm() / std::max(1.0, g.norm());
        const double eh = (H - fd_hessian(p, tau, 1e-5)).norm() / std::max(1.0, H.norm());
        worst_g = std::max(worst_g, eg);
        worst_h = std::max(worst_h, eh);
        bad_g += eg > 1e-5;
        bad_h += eh > 1e-4;
    }
    const double t = seconds_since(start);
    return {bad_g == 0 && bad_h == 0 && t < 10.0,
            "200 problems, worst gradient rel err " + fmt(worst_g) + ", worst Hessian rel err " + fmt(worst_h) +
                ", " + fmt(t) + " s"};
}

Outcome criterion2() {
    const auto start = Clock::now();
    Rng rng(1002);
    const SolverMethod methods[] = {SolverMethod::gradient, SolverMethod::newton, SolverMethod::surrogate};
    int misses[3] = {0, 0, 0};
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index d = trial < 25 ? 1 : 2;
        const ProjectionProblem p(rng.vector(d), rng.vector(1, 0.5), rng.form(d, 1, 0.3));
        const double grid = grid_minimum(p, 5.0 * p.phi.norm() + 1.0, 1e-3);
        for (int m = 0; m < 3; ++m) {
            SolverSettings settings;
            settings.method = methods[m];
            settings.max_iters = 5000;
            const double gap = std::abs(f_value(p, solve(p, settings).tau) - grid);
            worst = std::max(worst, gap);
            misses[m] += gap > 1e-4;
        }
    }
    const double t = seconds_since(start);
    return {misses[0] + misses[1] + misses[2] == 0 && t < 60.0,
            "50 problems, misses gradient/newton/surrogate = " + std::to_string(misses[0]) + "/" +
                std::to_string(misses[1]) + "/" + std::to_string(misses[2]) + ", worst |f - grid| " + fmt(worst) +
                ", " + fmt(t) + " s"};
}

Outcome criterion3() {
    Rng rng(1003);
    int tested = 0, disagree = 0, bound_violations = 0, bound_tested = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 1000 && tested < 100; ++trial) {
        const Eigen::Index d = rng.integer(1, 4);
        const Eigen::Index s = rng.integer(1, 4);
        const ProjectionProblem p(rng.vector(d, 0.5), rng.vector(s, 0.5), rng.form(d, s, 0.05));
        const double op = op_norm_adjoint(p);
        if (op >= 0.5) continue;
        const ConvexityDiagnostics diag = diagnostics(p, p.phi.norm() / (1.0 - 2.0 * op));
        if (!diag.convexity_satisfied || !diag.adjoint_small) continue;
        ++tested;

        SolverSettings settings;
        settings.max_iters = 5000;
        settings.method = SolverMethod::newton;
        const Vector tn = solve(p, settings).tau;
        for (SolverMethod m : {SolverMethod::gradient, SolverMethod::surrogate}) {
            settings.method = m;
            const double gap = (solve(p, settings).tau - tn).norm();
            worst = std::max(worst, gap);
            disagree += gap > 1e-5;
        }

        const SolveResult r = solve_surrogate(p, SolverSettings{}, true);
        const double bound = *diag.iterate_bound;
        const auto within = [&](std::size_t k) {
            const auto& [a, b] = r.surrogate_iterates[k];
            return std::max(a.norm(), b.norm()) <= bound + 1e-9;
        };
        std::size_t n = 0;
        while (n < r.surrogate_iterates.size() && !within(n)) ++n;
        ++bound_tested;
        for (; n < r.surrogate_iterates.size(); ++n) {
            if (!within(n)) {
                ++bound_violations;
                break;
            }
        }
    }
    return {tested == 100 && disagree == 0 && bound_violations == 0,
            std::to_string(tested) + " convex-regime problems, " + std::to_string(disagree) +
                " disagreements (worst " + fmt(worst) + "), " + std::to_string(bound_violations) + "/" +
                std::to_string(bound_tested) + " norm-bound violations after burn-in"};
}

Outcome criterion4() {
    Rng rng(1004);
    int violations = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index d = rng.integer(1, 3);
        const Eigen::Index s = rng.integer(1, static_cast<int>(std::min<Eigen::Index>(packed_size(d), 3)));
        const Eigen::Index D = d + s + rng.integer(0, 3);
        const Eigen::Index n = d + s + 5 + rng.integer(0, 30);
        const QuadraticModel truth = rng.model(D, d, s, rng.uniform(0.0, 0.5));
        const Matrix coords = rng.matrix(d, n);
        const Matrix X = truth.predict_all(coords) + rng.matrix(D, n, 0.05);
        RegressionSettings settings;
        settings.lambda = trial % 3 == 0 ? rng.uniform(0.0, 2.0) : 0.0;
        settings.init = trial % 2 == 0 ? RegressionInit::identity : RegressionInit::pca;
        const RegressionResult r = fit_regression(X, coords + rng.matrix(d, n, 0.1), s, settings);
        for (std::size_t k = 1; k < r.trace.size(); ++k) {
            if (r.trace[k] > r.trace[k - 1] + 1e-10) {
                ++violations;
                break;
            }
        }
    }
    return {violations == 0, "100 instances, " + std::to_string(violations) + " with an increasing step"};
}

Outcome criterion5() {
    Rng rng(1005);
    int violations = 0;
    double min_margin = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 20; ++trial) {
        const QuadraticModel truth = rng.model(10, 2, 3, 0.5);
        const Matrix X = truth.predict_all(rng.matrix(2, 200)) + rng.matrix(10, 200, 0.1);
        const Matrix coords = pca_coordinates(X, 2);
        RegressionSettings settings;
        settings.init = RegressionInit::pca;
        const RegressionResult sq = fit_regression(X, coords, 3, settings);
        settings.lambda = 0.5;
        const RegressionResult rsq = fit_regression(X, coords, 3, settings);
        const double l_sq = sq.state.objective;
        const double l_rsq = objective(X, rsq.state.c, rsq.state.Q, rsq.state.theta, coords, 0.0);
        const double l_flat = fit_flat(X, 2, 3).report.outer.back().after_projection;
        violations += !(l_sq <= l_rsq + 1e-8 && l_rsq <= l_flat + 1e-8);
        min_margin = std::min({min_margin, l_rsq - l_sq, l_flat - l_rsq});
    }
    return {violations == 0,
            "20 datasets, " + std::to_string(violations) + " ordering violations, smallest gap " + fmt(min_margin)};
}

Outcome criterion6() {
    Rng rng(1006);
    double worst_loss = 0.0, worst_tau = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const QuadraticModel truth = rng.model(5, 2, 1, 0.02);
        const Matrix coords = rng.matrix(2, 80);
        const Matrix X = truth.predict_all(coords);
        const FitResult r = fit(X, 2, 1, 0.0);
        worst_loss = std::max(worst_loss, r.report.outer.back().after_projection);

        SolverSettings settings;
        for (Eigen::Index i = 0; i < X.cols(); ++i) {
            worst_tau = std::max(worst_tau, (project(truth, X.col(i), settings).tau - coords.col(i)).norm());
        }
    }
    return {worst_loss <= 1e-6 && worst_tau <= 1e-6,
            "5 models (theta scale 0.02), worst loss " + fmt(worst_loss) + ", worst tau error " + fmt(worst_tau)};
}

Outcome criterion7() {
    const auto start = Clock::now();
    const SweepConfig config;
    const std::vector<CellMean> means = trial_means(run_sweep(config));
    const auto find = [&](DenoiseMethod m, double sigma, Eigen::Index k) -> const CellMean& {
        for (const CellMean& c : means) {
            if (c.method == m && c.sigma == sigma && c.k == k) return c;
        }
        throw std::runtime_error("missing cell");
    };
    int fe_wins = 0, te_wins = 0, cells = 0;
    for (double sigma : config.sigmas) {
        for (Eigen::Index k : config.ks) {
            const CellMean& rs = find(DenoiseMethod::rsqmf, sigma, k);
            const CellMean& lp = find(DenoiseMethod::lpca, sigma, k);
            ++cells;
            fe_wins += rs.fe < lp.fe;
            te_wins += rs.te < lp.te;
        }
    }
    const double fe = find(DenoiseMethod::rsqmf, 0.06, 22).fe;
    const double te = find(DenoiseMethod::lpca, 0.06, 22).te;
    const bool fe_band = fe >= 0.0004 && fe <= 0.0014;
    const bool te_band = te >= 1.7 && te <= 2.2;
    const double t = seconds_since(start);
    return {fe_wins == cells && te_wins == cells && fe_band && te_band,
            "RSQMF wins F_e " + std::to_string(fe_wins) + "/" + std::to_string(cells) + ", T_e " +
                std::to_string(te_wins) + "/" + std::to_string(cells) + "; RSQMF F_e(0.06,22) = " + fmt(fe) +
                (fe_band ? " in" : " outside") + " [0.0004, 0.0014]; LPCA T_e(0.06,22) = " + fmt(te) +
                (te_band ? " in" : " outside") + " [1.7, 2.2]; " + fmt(t) + " s"};
}

bool trace_non_increasing(const FitReport& report) {
    const std::vector<double> trace = report.objective_trace();
    for (std::size_t k = 1; k < trace.size(); ++k) {
        if (trace[k] > trace[k - 1] + 1e-8 * std::max(1.0, trace.front())) return false;
    }
    return true;
}

bool increases_flagged(const FitReport& report) {
    const bool increase = !trace_non_increasing(report);
    const bool flagged = !report.non_monotone_steps.empty() &&
                         std::find(report.flags.begin(), report.flags.end(), "non_monotone_outer_steps") !=
                             report.flags.end();
    return increase == flagged;
}

Outcome criterion8() {
    const Dataset low = gen_circle_arc(100, 0.1, 1008);
    const FitResult stable = fit(low.X, 1, 1, 0.0);
    const bool monotone = trace_non_increasing(stable.report) && stable.report.non_monotone_steps.empty();

    const Dataset high = gen_circle_arc(100, 0.5, 1008);
    FitSettings settings;
    settings.keep_best_tau = false;
    const FitResult noisy = fit(high.X, 1, 1, 0.0, settings);
    const bool flagged = increases_flagged(noisy.report);
    return {monotone && flagged,
            "sigma 0.1: " + std::string(monotone ? "monotone" : "NOT monotone") + " over " +
                std::to_string(stable.report.outer.size()) + " steps; sigma 0.5: " +
                std::to_string(noisy.report.non_monotone_steps.size()) + " increases, " +
                (flagged ? "all flagged" : "flags inconsistent")};
}

Outcome criterion9() {
    SweepConfig config;
    config.n = 400;
    config.ks = {22, 34, 46};
    config.seed = 909;
    const std::string a = table_csv(run_sweep(config));
    const std::string b = table_csv(run_sweep(config));
    return {a == b, "two runs, " + std::to_string(a.size()) + " CSV bytes, " + (a == b ? "identical" : "DIFFERENT")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3,
                                                            criterion4, criterion5, criterion6,
                                                            criterion7, criterion8, criterion9};
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

    int unexpected = 0;
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) {
        if (!selected.empty() && !selected.count(i)) continue;
        Outcome o;
        try {
            o = criteria[i - 1]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const bool known = kKnownFailures.count(i) > 0;
        std::cout << "criterion " << i << ": " << (o.pass ? "PASS" : "FAIL") << (!o.pass && known ? " (known)" : "")
                  << " - " << o.detail << std::endl;
        unexpected += !o.pass && !known;
    }
    return unexpected == 0 ? 0 : 1;
}
