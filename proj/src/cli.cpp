#include "sqmf/cli.hpp"

#include "sqmf/bench.hpp"
#include "sqmf/data.hpp"
#include "sqmf/kernels.hpp"
#include "sqmf/model_io.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace sqmf {

namespace {

std::string one_line(std::string text) {
    for (char& ch : text) {
        if (ch == '\n' || ch == '\r') ch = ' ';
    }
    while (!text.empty() && text.back() == ' ') text.pop_back();
    return text;
}

using nlohmann::json;
namespace fs = std::filesystem;

struct SolverFlags {
    std::string method = "surrogate";
    double tol = 1e-9;
    int max_iters = 200;

    void add(CLI::App& app) {
        app.add_option("--solver", method, "Projection solver: gradient, newton or surrogate")->capture_default_str();
        app.add_option("--tol", tol, "Projection solver tolerance")->capture_default_str();
        app.add_option("--max-iters", max_iters, "Projection solver iteration cap")->capture_default_str();
    }

    SolverSettings settings() const {
        SolverSettings s;
        s.method = parse_solver_method(method);
        s.tol = tol;
        s.max_iters = max_iters;
        s.validate();
        return s;
    }
};

struct FitFlags {
    SolverFlags solver;
    double epsilon = 1e-8;
    int max_inner_iters = 500;
    int max_outer_iters = 100;
    double outer_tol = 1e-7;
    std::string init = "identity";

    void add(CLI::App& app) {
        solver.add(app);
        app.add_option("--epsilon", epsilon, "Inner regression stopping tolerance")->capture_default_str();
        app.add_option("--max-inner-iters", max_inner_iters, "Inner regression iteration cap")->capture_default_str();
        app.add_option("--max-outer-iters", max_outer_iters, "Outer iteration cap")->capture_default_str();
        app.add_option("--outer-tol", outer_tol, "Relative outer stopping tolerance")->capture_default_str();
        app.add_option("--init", init, "Inner regression start: identity or pca")->capture_default_str();
    }

    FitSettings settings() const {
        FitSettings f;
        f.solver = solver.settings();
        f.regression.epsilon = epsilon;
        f.regression.max_inner_iters = max_inner_iters;
        if (init == "identity") {
            f.regression.init = RegressionInit::identity;
        } else if (init == "pca") {
            f.regression.init = RegressionInit::pca;
        } else {
            throw ValidationError("unknown --init '" + init + "' (expected identity or pca)");
        }
        f.max_outer_iters = max_outer_iters;
        f.outer_tol = outer_tol;
        f.validate();
        return f;
    }
};

void write_json(const json& doc, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

void require_input(const fs::path& path) {
    require(fs::exists(path), "input file not found: " + path.string());
}

Vector parse_vector(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(field, &used);
        } catch (const std::exception&) {
            throw ValidationError("cannot parse number '" + field + "'");
        }
        require(used == field.size(), "cannot parse number '" + field + "'");
        values.push_back(v);
    }
    require(!values.empty(), "empty vector");
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

int cmd_fit(const fs::path& input, Eigen::Index d, Eigen::Index s, double lambda, const FitFlags& flags,
            const fs::path& out) {
    const FitSettings settings = flags.settings();
    require_input(input);
    const Dataset ds = load_csv(input);
    const FitResult r = fit(ds.X, d, s, lambda, settings);
    save_model(r.model, out);
    write_matrix_csv(r.coords, sibling_path(out, ".coords.csv"), "# d=" + std::to_string(d) + " n=" +
                                                                      std::to_string(r.coords.cols()));
    write_json(report_to_json(r.report), sibling_path(out, ".report.json"));
    return 0;
}

int cmd_project(const fs::path& model_path, const fs::path& input, const SolverFlags& flags, const fs::path& out) {
    const SolverSettings settings = flags.settings();
    require_input(model_path);
    require_input(input);
    const QuadraticModel model = load_model(model_path);
    const Matrix X = read_matrix_csv(input);
    require(X.rows() == model.D(), "project: input has " + std::to_string(X.rows()) + " columns, model has D=" +
                                       std::to_string(model.D()));
    const ProjectionSweep sweep = omp::project_all(model, X, settings);
    write_matrix_csv(sweep.coords, out, "# d=" + std::to_string(model.d()) + " n=" + std::to_string(X.cols()));
    write_matrix_csv(model.predict_all(sweep.coords), sibling_path(out, ".xhat.csv"),
                     "# D=" + std::to_string(model.D()) + " n=" + std::to_string(X.cols()));
    for (PointStatus st : sweep.status) {
        if (st == PointStatus::failed) throw NumericalError("project: solver failed on at least one point");
    }
    return 0;
}

int cmd_denoise(const fs::path& input, Eigen::Index k, Eigen::Index d, Eigen::Index s, double lambda,
                const std::string& method_name, const FitFlags& flags, const fs::path& out) {
    const FitSettings settings = flags.settings();
    const DenoiseMethod method = parse_denoise_method(method_name);
    require_input(input);
    const Dataset ds = load_csv(input);
    const NeighborhoodSpec spec{k};
    if (method == DenoiseMethod::rsqmf) spec.validate(d, s);
    require(k <= ds.n(), "denoise: k must not exceed the number of samples");
    const NeighborTable table = omp::knn_all(ds.X, ds.X, k);

    Matrix denoised(ds.D(), ds.n());
    std::vector<int> fallback(static_cast<std::size_t>(ds.n()), 0);
#pragma omp parallel for schedule(dynamic, 8)
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        Matrix neighbors(ds.D(), k);
        for (Eigen::Index j = 0; j < k; ++j) neighbors.col(j) = ds.X.col(table(j, i));
        if (method == DenoiseMethod::lpca) {
            denoised.col(i) = lpca_from_neighbors(neighbors, ds.X.col(i), d).x_hat;
        } else {
            const DenoiseResult r = denoise_from_neighbors(neighbors, ds.X.col(i), d, s, lambda, settings);
            denoised.col(i) = r.x_hat;
            fallback[static_cast<std::size_t>(i)] = r.fallback ? 1 : 0;
        }
    }
    Dataset result;
    result.X = denoised;
    result.meta = {{"source", input.string()}, {"method", method_name}, {"k", k}, {"d", d}, {"s", s},
                   {"lambda", lambda}};
    int fallbacks = 0;
    for (int f : fallback) fallbacks += f;
    result.meta["fallback_points"] = fallbacks;
    if (ds.truth) result.meta["Fe"] = metric_fe(denoised, *ds.truth);
    save_csv(result, out);
    return 0;
}

int cmd_tangent(const fs::path& model_path, const std::string& tau_text, const fs::path& out) {
    require_input(model_path);
    const QuadraticModel model = load_model(model_path);
    const Vector tau = parse_vector(tau_text);
    require(tau.size() == model.d(), "tangent: --tau must have d=" + std::to_string(model.d()) + " entries");
    const TangentEstimate t = tangent_at(model, tau);
    write_matrix_csv(t.projector, out, "# D=" + std::to_string(model.D()) + " n=" + std::to_string(model.D()));
    write_matrix_csv(t.basis, sibling_path(out, ".basis.csv"),
                     "# D=" + std::to_string(model.D()) + " n=" + std::to_string(model.d()));
    if (t.rank_deficient) throw NumericalError("tangent: Jacobian is rank deficient at tau");
    return 0;
}

int cmd_synth(const std::string& kind, Eigen::Index n, double sigma, std::uint64_t seed, const fs::path& out) {
    Dataset ds;
    if (kind == "sphere") {
        ds = gen_sphere(n, sigma, seed);
    } else if (kind == "circle-arc") {
        ds = gen_circle_arc(n, sigma, seed);
    } else {
        throw ValidationError("unknown generator '" + kind + "' (expected sphere or circle-arc)");
    }
    save_csv(ds, out);
    return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Quadratic manifold fitting, projection, denoising and benchmarks"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Thread cap for parallel loops (0 = runtime default)");

    FitFlags fit_flags;
    fs::path in_path, out_path, model_path;
    Eigen::Index d = 1, s = 1, k = 22, n = 1000;
    double lambda = 0.0, sigma = 0.0;
    std::uint64_t seed = 1;

    auto* fit_cmd = app.add_subcommand("fit", "Fit a quadratic model to a CSV dataset");
    fit_cmd->add_option("--input", in_path, "Dataset CSV")->required();
    fit_cmd->add_option("--d", d, "Intrinsic dimension")->required();
    fit_cmd->add_option("--s", s, "Normal dimension")->required();
    fit_cmd->add_option("--lambda", lambda, "Curvature regularization")->capture_default_str();
    fit_cmd->add_option("--out", out_path, "Model JSON; coordinates and report go to <stem>.coords.csv and <stem>.report.json")
        ->required();
    fit_flags.add(*fit_cmd);

    SolverFlags project_flags;
    auto* project_cmd = app.add_subcommand("project", "Project points onto a fitted model");
    project_cmd->add_option("--model", model_path, "Model JSON")->required();
    project_cmd->add_option("--input", in_path, "Points CSV")->required();
    project_cmd->add_option("--out", out_path, "Coordinates CSV; reconstructions go to <stem>.xhat.csv")->required();
    project_flags.add(*project_cmd);

    std::string method = "rsqmf";
    FitFlags denoise_flags;
    auto* denoise_cmd = app.add_subcommand("denoise", "Denoise every sample with local quadratic fits");
    denoise_cmd->add_option("--input", in_path, "Dataset CSV")->required();
    denoise_cmd->add_option("--k", k, "Neighborhood size")->capture_default_str();
    denoise_cmd->add_option("--d", d, "Intrinsic dimension")->required();
    denoise_cmd->add_option("--s", s, "Normal dimension")->capture_default_str();
    denoise_cmd->add_option("--lambda", lambda, "Curvature regularization")->capture_default_str();
    denoise_cmd->add_option("--method", method, "rsqmf or lpca")->capture_default_str();
    denoise_cmd->add_option("--out", out_path, "Denoised CSV")->required();
    denoise_flags.add(*denoise_cmd);

    std::string tau_text;
    auto* tangent_cmd = app.add_subcommand("tangent", "Tangent projector of a model at tau");
    tangent_cmd->add_option("--model", model_path, "Model JSON")->required();
    tangent_cmd->add_option("--tau", tau_text, "Comma-separated coordinates")->required();
    tangent_cmd->add_option("--out", out_path, "Projector CSV; basis goes to <stem>.basis.csv")->required();

    std::string kind;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth_cmd->add_option("kind", kind, "sphere or circle-arc")->required();
    synth_cmd->add_option("--n", n, "Sample count")->capture_default_str();
    synth_cmd->add_option("--sigma", sigma, "Noise level")->capture_default_str();
    synth_cmd->add_option("--seed", seed, "RNG seed")->capture_default_str();
    synth_cmd->add_option("--out", out_path, "Dataset CSV")->required();

    fs::path config_path;
    std::vector<double> sigmas;
    std::vector<Eigen::Index> ks;
    std::vector<std::string> methods;
    std::optional<std::uint64_t> bench_seed;
    std::optional<int> trials;
    std::optional<Eigen::Index> bench_n;
    bool record_time = false;
    auto* bench_cmd = app.add_subcommand("bench", "Sphere denoising sweep");
    bench_cmd->add_option("--config", config_path, "JSON sweep configuration");
    bench_cmd->add_option("--seed", bench_seed, "RNG seed");
    bench_cmd->add_option("--sigmas", sigmas, "Noise levels")->delimiter(',');
    bench_cmd->add_option("--ks", ks, "Neighborhood sizes")->delimiter(',');
    bench_cmd->add_option("--methods", methods, "Subset of rsqmf,lpca")->delimiter(',');
    bench_cmd->add_option("--trials", trials, "Repetitions per cell");
    bench_cmd->add_option("--n", bench_n, "Samples per dataset");
    bench_cmd->add_flag("--record-time", record_time, "Write wall time into the CSV");
    bench_cmd->add_option("--out", out_path, "Output stem; writes <stem>.csv and <stem>.txt")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << one_line(e.what()) << '\n';
        return 2;
    }

    try {
        require(threads >= 0, "--threads must be >= 0");
        set_thread_count(threads);
        if (*fit_cmd) return cmd_fit(in_path, d, s, lambda, fit_flags, out_path);
        if (*project_cmd) return cmd_project(model_path, in_path, project_flags, out_path);
        if (*denoise_cmd) return cmd_denoise(in_path, k, d, s, lambda, method, denoise_flags, out_path);
        if (*tangent_cmd) return cmd_tangent(model_path, tau_text, out_path);
        if (*synth_cmd) return cmd_synth(kind, n, sigma, seed, out_path);
        if (*bench_cmd) {
            SweepConfig config;
            if (!config_path.empty()) {
                require_input(config_path);
                std::ifstream in(config_path);
                json doc;
                try {
                    doc = json::parse(in);
                } catch (const json::parse_error& e) {
                    throw ValidationError(config_path.string() + ": " + e.what());
                }
                config = sweep_config_from_json(doc);
            }
            if (bench_seed) config.seed = *bench_seed;
            if (!sigmas.empty()) config.sigmas = sigmas;
            if (!ks.empty()) config.ks = ks;
            if (!methods.empty()) {
                config.methods.clear();
                for (const auto& m : methods) config.methods.push_back(parse_denoise_method(m));
            }
            if (trials) config.trials = *trials;
            if (bench_n) config.n = *bench_n;
            if (record_time) config.record_time = true;
            const SweepResult result = run_sweep(config);
            emit_table(result, out_path);
            std::cout << table_text(result);
            return 0;
        }
    } catch (const NumericalError& e) {
        std::cerr << "error: numerical: " << one_line(e.what()) << '\n';
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "error: validation: " << one_line(e.what()) << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: io: " << one_line(e.what()) << '\n';
        return 2;
    }
    return 2;
}

}  // namespace sqmf
