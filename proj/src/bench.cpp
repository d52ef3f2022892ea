#include "sqmf/bench.hpp"

#include "sqmf/data.hpp"
#include "sqmf/kernels.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <tuple>

namespace sqmf {

using nlohmann::json;

std::string to_string(DenoiseMethod m) { return m == DenoiseMethod::rsqmf ? "rsqmf" : "lpca"; }

DenoiseMethod parse_denoise_method(const std::string& name) {
    if (name == "rsqmf") return DenoiseMethod::rsqmf;
    if (name == "lpca") return DenoiseMethod::lpca;
    throw ValidationError("unknown method '" + name + "' (expected rsqmf or lpca)");
}

void SweepConfig::validate() const {
    require(!sigmas.empty(), "sweep: sigmas must not be empty");
    require(!ks.empty(), "sweep: ks must not be empty");
    require(!methods.empty(), "sweep: methods must not be empty");
    for (double sg : sigmas) require(sg >= 0.0 && std::isfinite(sg), "sweep: sigmas must be non-negative");
    require(d >= 1 && s >= 1 && d + s <= 3, "sweep: sphere data needs d >= 1, s >= 1, d + s <= 3");
    for (Eigen::Index k : ks) {
        require(k >= d + s + 1, "sweep: every K must be >= d + s + 1");
        require(k <= n, "sweep: every K must be <= n");
    }
    require(n >= 1, "sweep: n must be positive");
    require(lambda >= 0.0, "sweep: lambda must be non-negative");
    require(trials >= 1, "sweep: trials must be >= 1");
    fit.validate();
}

namespace {

template <class T>
T get_field(const json& doc, const char* key) {
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("sweep config: bad value for '") + key + "'");
    }
}

}  // namespace

SweepConfig sweep_config_from_json(const json& doc) {
    require(doc.is_object(), "sweep config: document must be a JSON object");
    static const std::vector<std::string> known{
        "sigmas",  "ks",     "n",    "d",        "s",           "lambda",          "methods",   "seed",
        "trials",  "solver", "tol",  "max_iters", "max_outer_iters", "outer_tol", "epsilon",
        "max_inner_iters", "record_time"};
    for (const auto& item : doc.items()) {
        require(std::find(known.begin(), known.end(), item.key()) != known.end(),
                "sweep config: unknown key '" + item.key() + "'");
    }
    SweepConfig c;
    if (doc.contains("sigmas")) c.sigmas = get_field<std::vector<double>>(doc, "sigmas");
    if (doc.contains("ks")) c.ks = get_field<std::vector<Eigen::Index>>(doc, "ks");
    if (doc.contains("n")) c.n = get_field<Eigen::Index>(doc, "n");
    if (doc.contains("d")) c.d = get_field<Eigen::Index>(doc, "d");
    if (doc.contains("s")) c.s = get_field<Eigen::Index>(doc, "s");
    if (doc.contains("lambda")) c.lambda = get_field<double>(doc, "lambda");
    if (doc.contains("methods")) {
        c.methods.clear();
        for (const auto& m : get_field<std::vector<std::string>>(doc, "methods")) {
            c.methods.push_back(parse_denoise_method(m));
        }
    }
    if (doc.contains("seed")) c.seed = get_field<std::uint64_t>(doc, "seed");
    if (doc.contains("trials")) c.trials = get_field<int>(doc, "trials");
    if (doc.contains("solver")) c.fit.solver.method = parse_solver_method(get_field<std::string>(doc, "solver"));
    if (doc.contains("tol")) c.fit.solver.tol = get_field<double>(doc, "tol");
    if (doc.contains("max_iters")) c.fit.solver.max_iters = get_field<int>(doc, "max_iters");
    if (doc.contains("max_outer_iters")) c.fit.max_outer_iters = get_field<int>(doc, "max_outer_iters");
    if (doc.contains("outer_tol")) c.fit.outer_tol = get_field<double>(doc, "outer_tol");
    if (doc.contains("epsilon")) c.fit.regression.epsilon = get_field<double>(doc, "epsilon");
    if (doc.contains("max_inner_iters")) c.fit.regression.max_inner_iters = get_field<int>(doc, "max_inner_iters");
    if (doc.contains("record_time")) c.record_time = get_field<bool>(doc, "record_time");
    c.validate();
    return c;
}

json sweep_config_to_json(const SweepConfig& c) {
    json methods = json::array();
    for (auto m : c.methods) methods.push_back(to_string(m));
    return {{"sigmas", c.sigmas},
            {"ks", c.ks},
            {"n", c.n},
            {"d", c.d},
            {"s", c.s},
            {"lambda", c.lambda},
            {"methods", methods},
            {"seed", c.seed},
            {"trials", c.trials},
            {"solver", to_string(c.fit.solver.method)},
            {"tol", c.fit.solver.tol},
            {"max_iters", c.fit.solver.max_iters},
            {"max_outer_iters", c.fit.max_outer_iters},
            {"outer_tol", c.fit.outer_tol},
            {"epsilon", c.fit.regression.epsilon},
            {"max_inner_iters", c.fit.regression.max_inner_iters},
            {"record_time", c.record_time}};
}

std::uint64_t cell_seed(std::uint64_t seed, std::size_t sigma_index, int trial) {
    return derive_seed(seed, static_cast<std::uint64_t>(sigma_index), static_cast<std::uint64_t>(trial));
}

namespace {

std::string join_flags(const std::map<std::string, int>& counts) {
    std::string out;
    for (const auto& [name, count] : counts) {
        if (!out.empty()) out += ';';
        out += name + '=' + std::to_string(count);
    }
    return out;
}

SweepRow run_cell(const Dataset& ds, const NeighborTable& table, Eigen::Index k, DenoiseMethod method,
                  const SweepConfig& config) {
    const Eigen::Index n = ds.n();
    Matrix denoised(ds.D(), n);
    std::vector<Matrix> projectors(static_cast<std::size_t>(n));
    std::vector<std::vector<std::string>> point_flags(static_cast<std::size_t>(n));

    const auto start = std::chrono::steady_clock::now();
#pragma omp parallel for schedule(dynamic, 8)
    for (Eigen::Index i = 0; i < n; ++i) {
        Matrix neighbors(ds.D(), k);
        for (Eigen::Index j = 0; j < k; ++j) neighbors.col(j) = ds.X.col(table(j, i));
        const Vector x = ds.X.col(i);
        const auto idx = static_cast<std::size_t>(i);
        if (method == DenoiseMethod::lpca) {
            const LpcaResult r = lpca_from_neighbors(neighbors, x, config.d);
            denoised.col(i) = r.x_hat;
            projectors[idx] = r.projector;
            if (r.non_unique) point_flags[idx].emplace_back("lpca_non_unique");
        } else {
            DenoiseResult r = denoise_from_neighbors(neighbors, x, config.d, config.s, config.lambda, config.fit);
            denoised.col(i) = r.x_hat;
            projectors[idx] = std::move(r.tangent.projector);
            point_flags[idx] = std::move(r.flags);
        }
    }
    const auto stop = std::chrono::steady_clock::now();

    std::map<std::string, int> counts;
    for (const auto& flags : point_flags) {
        for (const auto& f : flags) ++counts[f];
    }
    SweepRow row;
    row.method = method;
    row.k = k;
    row.fe = metric_fe(denoised, *ds.truth);
    row.te = metric_te(projectors, *ds.truth_tangents);
    row.time_s = std::chrono::duration<double>(stop - start).count();
    row.flags = join_flags(counts);
    return row;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& config) {
    config.validate();
    SweepResult result;
    result.record_time = config.record_time;
    const Eigen::Index kmax = *std::max_element(config.ks.begin(), config.ks.end());
    for (std::size_t si = 0; si < config.sigmas.size(); ++si) {
        for (int trial = 0; trial < config.trials; ++trial) {
            const Dataset ds = gen_sphere(config.n, config.sigmas[si], cell_seed(config.seed, si, trial));
            // Neighbor lists are sorted by (distance, index), so the first K rows
            // of the K_max table are exactly the K nearest neighbors.
            const NeighborTable table = omp::knn_all(ds.X, ds.X, kmax);
            for (Eigen::Index k : config.ks) {
                for (DenoiseMethod method : config.methods) {
                    SweepRow row = run_cell(ds, table, k, method, config);
                    row.sigma = config.sigmas[si];
                    row.trial = trial;
                    result.rows.push_back(std::move(row));
                }
            }
        }
    }
    std::stable_sort(result.rows.begin(), result.rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return std::tie(a.method, a.sigma, a.k, a.trial) < std::tie(b.method, b.sigma, b.k, b.trial);
    });
    return result;
}

std::string table_csv(const SweepResult& result) {
    require(!result.rows.empty(), "emit_table: empty result");
    std::ostringstream out;
    out << "method,sigma,K,Fe,Te,time_s,flags\n";
    for (const auto& r : result.rows) {
        out << to_string(r.method) << ',' << format_double(r.sigma) << ',' << r.k << ',' << format_double(r.fe)
            << ',' << format_double(r.te) << ',' << (result.record_time ? format_double(r.time_s) : "") << ','
            << r.flags << '\n';
    }
    return out.str();
}

std::string table_text(const SweepResult& result) {
    require(!result.rows.empty(), "emit_table: empty result");
    std::ostringstream out;
    out << std::left << std::setw(7) << "method" << std::right << std::setw(7) << "sigma" << std::setw(5) << "K"
        << std::setw(12) << "Fe" << std::setw(12) << "Te" << std::setw(10) << "time_s" << "  flags\n";
    for (const auto& r : result.rows) {
        out << std::left << std::setw(7) << to_string(r.method) << std::right << std::fixed << std::setprecision(3)
            << std::setw(7) << r.sigma << std::setw(5) << r.k << std::setprecision(6) << std::setw(12) << r.fe
            << std::setw(12) << r.te << std::setprecision(2) << std::setw(10) << r.time_s << "  "
            << (r.flags.empty() ? "-" : r.flags) << '\n';
    }
    return out.str();
}

namespace {

double parse_number(const std::string& field, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw ValidationError("table line " + std::to_string(line) + ": malformed number '" + field + "'");
    }
    return v;
}

}  // namespace

SweepResult parse_table_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    SweepResult result;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1) {
            require(line == "method,sigma,K,Fe,Te,time_s,flags", "table: unexpected header");
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) fields.push_back(f);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        require(fields.size() == 7, "table line " + std::to_string(lineno) + ": expected 7 fields");
        SweepRow r;
        r.method = parse_denoise_method(fields[0]);
        r.sigma = parse_number(fields[1], lineno);
        r.k = static_cast<Eigen::Index>(parse_number(fields[2], lineno));
        r.fe = parse_number(fields[3], lineno);
        r.te = parse_number(fields[4], lineno);
        if (!fields[5].empty()) {
            r.time_s = parse_number(fields[5], lineno);
            result.record_time = true;
        }
        r.flags = fields[6];
        result.rows.push_back(std::move(r));
    }
    return result;
}

void emit_table(const SweepResult& result, const std::filesystem::path& path) {
    const std::string csv = table_csv(result);
    const std::string txt = table_text(result);
    for (const auto& [file, body] : {std::pair{sibling_path(path, ".csv"), csv}, std::pair{sibling_path(path, ".txt"), txt}}) {
        std::ofstream out(file, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + file.string());
        out << body;
        if (!out) throw std::runtime_error("write failed for " + file.string());
    }
}

std::vector<CellMean> trial_means(const SweepResult& result) {
    std::map<std::tuple<DenoiseMethod, double, Eigen::Index>, std::tuple<double, double, int>> acc;
    for (const auto& r : result.rows) {
        auto& [fe, te, count] = acc[{r.method, r.sigma, r.k}];
        fe += r.fe;
        te += r.te;
        ++count;
    }
    std::vector<CellMean> out;
    for (const auto& [key, value] : acc) {
        const auto& [fe, te, count] = value;
        out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), fe / count, te / count});
    }
    return out;
}

}  // namespace sqmf
