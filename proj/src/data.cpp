#include "sqmf/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string_view>

namespace sqmf {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kSphereTag = 1;
constexpr std::uint64_t kCircleTag = 2;

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(splitmix64(seed) ^ (a * kGolden)) ^ b);
}

SampleStream::SampleStream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index)
    : engine_(splitmix64(splitmix64(seed ^ (tag * kGolden)) + index)) {}

double SampleStream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SampleStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

Matrix sphere_truth_projector(const Vector& x) {
    const double nsq = x.squaredNorm();
    require(nsq > 0.0, "sphere_truth_projector: zero vector");
    return Matrix::Identity(x.size(), x.size()) - x * x.transpose() / nsq;
}

Dataset gen_sphere(Eigen::Index n, double sigma, std::uint64_t seed) {
    require(n >= 1, "gen_sphere: n must be >= 1");
    require(sigma >= 0.0 && std::isfinite(sigma), "gen_sphere: sigma must be non-negative");
    Dataset ds;
    ds.X.resize(3, n);
    Matrix truth(3, n);
    std::vector<Matrix> tangents(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        SampleStream rng(seed, kSphereTag, static_cast<std::uint64_t>(i));
        Vector g(3);
        do {
            for (int k = 0; k < 3; ++k) g(k) = rng.normal();
        } while (g.squaredNorm() == 0.0);
        truth.col(i) = g / g.norm();
        for (int k = 0; k < 3; ++k) ds.X(k, i) = truth(k, i) + sigma * rng.normal();
        tangents[static_cast<std::size_t>(i)] = sphere_truth_projector(truth.col(i));
    }
    ds.truth = std::move(truth);
    ds.truth_tangents = std::move(tangents);
    ds.seed = seed;
    ds.meta = {{"generator", "sphere"}, {"n", n}, {"sigma", sigma}, {"seed", seed}};
    return ds;
}

Dataset gen_circle_arc(Eigen::Index n, double sigma, std::uint64_t seed) {
    require(n >= 2, "gen_circle_arc: n must be >= 2");
    require(sigma >= 0.0 && std::isfinite(sigma), "gen_circle_arc: sigma must be non-negative");
    const double lo = -std::numbers::pi / 3.0;
    const double hi = 2.0 * std::numbers::pi / 3.0;
    Dataset ds;
    ds.X.resize(2, n);
    Matrix truth(2, n);
    std::vector<Matrix> tangents(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        SampleStream rng(seed, kCircleTag, static_cast<std::uint64_t>(i));
        truth(0, i) = std::cos(t);
        truth(1, i) = std::sin(t);
        ds.X(0, i) = truth(0, i) + sigma * rng.normal();
        ds.X(1, i) = truth(1, i) + sigma * rng.normal();
        Vector dir(2);
        dir << -std::sin(t), std::cos(t);
        tangents[static_cast<std::size_t>(i)] = dir * dir.transpose();
    }
    ds.truth = std::move(truth);
    ds.truth_tangents = std::move(tangents);
    ds.seed = seed;
    ds.meta = {{"generator", "circle_arc"}, {"n", n}, {"sigma", sigma}, {"seed", seed}};
    return ds;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::filesystem::path sibling_path(const std::filesystem::path& path, const std::string& suffix) {
    return path.parent_path() / (path.stem().string() + suffix);
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path, const std::string& header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    if (!header.empty()) out << header << '\n';
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (i) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::optional<long long> header_D, header_n;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            std::istringstream hs(line.substr(1));
            std::string tok;
            while (hs >> tok) {
                if (tok.rfind("D=", 0) == 0) header_D = std::stoll(tok.substr(2));
                if (tok.rfind("n=", 0) == 0) header_n = std::stoll(tok.substr(2));
            }
            continue;
        }
        std::vector<double> row;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            std::string_view field = rest.substr(0, comma);
            while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
            while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
            double v = 0.0;
            const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
            if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
                throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": malformed value '" +
                                      std::string(field) + "'");
            }
            row.push_back(v);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(rows.front().size()) + " columns, found " +
                                  std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError(path.string() + ": no samples");
    const auto D = static_cast<Eigen::Index>(rows.front().size());
    const auto n = static_cast<Eigen::Index>(rows.size());
    if (header_D) require(*header_D == D, path.string() + ": header D does not match the column count");
    if (header_n) require(*header_n == n, path.string() + ": header n does not match the row count");
    Matrix m(D, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < D; ++i) m(i, j) = rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    }
    return m;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
    const std::string header = "# D=" + std::to_string(ds.D()) + " n=" + std::to_string(ds.n());
    write_matrix_csv(ds.X, path, header);
    if (ds.truth) {
        require(ds.truth->rows() == ds.D() && ds.truth->cols() == ds.n(), "save_csv: truth shape mismatch");
        write_matrix_csv(*ds.truth, sibling_path(path, ".truth.csv"), header);
    }
    if (!ds.meta.empty()) {
        std::ofstream meta(sibling_path(path, ".meta.json"), std::ios::binary);
        meta << ds.meta.dump(2) << '\n';
    }
}

Dataset load_csv(const std::filesystem::path& path) {
    Dataset ds;
    ds.X = read_matrix_csv(path);
    const auto truth_path = sibling_path(path, ".truth.csv");
    if (std::filesystem::exists(truth_path)) {
        Matrix truth = read_matrix_csv(truth_path);
        require(truth.rows() == ds.D() && truth.cols() == ds.n(), truth_path.string() + ": shape differs from data");
        ds.truth = std::move(truth);
    }
    const auto meta_path = sibling_path(path, ".meta.json");
    if (std::filesystem::exists(meta_path)) {
        std::ifstream in(meta_path);
        try {
            ds.meta = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError(meta_path.string() + ": " + e.what());
        }
        if (ds.meta.contains("seed") && ds.meta["seed"].is_number_unsigned()) {
            ds.seed = ds.meta["seed"].get<std::uint64_t>();
        }
    }
    return ds;
}

}  // namespace sqmf
