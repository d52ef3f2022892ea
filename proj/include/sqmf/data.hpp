#pragma once

#include "sqmf/quadform.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

namespace sqmf {

/// Deterministic substreams: sample i of generator stream `tag` draws from a
/// std::mt19937_64 seeded with splitmix64(splitmix64(seed ^ tag * phi64) + i),
/// so parallel fills are independent of visiting order. Normals come from
/// Box-Muller on 53-bit uniforms.
class SampleStream {
public:
    SampleStream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index);

    double uniform();  ///< [0, 1)
    double normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent seed for a named sub-experiment.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

struct Dataset {
    Matrix X;                                   ///< D x n samples
    std::optional<Matrix> truth;                ///< noiseless counterparts, same shape as X
    std::optional<std::vector<Matrix>> truth_tangents;
    std::uint64_t seed = 0;
    nlohmann::json meta = nlohmann::json::object();

    Eigen::Index D() const { return X.rows(); }
    Eigen::Index n() const { return X.cols(); }
};

/// Uniform points on the unit sphere in R^3 (normalized Gaussian triples) plus N(0, sigma^2 I) noise.
Dataset gen_sphere(Eigen::Index n, double sigma, std::uint64_t seed);

/// (cos t, sin t) for t equally spaced on [-pi/3, 2pi/3] plus independent N(0, sigma^2) noise.
Dataset gen_circle_arc(Eigen::Index n, double sigma, std::uint64_t seed);

/// Tangent projector I - x x^T / ||x||^2 of the unit sphere through x.
Matrix sphere_truth_projector(const Vector& x);

/// One sample per row, D comma-separated columns, header `# D=<D> n=<n>`.
/// Truth goes to `<stem>.truth.csv` and meta to `<stem>.meta.json`.
void save_csv(const Dataset& ds, const std::filesystem::path& path);
Dataset load_csv(const std::filesystem::path& path);

/// Matrix-only CSV helpers (rows are samples, i.e. columns of `m`).
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path, const std::string& header = "");
Matrix read_matrix_csv(const std::filesystem::path& path);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

std::filesystem::path sibling_path(const std::filesystem::path& path, const std::string& suffix);

}  // namespace sqmf
