#pragma once

#include "sqmf/applications.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sqmf {

enum class DenoiseMethod { rsqmf, lpca };

std::string to_string(DenoiseMethod m);
DenoiseMethod parse_denoise_method(const std::string& name);

struct SweepConfig {
    std::vector<double> sigmas{0.06, 0.08, 0.10};
    std::vector<Eigen::Index> ks{22, 26, 30, 34, 38, 42, 46};
    Eigen::Index n = 1000;
    Eigen::Index d = 2;
    Eigen::Index s = 1;
    double lambda = 0.0;
    std::vector<DenoiseMethod> methods{DenoiseMethod::rsqmf, DenoiseMethod::lpca};
    std::uint64_t seed = 20240501;
    int trials = 1;
    FitSettings fit;
    /// Write wall time into the CSV.
    bool record_time = false;

    void validate() const;
};

SweepConfig sweep_config_from_json(const nlohmann::json& doc);
nlohmann::json sweep_config_to_json(const SweepConfig& config);

struct SweepRow {
    DenoiseMethod method = DenoiseMethod::rsqmf;
    double sigma = 0.0;
    Eigen::Index k = 0;
    int trial = 0;
    double fe = 0.0;
    double te = 0.0;
    double time_s = 0.0;
    std::string flags;  ///< ';'-separated "name=count" entries, empty when clean
};

struct SweepResult {
    std::vector<SweepRow> rows;  ///< sorted by (method, sigma, K, trial)
    bool record_time = false;
};

/// Sphere denoising and tangent estimation for every (sigma, K, method, trial).
/// Each (sigma, trial) pair draws one dataset shared by all K and methods.
SweepResult run_sweep(const SweepConfig& config);

/// Dataset seed for one (sigma index, trial) cell.
std::uint64_t cell_seed(std::uint64_t seed, std::size_t sigma_index, int trial);

std::string table_csv(const SweepResult& result);
std::string table_text(const SweepResult& result);
SweepResult parse_table_csv(const std::string& text);

/// Writes `<stem>.csv` and `<stem>.txt` next to `path`.
void emit_table(const SweepResult& result, const std::filesystem::path& path);

/// Mean F_e and T_e over trials for one (method, sigma, K).
struct CellMean {
    DenoiseMethod method;
    double sigma;
    Eigen::Index k;
    double fe;
    double te;
};
std::vector<CellMean> trial_means(const SweepResult& result);

}  // namespace sqmf
