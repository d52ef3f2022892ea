#pragma once

#include "sqmf/fitting.hpp"

#include "json.hpp"

#include <filesystem>

namespace sqmf {

/// {D, d, s, lambda, c, U, V, theta, psi_ordering: "lex-upper"}; matrices
/// column-major. Doubles are written in shortest round-trip form.
nlohmann::json model_to_json(const QuadraticModel& model);
QuadraticModel model_from_json(const nlohmann::json& doc);

void save_model(const QuadraticModel& model, const std::filesystem::path& path);
QuadraticModel load_model(const std::filesystem::path& path);

nlohmann::json report_to_json(const FitReport& report);

nlohmann::json matrix_to_json(const Matrix& m);  ///< flat column-major array
Matrix matrix_from_json(const nlohmann::json& array, Eigen::Index rows, Eigen::Index cols, const char* name);

}  // namespace sqmf
