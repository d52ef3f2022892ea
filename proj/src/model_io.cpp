#include "sqmf/model_io.hpp"

#include <fstream>

namespace sqmf {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
    json out = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(m(i, j));
    }
    return out;
}

Matrix matrix_from_json(const json& array, Eigen::Index rows, Eigen::Index cols, const char* name) {
    require(array.is_array(), std::string("model: '") + name + "' must be an array");
    require(static_cast<Eigen::Index>(array.size()) == rows * cols,
            std::string("model: '") + name + "' has " + std::to_string(array.size()) + " entries, expected " +
                std::to_string(rows * cols));
    Matrix m(rows, cols);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i, ++k) {
            const json& v = array[static_cast<std::size_t>(k)];
            require(v.is_number(), std::string("model: '") + name + "' must contain numbers");
            m(i, j) = v.get<double>();
        }
    }
    return m;
}

json model_to_json(const QuadraticModel& model) {
    json doc;
    doc["D"] = model.D();
    doc["d"] = model.d();
    doc["s"] = model.s();
    doc["lambda"] = model.lambda();
    doc["c"] = matrix_to_json(model.c());
    doc["U"] = matrix_to_json(model.U());
    doc["V"] = matrix_to_json(model.V());
    doc["theta"] = matrix_to_json(model.theta());
    doc["psi_ordering"] = "lex-upper";
    return doc;
}

QuadraticModel model_from_json(const json& doc) {
    require(doc.is_object(), "model: document must be a JSON object");
    for (const char* key : {"D", "d", "s", "lambda", "c", "U", "V", "theta"}) {
        require(doc.contains(key), std::string("model: missing key '") + key + "'");
    }
    if (doc.contains("psi_ordering")) {
        require(doc["psi_ordering"] == "lex-upper", "model: unsupported psi_ordering");
    }
    for (const char* key : {"D", "d", "s"}) {
        require(doc[key].is_number_integer() && doc[key].get<long long>() >= 1,
                std::string("model: '") + key + "' must be a positive integer");
    }
    require(doc["lambda"].is_number(), "model: 'lambda' must be a number");
    const auto D = doc["D"].get<Eigen::Index>();
    const auto d = doc["d"].get<Eigen::Index>();
    const auto s = doc["s"].get<Eigen::Index>();
    validate_dims(D, d, s);
    return QuadraticModel(matrix_from_json(doc["c"], D, 1, "c"), matrix_from_json(doc["U"], D, d, "U"),
                          matrix_from_json(doc["V"], D, s, "V"),
                          matrix_from_json(doc["theta"], packed_size(d), s, "theta"),
                          doc["lambda"].get<double>());
}

void save_model(const QuadraticModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << model_to_json(model).dump(2) << '\n';
}

QuadraticModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open model file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("model: " + path.string() + ": " + e.what());
    }
    return model_from_json(doc);
}

json report_to_json(const FitReport& report) {
    json doc;
    doc["solver_method"] = to_string(report.solver_method);
    doc["converged"] = report.converged;
    doc["initial_objective"] = report.initial_objective;
    json outer = json::array();
    for (const auto& step : report.outer) {
        outer.push_back({{"after_regression", step.after_regression},
                         {"after_projection", step.after_projection},
                         {"unregularized_after_projection", step.unregularized_after_projection},
                         {"inner_iterations", step.inner_iterations},
                         {"inner_converged", step.inner_converged}});
    }
    doc["outer"] = std::move(outer);
    doc["inner_iteration_counts"] = json::array();
    for (const auto& step : report.outer) doc["inner_iteration_counts"].push_back(step.inner_iterations);
    doc["stationarity"] = {{"grad_c_norm", report.stationarity.grad_c_norm},
                           {"theta_normal_residual", report.stationarity.theta_normal_residual},
                           {"q_residual", report.stationarity.q_residual},
                           {"distinct_singular_values", report.stationarity.distinct_singular_values},
                           {"max_projection_gradient", report.max_projection_gradient}};
    doc["stalled_points"] = report.stalled_points;
    doc["failed_points"] = report.failed_points;
    doc["non_monotone_steps"] = report.non_monotone_steps;
    doc["flags"] = report.flags;
    return doc;
}

}  // namespace sqmf
