#include "dsbm/config.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dsbm/error.hpp"
#include "dsbm/io.hpp"

namespace dsbm {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + " must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(std::string(what) + " rows must have equal length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <class T>
void read_opt(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

void to_json(json& j, const ConnectivitySpec& spec) {
  j = json{{"family", std::string(to_string(spec.family))}, {"alpha_n", spec.alpha_n}};
  switch (spec.family) {
    case ConnectivityFamily::ConstantMatrix:
      j["base"] = matrix_to_json(spec.base);
      break;
    case ConnectivityFamily::AffineSinusoid:
      j["base"] = matrix_to_json(spec.base);
      j["amplitude"] = matrix_to_json(spec.amplitude);
      j["frequency"] = spec.frequency;
      j["phase"] = spec.phase;
      break;
    case ConnectivityFamily::PolynomialSpline:
      j["base"] = matrix_to_json(spec.base);
      j["amplitude"] = matrix_to_json(spec.amplitude);
      j["spline_degree"] = spec.spline_degree;
      j["knots"] = spec.knots;
      j["knot_coeffs"] = spec.knot_coeffs;
      break;
    case ConnectivityFamily::UserTable: {
      json table = json::array();
      for (const Matrix& m : spec.table) table.push_back(matrix_to_json(m));
      j["table"] = std::move(table);
      break;
    }
  }
}

void from_json(const json& j, ConnectivitySpec& spec) {
  spec = ConnectivitySpec{};
  spec.family = connectivity_family_from_string(j.at("family").get<std::string>());
  read_opt(j, "alpha_n", spec.alpha_n);
  if (spec.family == ConnectivityFamily::UserTable) {
    for (const json& m : j.at("table")) spec.table.push_back(matrix_from_json(m, "table entry"));
  } else {
    spec.base = matrix_from_json(j.at("base"), "base");
    spec.amplitude = j.contains("amplitude") ? matrix_from_json(j.at("amplitude"), "amplitude")
                                             : Matrix::Zero(spec.base.rows(), spec.base.cols());
  }
  read_opt(j, "frequency", spec.frequency);
  read_opt(j, "phase", spec.phase);
  read_opt(j, "spline_degree", spec.spline_degree);
  read_opt(j, "knots", spec.knots);
  read_opt(j, "knot_coeffs", spec.knot_coeffs);
}

void to_json(json& j, const ExperimentConfig& c) {
  json times = json::array();
  for (int t : c.times) times.push_back(t + 1);
  j = json{
      {"model",
       {{"n", c.model.n},
        {"K", c.model.K},
        {"T", c.model.T},
        {"s", c.model.s},
        {"beta", c.model.beta},
        {"L", c.model.L},
        {"diag_value", c.model.diag_value},
        {"enforce_nonempty", c.model.enforce_nonempty},
        {"theoretical_sparsity_check", c.model.theoretical_sparsity_check},
        {"c0", c.model.c0},
        {"connectivity", c.connectivity}}},
      {"estimator",
       {{"l", c.estimator.l},
        {"r", c.estimator.fixed_r ? json(*c.estimator.fixed_r) : json("adaptive")},
        {"r_grid", c.estimator.r_grid},
        {"constant_mode", c.estimator.constant_mode},
        {"c", opt_json(c.estimator.c)},
        {"tau", c.estimator.tau},
        {"c0", c.estimator.c0},
        {"C_alpha", c.estimator.C_alpha},
        {"alpha", c.estimator.alpha == AlphaMode::Known ? "known" : "plugin"},
        {"calibration_pilots", c.estimator.calibration_pilots},
        {"calibration_quantile", c.estimator.calibration_quantile},
        {"r_max", opt_json(c.estimator.r_max)}}},
      {"clustering",
       {{"K", opt_json(c.clustering.K)},
        {"estimate_k", c.clustering.estimate_k},
        {"epsilon", c.clustering.epsilon},
        {"restarts", c.clustering.restarts},
        {"varpi", c.clustering.varpi},
        {"K_max", c.clustering.K_max},
        {"sort", std::string(to_string(c.clustering.sort))},
        {"baseline_r0", c.clustering.baseline_r0}}},
      {"times", times},
      {"error_time", c.error_time ? json(*c.error_time + 1) : json(nullptr)},
      {"replicates", c.replicates},
      {"base_seed", c.base_seed},
      {"threads", c.threads},
      {"output", c.output},
      {"snapshot_format", c.snapshot_format}};
}

void from_json(const json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  try {
    const json& m = j.at("model");
    c.model.n = m.at("n").get<int>();
    c.model.K = m.at("K").get<int>();
    c.model.T = m.at("T").get<int>();
    read_opt(m, "s", c.model.s);
    read_opt(m, "diag_value", c.model.diag_value);
    read_opt(m, "enforce_nonempty", c.model.enforce_nonempty);
    read_opt(m, "theoretical_sparsity_check", c.model.theoretical_sparsity_check);
    read_opt(m, "c0", c.model.c0);
    c.connectivity = m.at("connectivity").get<ConnectivitySpec>();
    c.model.alpha_n = c.connectivity.alpha_n;
    // Smoothness defaults to the class of the connectivity family.
    const double beta = c.connectivity.holder_beta();
    c.model.beta = std::isfinite(beta) ? beta : 2.0;
    c.model.L = std::max(c.connectivity.holder_L(), 1e-12);
    read_opt(m, "beta", c.model.beta);
    read_opt(m, "L", c.model.L);

    if (j.contains("estimator")) {
      const json& e = j.at("estimator");
      read_opt(e, "l", c.estimator.l);
      if (e.contains("r")) {
        const json& r = e.at("r");
        if (r.is_number_integer()) {
          c.estimator.fixed_r = r.get<int>();
        } else if (!(r.is_string() && r.get<std::string>() == "adaptive")) {
          throw ConfigError("estimator.r must be an integer or \"adaptive\"");
        }
      }
      read_opt(e, "r_grid", c.estimator.r_grid);
      read_opt(e, "constant_mode", c.estimator.constant_mode);
      read_opt(e, "c", c.estimator.c);
      read_opt(e, "tau", c.estimator.tau);
      read_opt(e, "c0", c.estimator.c0);
      read_opt(e, "C_alpha", c.estimator.C_alpha);
      if (e.contains("alpha")) {
        const auto a = e.at("alpha").get<std::string>();
        if (a == "known") {
          c.estimator.alpha = AlphaMode::Known;
        } else if (a == "plugin") {
          c.estimator.alpha = AlphaMode::Plugin;
        } else {
          throw ConfigError("estimator.alpha must be \"known\" or \"plugin\"");
        }
      }
      read_opt(e, "calibration_pilots", c.estimator.calibration_pilots);
      read_opt(e, "calibration_quantile", c.estimator.calibration_quantile);
      read_opt(e, "r_max", c.estimator.r_max);
    }
    if (j.contains("clustering")) {
      const json& k = j.at("clustering");
      read_opt(k, "K", c.clustering.K);
      read_opt(k, "estimate_k", c.clustering.estimate_k);
      read_opt(k, "epsilon", c.clustering.epsilon);
      read_opt(k, "restarts", c.clustering.restarts);
      read_opt(k, "varpi", c.clustering.varpi);
      read_opt(k, "K_max", c.clustering.K_max);
      if (k.contains("sort")) c.clustering.sort = eigen_sort_from_string(k.at("sort").get<std::string>());
      read_opt(k, "baseline_r0", c.clustering.baseline_r0);
    } else {
      c.clustering.K = c.model.K;
    }
    std::vector<int> times;
    read_opt(j, "times", times);
    for (int t : times) c.times.push_back(t - 1);
    std::optional<int> error_time;
    read_opt(j, "error_time", error_time);
    if (error_time) c.error_time = *error_time - 1;
    read_opt(j, "replicates", c.replicates);
    read_opt(j, "base_seed", c.base_seed);
    read_opt(j, "threads", c.threads);
    read_opt(j, "output", c.output);
    read_opt(j, "snapshot_format", c.snapshot_format);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

void ExperimentConfig::validate() const {
  try {
    model.validate();
    connectivity.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (connectivity.K() != model.K) throw ConfigError("connectivity is not K x K");
  for (int t = 0; t < model.T; ++t) {
    try {
      (void)eval_connectivity(connectivity, t, model.T);
    } catch (const OutOfRange& e) {
      throw ConfigError(e.what());
    }
  }
  if (estimator.l < 0) throw ConfigError("estimator.l must be >= 0");
  if (estimator.fixed_r && (*estimator.fixed_r < 0 || *estimator.fixed_r > model.T / 2)) {
    throw ConfigError("estimator.r must lie in [0, floor(T/2)]");
  }
  for (int r : estimator.r_grid) {
    if (r < 0 || r > model.T / 2) throw ConfigError("estimator.r_grid entries must lie in [0, floor(T/2)]");
  }
  if (estimator.constant_mode != "empirical" && estimator.constant_mode != "theoretical") {
    throw ConfigError("estimator.constant_mode must be \"empirical\" or \"theoretical\"");
  }
  if (estimator.c && !(*estimator.c > 0.0)) throw ConfigError("estimator.c must be positive");
  if (estimator.calibration_pilots < 1) throw ConfigError("estimator.calibration_pilots must be >= 1");
  if (!(estimator.calibration_quantile > 0.0 && estimator.calibration_quantile <= 1.0)) {
    throw ConfigError("estimator.calibration_quantile must lie in (0, 1]");
  }
  if (!clustering.K && !clustering.estimate_k) throw ConfigError("clustering.K is required unless estimate_k is set");
  if (clustering.K && (*clustering.K < 1 || *clustering.K > model.n)) throw ConfigError("clustering.K out of range");
  if (!(clustering.epsilon > 0.0)) throw ConfigError("clustering.epsilon must be positive");
  if (clustering.restarts < 1) throw ConfigError("clustering.restarts must be >= 1");
  if (!(clustering.varpi > 0.0 && clustering.varpi < 1.0)) throw ConfigError("clustering.varpi must lie in (0, 1)");
  if (clustering.K_max < 0 || clustering.K_max > model.n - 1) throw ConfigError("clustering.K_max out of range");
  for (int t : times) {
    if (t < 0 || t >= model.T) throw ConfigError("times must lie in [1, T]");
  }
  if (error_time && (*error_time < 0 || *error_time >= model.T)) throw ConfigError("error_time must lie in [1, T]");
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (snapshot_format != "binary" && snapshot_format != "edges") {
    throw ConfigError("snapshot_format must be \"binary\" or \"edges\"");
  }
}

std::vector<int> ExperimentConfig::eval_times() const {
  if (!times.empty()) return times;
  std::vector<int> all(static_cast<std::size_t>(model.T));
  std::iota(all.begin(), all.end(), 0);
  return all;
}

int ExperimentConfig::error_time_or_default() const { return error_time.value_or((model.T - 1) / 2); }

ExperimentConfig load_config(const std::string& path) {
  json j;
  try {
    j = read_json(path);
  } catch (const IoError& e) {
    // A config that exists but does not parse is a configuration error.
    if (std::filesystem::exists(path)) throw ConfigError(e.what());
    throw;
  }
  return j.get<ExperimentConfig>();
}

}  // namespace dsbm
