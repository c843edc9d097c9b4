#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsbm/model.hpp"
#include "dsbm/spectral.hpp"

namespace dsbm {

enum class AlphaMode { Known, Plugin };

struct EstimatorConfig {
  int l = 1;
  std::optional<int> fixed_r;          ///< unset: Lepskii-adaptive
  std::vector<int> r_grid;             ///< fixed windows evaluated at error_time for error-vs-r output
  std::string constant_mode = "empirical";
  std::optional<double> c;             ///< empirical constant; calibrated when unset
  double tau = 1.0;
  double c0 = 1.0;
  double C_alpha = 1.0;
  AlphaMode alpha = AlphaMode::Known;
  int calibration_pilots = 20;
  double calibration_quantile = 0.95;
  std::optional<int> r_max;
};

struct ClusteringConfig {
  std::optional<int> K;                ///< unset: use K_hat
  bool estimate_k = false;
  double epsilon = 0.1;
  int restarts = 20;
  double varpi = 1.0 / 3.0;
  int K_max = 0;                       ///< 0: floor(sqrt(n))
  EigenSort sort = EigenSort::Signed;
  bool baseline_r0 = false;            ///< also cluster raw snapshots for a paired comparison
};

struct ExperimentConfig {
  DsbmParams model;
  ConnectivitySpec connectivity;
  EstimatorConfig estimator;
  ClusteringConfig clustering;
  std::vector<int> times;              ///< 0-based times to evaluate; empty: all
  std::optional<int> error_time;       ///< 0-based time for error-vs-r; default (T - 1) / 2
  int replicates = 1;
  std::uint64_t base_seed = 1;
  int threads = 1;
  std::string output = "dsbm_out";
  std::string snapshot_format = "binary";   ///< "binary" or "edges"

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
  std::vector<int> eval_times() const;
  int error_time_or_default() const;
};

/// JSON uses 1-based time indices for `times` and `error_time`.
void to_json(nlohmann::json& j, const ExperimentConfig& config);
void from_json(const nlohmann::json& j, ExperimentConfig& config);

void to_json(nlohmann::json& j, const ConnectivitySpec& spec);
void from_json(const nlohmann::json& j, ConnectivitySpec& spec);

ExperimentConfig load_config(const std::string& path);

}  // namespace dsbm
