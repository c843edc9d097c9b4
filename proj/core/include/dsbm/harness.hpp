#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsbm/config.hpp"
#include "dsbm/estimator.hpp"
#include "dsbm/model.hpp"
#include "dsbm/spectral.hpp"

namespace dsbm {

struct Simulation {
  MembershipSequence memberships;
  ProbabilityTensor P;
  SnapshotSequence snapshots;
};

/// Memberships use derive_seed(seed, 1), adjacency derive_seed(seed, 2).
Simulation simulate(const ExperimentConfig& config, std::uint64_t seed);

/// Seed of replicate i: derive_seed(base_seed, i).
std::uint64_t replicate_seed(std::uint64_t base_seed, int index);

/// Threshold constant for the configured mode. Empirical mode without an
/// explicit c calibrates on constant-B pilots drawn from the model section.
double resolve_constant(const ExperimentConfig& config);
double calibrate_for_config(const ExperimentConfig& config);

struct TimeResult {
  int t = 0;
  int r_hat = 0;
  int K_used = 0;
  std::optional<int> K_hat;
  ClusterCountFlag K_hat_flag = ClusterCountFlag::None;
  ClusteringResult clustering;
  std::optional<LepskiiTrace> trace;
  std::optional<EstimatedMatrix> estimate;   ///< kept only on request

  // Filled only when the truth is known.
  double R = 0;
  double R_literal = 0;
  double Rtilde = 0;
  bool Rtilde_surrogate = false;
  std::optional<double> R_r0;
  std::optional<double> Rtilde_r0;
  double est_error = 0;      ///< ||P_hat - E[A_t]||
  double lambda_min = 0;
  double bound_rhs = 0;
  bool bound_holds = false;
  int n_max = 0;
};

struct Truth {
  const MembershipSequence* memberships = nullptr;
  const ProbabilityTensor* P = nullptr;
  const ProbabilityTensor* expected = nullptr;
};

/// Estimation, optional K_hat and clustering at every configured time.
/// Clustering at time t is seeded with derive_seed(derive_seed(seed, 3), t).
std::vector<TimeResult> cluster_sequence(const SnapshotSequence& snapshots, const ExperimentConfig& config,
                                         double constant, std::uint64_t seed, const Truth& truth = {},
                                         bool keep_estimates = false);

struct ReplicateResult {
  int index = 0;
  std::uint64_t seed = 0;
  double constant = 0;
  int error_time = 0;
  int oracle_r = 0;
  int r_hat_error_time = 0;
  double error_selected = 0;                       ///< ||P_hat_{r_hat} - E[A_t]|| at error_time
  std::vector<std::pair<int, double>> error_vs_r;  ///< fixed-r errors at error_time
  std::vector<TimeResult> times;
};

ReplicateResult run_replicate(const ExperimentConfig& config, int index, double constant);

nlohmann::json to_json(const ReplicateResult& result);
ReplicateResult replicate_from_json(const nlohmann::json& j);

/// Single-threaded fold over completed replicates.
nlohmann::json aggregate(const ExperimentConfig& config, const std::vector<ReplicateResult>& replicates);

// Subcommands. Each writes into `out` and returns a short JSON summary.
nlohmann::json cmd_simulate(const ExperimentConfig& config, const std::filesystem::path& out);
/// With export_estimates, each P_hat is also written as estimates/P_hat_tNNNN.bin
/// (dense binary) with a JSON sidecar.
nlohmann::json cmd_cluster(const std::filesystem::path& snapshots, const ExperimentConfig& config,
                           const std::filesystem::path& out, bool export_estimates = false);
nlohmann::json cmd_evaluate(const std::filesystem::path& labels, const std::filesystem::path& truth,
                            const std::filesystem::path& out_csv,
                            const std::optional<std::filesystem::path>& metadata = {});
nlohmann::json cmd_experiment(const ExperimentConfig& config);

}  // namespace dsbm
