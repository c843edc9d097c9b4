#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsbm/estimator.hpp"
#include "dsbm/model.hpp"
#include "dsbm/spectral.hpp"

namespace dsbm {

/// Dense binary layout (little-endian host order):
///   "DSBM" | u32 version = 1 | u32 n | u32 T | f64 diag | T * n * n f64, row-major.
inline constexpr std::uint32_t kBinaryVersion = 1;

void write_dense_binary(const std::filesystem::path& path, const std::vector<Matrix>& mats, double diag_value);
SnapshotSequence read_dense_binary(const std::filesystem::path& path);

/// Edge list with header t,i,j; 1-based, i < j, one row per present edge.
void write_edge_list(const std::filesystem::path& path, const SnapshotSequence& snapshots);
/// n and T default to the largest index seen.
SnapshotSequence read_edge_list(const std::filesystem::path& path, double diag_value, std::optional<int> n = {},
                                std::optional<int> T = {});

/// Dispatches on the leading magic bytes.
SnapshotSequence read_snapshots(const std::filesystem::path& path, double edge_list_diag = 10.0);

/// CSV t,node,label with 1-based entries.
void write_memberships(const std::filesystem::path& path, const std::vector<Labels>& labels);
/// Same CSV, keyed by 0-based time; times may be sparse.
std::map<int, Labels> read_label_table(const std::filesystem::path& path);
/// K defaults to the largest label seen.
MembershipSequence read_memberships(const std::filesystem::path& path, std::optional<int> K = {});

/// CSV node,label (1-based).
void write_clustering_csv(const std::filesystem::path& path, const ClusteringResult& result);

struct MetricsRow {
  int t = 0;          ///< 0-based; written 1-based
  double R = 0;
  double R_literal = 0;
  double Rtilde = 0;
  int K_hat = 0;
  int r_hat = 0;
};

/// CSV t,R_t,R_t_literal,Rtilde_t,K_hat,r_hat.
void write_metrics(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

/// CSV r,rho,statistic,threshold,pass.
void write_lepskii_trace(const std::filesystem::path& path, const LepskiiTrace& trace);

nlohmann::json estimate_sidecar(const EstimatedMatrix& estimate, const std::string& constant_mode, double c);

nlohmann::json clustering_metadata(int t, const ClusteringResult& result, std::optional<int> K_hat,
                                   const std::vector<std::string>& extra_flags = {});

nlohmann::json read_json(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Shortest text that reads back to the same double.
std::string format_double(double x);

/// Writes `content` to `path` atomically (temporary file + rename).
void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace dsbm
