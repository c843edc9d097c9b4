#include "dsbm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <boost/math/distributions/binomial.hpp>

#include "dsbm/error.hpp"
#include "dsbm/io.hpp"
#include "dsbm/linalg.hpp"
#include "dsbm/metrics.hpp"
#include "dsbm/rng.hpp"

namespace dsbm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kCalibrationStream = 0xCA11B8A7E;
constexpr std::uint64_t kMembershipStream = 1;
constexpr std::uint64_t kAdjacencyStream = 2;
constexpr std::uint64_t kClusteringStream = 3;

ConstantMode constant_mode(const ExperimentConfig& config, double constant) {
  if (config.estimator.constant_mode == "theoretical") {
    return TheoreticalMode{config.estimator.tau, config.estimator.c0, config.estimator.C_alpha};
  }
  return EmpiricalMode{constant};
}

double alpha_for(const ExperimentConfig& config, const SnapshotSequence& snapshots) {
  return config.estimator.alpha == AlphaMode::Known ? config.model.alpha_n : plugin_density(snapshots);
}

LepskiiOptions lepskii_options(const ExperimentConfig& config) {
  LepskiiOptions opt;
  opt.r_max = config.estimator.r_max;
  return opt;
}

struct Estimate {
  EstimatedMatrix matrix;
  std::optional<LepskiiTrace> trace;
};

Estimate estimate_at(const SnapshotSequence& snapshots, const ExperimentConfig& config, const ConstantMode& mode,
                     double alpha, int t, KernelBank& bank) {
  if (config.estimator.fixed_r) {
    return {estimate_probability(snapshots, t, *config.estimator.fixed_r, config.estimator.l, &bank), std::nullopt};
  }
  LepskiiResult res =
      lepskii_select(snapshots, t, config.estimator.l, alpha, mode, lepskii_options(config), &bank);
  return {std::move(res.estimate), std::move(res.trace)};
}

int resolve_K_max(const ExperimentConfig& config, int n) {
  if (config.clustering.K_max > 0) return std::min(config.clustering.K_max, n - 1);
  return std::min(static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))), n - 1);
}

/// Nonzero eigenvalues of Theta B Theta^T are those of D^{1/2} B D^{1/2},
/// D = diag(class sizes); B is read off P at one representative per class.
double block_lambda_min(const Matrix& P, const Labels& labels, int K) {
  std::vector<int> rep(static_cast<std::size_t>(K), -1);
  Vector sizes = Vector::Zero(K);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (rep[static_cast<std::size_t>(labels[i])] < 0) rep[static_cast<std::size_t>(labels[i])] = static_cast<int>(i);
    sizes(labels[i]) += 1.0;
  }
  Matrix S(K, K);
  for (int a = 0; a < K; ++a) {
    for (int b = 0; b < K; ++b) {
      if (rep[a] < 0 || rep[b] < 0) {
        S(a, b) = 0.0;
        continue;
      }
      S(a, b) = std::sqrt(sizes(a) * sizes(b)) * P(rep[a], rep[b]);
    }
  }
  const Vector ev = symmetric_eigenvalues(S);
  return ev.cwiseAbs().minCoeff();
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

json summary(const std::vector<double>& v) {
  return {{"count", v.size()},
          {"mean", mean(v)},
          {"q05", quantile(v, 0.05)},
          {"median", quantile(v, 0.5)},
          {"q95", quantile(v, 0.95)}};
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_double(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

fs::path replicate_dir(const fs::path& out, int index) {
  char name[32];
  std::snprintf(name, sizeof name, "rep_%04d", index);
  return out / "replicates" / name;
}

std::string trace_name(int t) {
  char name[40];
  std::snprintf(name, sizeof name, "lepskii_t%04d.csv", t + 1);
  return name;
}

json time_to_json(const TimeResult& r) {
  return {{"t", r.t + 1},
          {"r_hat", r.r_hat},
          {"K_used", r.K_used},
          {"K_hat", r.K_hat ? json(*r.K_hat) : json(nullptr)},
          {"K_hat_flag", std::string(to_string(r.K_hat_flag))},
          {"objective", r.clustering.objective},
          {"flags", r.clustering.flags},
          {"R", r.R},
          {"R_literal", r.R_literal},
          {"Rtilde", r.Rtilde},
          {"Rtilde_surrogate", r.Rtilde_surrogate},
          {"R_r0", opt_json(r.R_r0)},
          {"Rtilde_r0", opt_json(r.Rtilde_r0)},
          {"est_error", r.est_error},
          {"lambda_min", r.lambda_min},
          {"bound_rhs", r.bound_rhs},
          {"bound_holds", r.bound_holds},
          {"n_max", r.n_max}};
}

TimeResult time_from_json(const json& j) {
  TimeResult r;
  r.t = j.at("t").get<int>() - 1;
  r.r_hat = j.at("r_hat").get<int>();
  r.K_used = j.at("K_used").get<int>();
  if (!j.at("K_hat").is_null()) r.K_hat = j.at("K_hat").get<int>();
  const auto flag = j.at("K_hat_flag").get<std::string>();
  if (flag == to_string(ClusterCountFlag::NoGapFound)) r.K_hat_flag = ClusterCountFlag::NoGapFound;
  if (flag == to_string(ClusterCountFlag::DegenerateSpectrum)) r.K_hat_flag = ClusterCountFlag::DegenerateSpectrum;
  r.clustering.objective = j.at("objective").get<double>();
  r.clustering.flags = j.at("flags").get<std::vector<std::string>>();
  r.clustering.K_used = r.K_used;
  r.clustering.r_used = r.r_hat;
  r.R = j.at("R").get<double>();
  r.R_literal = j.at("R_literal").get<double>();
  r.Rtilde = j.at("Rtilde").get<double>();
  r.Rtilde_surrogate = j.at("Rtilde_surrogate").get<bool>();
  r.R_r0 = opt_double(j, "R_r0");
  r.Rtilde_r0 = opt_double(j, "Rtilde_r0");
  r.est_error = j.at("est_error").get<double>();
  r.lambda_min = j.at("lambda_min").get<double>();
  r.bound_rhs = j.at("bound_rhs").get<double>();
  r.bound_holds = j.at("bound_holds").get<bool>();
  r.n_max = j.at("n_max").get<int>();
  return r;
}

template <class F>
void parallel_for(int count, int threads, F&& body) {
  threads = std::max(1, std::min(threads, count));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

void write_labels(const fs::path& path, const std::vector<TimeResult>& times) {
  // Like write_memberships, but keeps the evaluated time index.
  std::ostringstream os;
  os << "t,node,label\n";
  for (const TimeResult& r : times) {
    for (std::size_t i = 0; i < r.clustering.labels.size(); ++i) {
      os << r.t + 1 << ',' << i + 1 << ',' << r.clustering.labels[i] + 1 << '\n';
    }
  }
  write_text(path, os.str());
}

std::vector<MetricsRow> metrics_rows(const std::vector<TimeResult>& times) {
  std::vector<MetricsRow> rows;
  for (const TimeResult& r : times) {
    rows.push_back({r.t, r.R, r.R_literal, r.Rtilde, r.K_hat.value_or(0), r.r_hat});
  }
  return rows;
}

}  // namespace

std::uint64_t replicate_seed(std::uint64_t base_seed, int index) {
  return derive_seed(base_seed, static_cast<std::uint64_t>(index));
}

Simulation simulate(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  Simulation sim;
  sim.memberships = simulate_memberships(config.model, std::nullopt, derive_seed(seed, kMembershipStream));
  sim.P = probability_tensor(sim.memberships, config.connectivity);
  sim.snapshots = sample_adjacency(sim.P, config.model.diag_value, derive_seed(seed, kAdjacencyStream));
  return sim;
}

double calibrate_for_config(const ExperimentConfig& config) {
  const int T = config.model.T;
  const int mid = (T - 1) / 2;
  const Matrix B = eval_connectivity(config.connectivity, mid, T);
  const ProbabilityTensor P(static_cast<std::size_t>(T),
                            build_probability_matrix(balanced_labels(config.model.n, config.model.K), B));
  std::vector<SnapshotSequence> pilots;
  const std::uint64_t stream = derive_seed(config.base_seed, kCalibrationStream);
  for (int i = 0; i < config.estimator.calibration_pilots; ++i) {
    pilots.push_back(sample_adjacency(P, config.model.diag_value, derive_seed(stream, static_cast<std::uint64_t>(i))));
  }
  std::set<int> unique{0, mid, T - 1};
  const std::vector<int> times(unique.begin(), unique.end());
  const double alpha =
      config.estimator.alpha == AlphaMode::Known ? config.model.alpha_n : plugin_density(pilots.front());
  return calibrate_empirical_constant(pilots, times, config.estimator.l, alpha, config.estimator.calibration_quantile,
                                      lepskii_options(config));
}

double resolve_constant(const ExperimentConfig& config) {
  if (config.estimator.constant_mode == "theoretical") {
    return lepskii_constant(constant_mode(config, 0.0), config.estimator.l, config.model.T);
  }
  if (config.estimator.c) return *config.estimator.c;
  if (config.estimator.fixed_r) return 0.0;   // never used
  return calibrate_for_config(config);
}

std::vector<TimeResult> cluster_sequence(const SnapshotSequence& snapshots, const ExperimentConfig& config,
                                         double constant, std::uint64_t seed, const Truth& truth,
                                         bool keep_estimates) {
  const int n = snapshots.n();
  const int T = snapshots.T();
  if (n < 2) throw InvalidArgument("clustering needs n >= 2");
  const ConstantMode mode = constant_mode(config, constant);
  const double alpha = alpha_for(config, snapshots);
  const ClusteringConfig& cc = config.clustering;
  const int K_max = resolve_K_max(config, n);
  const std::uint64_t cluster_stream = derive_seed(seed, kClusteringStream);
  KernelBank bank;

  std::vector<TimeResult> out;
  for (int t : config.eval_times()) {
    if (t < 0 || t >= T) throw OutOfRange("evaluation time " + std::to_string(t + 1) + " outside [1, T]");
    TimeResult res;
    res.t = t;
    Estimate est = estimate_at(snapshots, config, mode, alpha, t, bank);
    res.r_hat = est.matrix.r;
    res.trace = std::move(est.trace);

    const int K_fixed = cc.K.value_or(config.model.K);
    const int columns = std::min(n, cc.estimate_k ? std::max(K_fixed, K_max) : K_fixed);
    const EigenLadder ladder = top_eigenpairs(est.matrix.values, columns, cc.sort);
    if (cc.estimate_k) {
      Vector desc = ladder.values;
      std::sort(desc.begin(), desc.end(), std::greater<>());
      const ClusterCountEstimate k = estimate_num_clusters_from_values(desc, cc.varpi, K_max);
      res.K_hat = k.K_hat;
      res.K_hat_flag = k.flag;
    }
    res.K_used = cc.K ? *cc.K : (res.K_hat ? *res.K_hat : K_fixed);
    const std::uint64_t cseed = derive_seed(cluster_stream, static_cast<std::uint64_t>(t));
    res.clustering = kmeans_approx(ladder.vectors.leftCols(res.K_used), res.K_used, cc.epsilon, cc.restarts, cseed);
    res.clustering.r_used = res.r_hat;

    if (truth.memberships != nullptr) {
      const Labels& labels_true = truth.memberships->at(t);
      const int K_true = truth.memberships->K();
      const int K_eval = std::max(K_true, res.K_used);
      res.R = overall_error(res.clustering.labels, labels_true, K_eval);
      res.R_literal = 2.0 * res.R;
      const CommunityError ce = community_error_detail(res.clustering.labels, labels_true, K_eval, K_eval > K_true);
      res.Rtilde = ce.value;
      res.Rtilde_surrogate = ce.surrogate;
      res.n_max = truth.memberships->n_max(t);
      if (cc.baseline_r0) {
        if (res.r_hat == 0) {
          res.R_r0 = res.R;
          res.Rtilde_r0 = res.Rtilde;
        } else {
          const ClusteringResult raw =
              cluster_matrix(snapshots.A[static_cast<std::size_t>(t)], res.K_used,
                             ClusterOptions{cc.epsilon, cc.restarts, cc.sort}, cseed);
          res.R_r0 = overall_error(raw.labels, labels_true, K_eval);
          res.Rtilde_r0 = community_error_detail(raw.labels, labels_true, K_eval, K_eval > K_true).value;
        }
      }
      if (truth.expected != nullptr && truth.P != nullptr) {
        const auto ts = static_cast<std::size_t>(t);
        res.est_error = spectral_norm(est.matrix.values - (*truth.expected)[ts]);
        res.lambda_min = block_lambda_min((*truth.P)[ts], labels_true, K_true);
        if (res.lambda_min > 0.0) {
          res.bound_rhs = misclustering_bound(cc.epsilon, K_true, res.lambda_min, res.est_error);
          res.bound_holds = res.Rtilde <= res.bound_rhs;
        }
      }
    }
    if (keep_estimates) res.estimate = std::move(est.matrix);
    out.push_back(std::move(res));
  }
  return out;
}

ReplicateResult run_replicate(const ExperimentConfig& config, int index, double constant) {
  ReplicateResult rep;
  rep.index = index;
  rep.seed = replicate_seed(config.base_seed, index);
  rep.constant = constant;
  const Simulation sim = simulate(config, rep.seed);
  const ProbabilityTensor expected = expected_adjacency(sim.P, config.model.diag_value);
  rep.times = cluster_sequence(sim.snapshots, config, constant, rep.seed,
                               Truth{&sim.memberships, &sim.P, &expected});

  const int T = config.model.T;
  rep.error_time = config.error_time_or_default();
  rep.oracle_r = oracle_window(config.model, sim.memberships.n_max());
  const auto te = static_cast<std::size_t>(rep.error_time);
  KernelBank bank;
  const Estimate sel = estimate_at(sim.snapshots, config, constant_mode(config, constant),
                                   alpha_for(config, sim.snapshots), rep.error_time, bank);
  rep.r_hat_error_time = sel.matrix.r;
  rep.error_selected = spectral_norm(sel.matrix.values - expected[te]);

  std::set<int> grid(config.estimator.r_grid.begin(), config.estimator.r_grid.end());
  grid.insert(std::min(rep.oracle_r, T / 2));
  for (int r : grid) {
    try {
      const EstimatedMatrix e = estimate_probability(sim.snapshots, rep.error_time, r, config.estimator.l, &bank);
      rep.error_vs_r.emplace_back(r, spectral_norm(e.values - expected[te]));
    } catch (const SingularMomentSystem&) {
      // No kernel for this window; leave r out of the curve.
    }
  }
  return rep;
}

json to_json(const ReplicateResult& r) {
  json curve = json::array();
  for (const auto& [rr, e] : r.error_vs_r) curve.push_back({{"r", rr}, {"error", e}});
  json times = json::array();
  for (const TimeResult& t : r.times) times.push_back(time_to_json(t));
  return {{"index", r.index},
          {"seed", r.seed},
          {"constant", r.constant},
          {"error_time", r.error_time + 1},
          {"oracle_r", r.oracle_r},
          {"r_hat_error_time", r.r_hat_error_time},
          {"error_selected", r.error_selected},
          {"error_vs_r", curve},
          {"times", times}};
}

ReplicateResult replicate_from_json(const json& j) {
  ReplicateResult r;
  r.index = j.at("index").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.constant = j.at("constant").get<double>();
  r.error_time = j.at("error_time").get<int>() - 1;
  r.oracle_r = j.at("oracle_r").get<int>();
  r.r_hat_error_time = j.at("r_hat_error_time").get<int>();
  r.error_selected = j.at("error_selected").get<double>();
  for (const json& p : j.at("error_vs_r")) r.error_vs_r.emplace_back(p.at("r").get<int>(), p.at("error").get<double>());
  for (const json& t : j.at("times")) r.times.push_back(time_from_json(t));
  return r;
}

json aggregate(const ExperimentConfig& config, const std::vector<ReplicateResult>& replicates) {
  std::vector<double> R, Rtilde, Rtilde_max, err_sel, r_hat;
  std::map<int, std::vector<double>> curve;
  std::map<int, std::vector<double>> R_by_t, Rt_by_t, R0_by_t, rhat_by_t, est_by_t;
  std::map<int, int> khat_hist;
  int khat_total = 0, khat_correct = 0;
  int pairs = 0, wins = 0, losses = 0;
  int bound_total = 0, bound_ok = 0;
  int literal_total = 0, literal_ok = 0, relaxed_ok = 0;
  const int n = config.model.n;
  const int K_true = config.model.K;

  for (const ReplicateResult& rep : replicates) {
    err_sel.push_back(rep.error_selected);
    for (const auto& [r, e] : rep.error_vs_r) curve[r].push_back(e);
    double worst = 0.0, sum = 0.0, sum0 = 0.0;
    bool have0 = true;
    for (const TimeResult& t : rep.times) {
      R.push_back(t.R);
      Rtilde.push_back(t.Rtilde);
      r_hat.push_back(t.r_hat);
      R_by_t[t.t].push_back(t.R);
      Rt_by_t[t.t].push_back(t.Rtilde);
      rhat_by_t[t.t].push_back(t.r_hat);
      est_by_t[t.t].push_back(t.est_error);
      worst = std::max(worst, t.Rtilde);
      sum += t.R;
      if (t.R_r0) {
        R0_by_t[t.t].push_back(*t.R_r0);
        sum0 += *t.R_r0;
      } else {
        have0 = false;
      }
      if (t.K_hat) {
        ++khat_hist[*t.K_hat];
        ++khat_total;
        khat_correct += *t.K_hat == K_true;
      }
      if (t.lambda_min > 0.0) {
        ++bound_total;
        bound_ok += t.bound_holds;
      }
      ++literal_total;
      // R_literal <= Rtilde_literal * n_max / n; both literal forms carry the same factor 2.
      literal_ok += t.R <= t.Rtilde * t.n_max / n + 1e-12;
      relaxed_ok += t.R <= t.Rtilde + 1e-12;
    }
    Rtilde_max.push_back(worst);
    if (have0 && !rep.times.empty()) {
      ++pairs;
      wins += sum < sum0;
      losses += sum > sum0;
    }
  }

  json report;
  report["replicates"] = replicates.size();
  report["n"] = n;
  report["K"] = K_true;
  report["T"] = config.model.T;
  report["constant_mode"] = config.estimator.constant_mode;
  report["constant"] = replicates.empty() ? json(nullptr) : json(replicates.front().constant);
  report["R"] = summary(R);
  report["Rtilde"] = summary(Rtilde);
  report["Rtilde_max"] = summary(Rtilde_max);
  report["r_hat"] = summary(r_hat);
  report["error_selected"] = summary(err_sel);
  double worst_t_mean = 0.0;
  for (const auto& [t, v] : R_by_t) worst_t_mean = std::max(worst_t_mean, mean(v));
  report["max_over_t_of_mean_R"] = worst_t_mean;
  if (pairs > 0) {
    double p = 1.0;
    const int decided = wins + losses;
    if (decided > 0) {
      const boost::math::binomial_distribution<double> dist(decided, 0.5);
      p = wins == 0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, wins - 1));
    }
    std::vector<double> R0;
    for (const auto& [t, v] : R0_by_t) R0.insert(R0.end(), v.begin(), v.end());
    report["baseline_r0"] = {{"R", summary(R0)}, {"pairs", pairs}, {"wins", wins}, {"losses", losses},
                             {"sign_test_p", p}};
  }
  if (khat_total > 0) {
    json hist = json::array();
    for (const auto& [k, c] : khat_hist) hist.push_back({{"K_hat", k}, {"count", c}});
    report["K_hat"] = {{"histogram", hist}, {"fraction_correct", static_cast<double>(khat_correct) / khat_total}};
  }
  report["bound_frequency"] = bound_total ? json(static_cast<double>(bound_ok) / bound_total) : json(nullptr);
  report["literal_relation_frequency"] =
      literal_total ? json(static_cast<double>(literal_ok) / literal_total) : json(nullptr);
  report["R_le_Rtilde_frequency"] = literal_total ? json(static_cast<double>(relaxed_ok) / literal_total) : json(nullptr);
  json ev = json::array();
  for (const auto& [r, v] : curve) ev.push_back({{"r", r}, {"mean_error", mean(v)}, {"count", v.size()}});
  report["error_vs_r"] = ev;
  json et = json::array();
  for (const auto& [t, v] : R_by_t) {
    json row = {{"t", t + 1},
                {"mean_R", mean(v)},
                {"mean_Rtilde", mean(Rt_by_t[t])},
                {"mean_r_hat", mean(rhat_by_t[t])},
                {"mean_est_error", mean(est_by_t[t])}};
    row["mean_R_r0"] = R0_by_t.count(t) ? json(mean(R0_by_t[t])) : json(nullptr);
    et.push_back(row);
  }
  report["error_vs_t"] = et;
  return report;
}

json cmd_simulate(const ExperimentConfig& config, const fs::path& out) {
  const Simulation sim = simulate(config, config.base_seed);
  fs::path snap;
  if (config.snapshot_format == "edges") {
    snap = out / "snapshots.csv";
    write_edge_list(snap, sim.snapshots);
  } else {
    snap = out / "snapshots.bin";
    write_dense_binary(snap, sim.snapshots.A, sim.snapshots.diag_value);
  }
  write_memberships(out / "truth.csv", sim.memberships.all());
  write_dense_binary(out / "P.bin", sim.P, std::numeric_limits<double>::quiet_NaN());
  json cfg = config;
  write_json(out / "config.json", cfg);
  return {{"snapshots", snap.string()},
          {"truth", (out / "truth.csv").string()},
          {"P", (out / "P.bin").string()},
          {"n", config.model.n},
          {"T", config.model.T}};
}

json cmd_cluster(const fs::path& snapshots_path, const ExperimentConfig& config, const fs::path& out,
                 bool export_estimates) {
  const SnapshotSequence snapshots = read_snapshots(snapshots_path, config.model.diag_value);
  ExperimentConfig cfg = config;
  cfg.model.n = snapshots.n();
  cfg.model.T = snapshots.T();
  if (cfg.estimator.fixed_r && *cfg.estimator.fixed_r > cfg.model.T / 2) {
    throw WindowTooLarge("r exceeds floor(T/2) for this snapshot file");
  }
  const double c = resolve_constant(cfg);
  const std::vector<TimeResult> times = cluster_sequence(snapshots, cfg, c, cfg.base_seed, {}, export_estimates);

  write_labels(out / "labels.csv", times);
  json meta = json::array();
  for (const TimeResult& r : times) {
    std::vector<std::string> extra;
    if (r.K_hat_flag != ClusterCountFlag::None) extra.emplace_back(to_string(r.K_hat_flag));
    json m = clustering_metadata(r.t, r.clustering, r.K_hat, extra);
    m["r_hat"] = r.r_hat;
    if (r.trace) {
      m["lepskii_trace"] = (fs::path("traces") / trace_name(r.t)).string();
      write_lepskii_trace(out / "traces" / trace_name(r.t), *r.trace);
    }
    if (r.estimate) {
      char name[32];
      std::snprintf(name, sizeof name, "P_hat_t%04d", r.t + 1);
      const std::string stem = name;
      write_dense_binary(out / "estimates" / (stem + ".bin"), {r.estimate->values}, snapshots.diag_value);
      write_json(out / "estimates" / (stem + ".json"),
                 estimate_sidecar(*r.estimate, cfg.estimator.constant_mode, cfg.estimator.fixed_r ? 0.0 : c));
      m["estimate"] = (fs::path("estimates") / (stem + ".bin")).string();
    }
    meta.push_back(std::move(m));
  }
  write_json(out / "metadata.json",
             {{"constant_mode", cfg.estimator.constant_mode},
              {"constant", cfg.estimator.fixed_r ? json(nullptr) : json(c)},
              {"l", cfg.estimator.l},
              {"times", meta}});
  return {{"labels", (out / "labels.csv").string()}, {"metadata", (out / "metadata.json").string()},
          {"times", times.size()}};
}

json cmd_evaluate(const fs::path& labels_path, const fs::path& truth_path, const fs::path& out_csv,
                  const std::optional<fs::path>& metadata) {
  const MembershipSequence truth = read_memberships(truth_path);
  const std::map<int, Labels> hat = read_label_table(labels_path);
  std::map<int, std::pair<int, int>> extra;   // t -> (K_hat, r_hat)
  if (metadata) {
    const json meta = read_json(*metadata);
    const json& rows = meta.contains("times") ? meta.at("times") : meta;
    for (const json& m : rows) {
      const int t = m.at("t").get<int>() - 1;
      const int k = m.contains("K_hat") && !m.at("K_hat").is_null() ? m.at("K_hat").get<int>() : 0;
      const int r = m.contains("r_hat") ? m.at("r_hat").get<int>() : m.value("r_used", 0);
      extra[t] = {k, r};
    }
  }
  int K = truth.K();
  for (const auto& [t, labels] : hat) {
    if (t >= truth.T()) throw DimensionMismatch("labels refer to t = " + std::to_string(t + 1) + " beyond the truth");
    if (static_cast<int>(labels.size()) != truth.n()) throw DimensionMismatch("label and truth files disagree on n");
    K = std::max(K, *std::max_element(labels.begin(), labels.end()) + 1);
  }
  std::vector<MetricsRow> rows;
  std::vector<double> Rt;
  for (const auto& [t, labels] : hat) {
    MetricsRow row;
    row.t = t;
    row.R = overall_error(labels, truth.at(t), K);
    row.R_literal = 2.0 * row.R;
    row.Rtilde = community_error_detail(labels, truth.at(t), K, K > truth.K()).value;
    if (auto it = extra.find(t); it != extra.end()) {
      row.K_hat = it->second.first;
      row.r_hat = it->second.second;
    }
    Rt.push_back(row.Rtilde);
    rows.push_back(row);
  }
  if (rows.empty()) throw IoError("'" + labels_path.string() + "' holds no labels");
  write_metrics(out_csv, rows);
  double mean_R = 0.0;
  for (const MetricsRow& r : rows) mean_R += r.R / static_cast<double>(rows.size());
  return {{"metrics", out_csv.string()}, {"rows", rows.size()}, {"mean_R", mean_R}, {"max_Rtilde", max_errors(Rt)}};
}

json cmd_experiment(const ExperimentConfig& config) {
  config.validate();
  const fs::path out = config.output;
  json cfg = config;
  write_json(out / "config.json", cfg);

  double c = 0.0;
  const fs::path calib = out / "calibration.json";
  if (fs::exists(calib)) {
    c = read_json(calib).at("constant").get<double>();
  } else {
    c = resolve_constant(config);
    write_json(calib, {{"constant_mode", config.estimator.constant_mode},
                       {"constant", c},
                       {"calibrated", config.estimator.constant_mode == "empirical" && !config.estimator.c &&
                                          !config.estimator.fixed_r},
                       {"pilots", config.estimator.calibration_pilots},
                       {"quantile", config.estimator.calibration_quantile}});
  }

  parallel_for(config.replicates, config.threads, [&](int i) {
    const fs::path dir = replicate_dir(out, i);
    if (fs::exists(dir / "replicate.json")) return;
    const ReplicateResult rep = run_replicate(config, i, c);
    write_labels(dir / "labels.csv", rep.times);
    write_metrics(dir / "metrics.csv", metrics_rows(rep.times));
    write_json(dir / "replicate.json", to_json(rep));   // written last: marks completion
  });

  std::vector<ReplicateResult> reps;
  for (int i = 0; i < config.replicates; ++i) reps.push_back(replicate_from_json(read_json(replicate_dir(out, i) / "replicate.json")));
  json report = aggregate(config, reps);
  write_json(out / "report.json", report);

  std::ostringstream ev, et, kh;
  ev << "r,mean_error,count\n";
  for (const json& row : report.at("error_vs_r")) {
    ev << row.at("r").get<int>() << ',' << format_double(row.at("mean_error").get<double>()) << ','
       << row.at("count").get<int>() << '\n';
  }
  et << "t,mean_R,mean_Rtilde,mean_R_r0,mean_r_hat,mean_est_error\n";
  for (const json& row : report.at("error_vs_t")) {
    et << row.at("t").get<int>() << ',' << format_double(row.at("mean_R").get<double>()) << ','
       << format_double(row.at("mean_Rtilde").get<double>()) << ','
       << (row.at("mean_R_r0").is_null() ? std::string() : format_double(row.at("mean_R_r0").get<double>())) << ','
       << format_double(row.at("mean_r_hat").get<double>()) << ','
       << format_double(row.at("mean_est_error").get<double>()) << '\n';
  }
  kh << "K_hat,count\n";
  if (report.contains("K_hat")) {
    for (const json& row : report.at("K_hat").at("histogram")) {
      kh << row.at("K_hat").get<int>() << ',' << row.at("count").get<int>() << '\n';
    }
  }
  write_text(out / "error_vs_r.csv", ev.str());
  write_text(out / "error_vs_t.csv", et.str());
  write_text(out / "khat_hist.csv", kh.str());
  return report;
}

}  // namespace dsbm
