#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dsbm/config.hpp"
#include "dsbm/error.hpp"
#include "dsbm/harness.hpp"
#include "dsbm/io.hpp"
#include "dsbm/kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string output;
  std::vector<std::string> sets;   // key.path=value
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "JSON experiment config");
  if (config_required) opt->required();
  cmd->add_option("--seed", c.seed, "base seed");
  cmd->add_option("--threads", c.threads, "worker threads");
  cmd->add_option("--output", c.output, "output location");
  cmd->add_option("--set", c.sets, "override a config entry, e.g. --set estimator.l=2 (value parsed as JSON)");
}

/// Applies --set overrides to the raw JSON before it is parsed.
void apply_sets(json& j, const std::vector<std::string>& sets) {
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw dsbm::ConfigError("--set expects key=value, got '" + s + "'");
    std::string pointer = "/" + s.substr(0, eq);
    for (char& ch : pointer) {
      if (ch == '.') ch = '/';
    }
    const std::string text = s.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    j[json::json_pointer(pointer)] = value;
  }
}

dsbm::ExperimentConfig load(const Common& c) {
  json j;
  try {
    j = dsbm::read_json(c.config);
  } catch (const dsbm::IoError& e) {
    if (fs::exists(c.config)) throw dsbm::ConfigError(e.what());
    throw;
  }
  apply_sets(j, c.sets);
  dsbm::ExperimentConfig cfg;
  try {
    cfg = j.get<dsbm::ExperimentConfig>();
  } catch (const json::exception& e) {
    throw dsbm::ConfigError(e.what());
  }
  if (c.seed) cfg.base_seed = *c.seed;
  if (c.threads) cfg.threads = *c.threads;
  if (!c.output.empty()) cfg.output = c.output;
  return cfg;
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

int run_kernel(const std::string& window, int r, int l, bool as_json) {
  const dsbm::DiscreteKernel k = dsbm::build_kernel(dsbm::window_type_from_string(window), r, l);
  const std::vector<double> residual = dsbm::verify_moments(k);
  if (as_json) {
    json j = k;
    j["moment_residuals"] = residual;
    print(j);
    return kOk;
  }
  std::printf("window %s  r %d  l %d  |F| %d  w_max %s\n", std::string(dsbm::to_string(k.window)).c_str(), r, l,
              k.size(), dsbm::format_double(k.w_max()).c_str());
  std::printf("%8s  %s\n", "offset", "weight");
  for (int j = 0; j < k.size(); ++j) {
    std::printf("%8d  %s\n", k.first_offset() + j, dsbm::format_double(k.weights[static_cast<std::size_t>(j)]).c_str());
  }
  std::printf("%8s  %s\n", "moment", "residual");
  for (std::size_t m = 0; m < residual.size(); ++m) std::printf("%8zu  %.3e\n", m, residual[m]);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic stochastic block model: simulation, smoothing, clustering, evaluation"};
  app.require_subcommand(1);

  Common sim_opts;
  auto* sim = app.add_subcommand("simulate", "draw memberships, P and snapshots from a config");
  add_common(sim, sim_opts, true);
  std::string format;
  sim->add_option("--format", format, "snapshot format")->check(CLI::IsMember({"binary", "edges"}));

  Common cl_opts;
  auto* cl = app.add_subcommand("cluster", "estimate P_t and cluster each snapshot");
  add_common(cl, cl_opts, true);
  std::string snapshots;
  cl->add_option("--snapshots", snapshots, "dense binary or edge-list snapshot file")->required();
  std::string r_opt;
  cl->add_option("--r", r_opt, "fixed window half-width or 'adaptive'");
  std::optional<int> K_opt;
  cl->add_option("--K", K_opt, "number of communities");
  bool estimate_k = false;
  cl->add_flag("--estimate-k", estimate_k, "estimate K per time and record it");
  std::optional<double> c_opt;
  cl->add_option("--c", c_opt, "empirical threshold constant (skips calibration)");
  bool export_estimates = false;
  cl->add_flag("--export-estimates", export_estimates, "write each P_hat as dense binary plus JSON sidecar");

  std::string labels, truth, metadata;
  auto* ev = app.add_subcommand("evaluate", "score labels against a truth file");
  ev->add_option("--labels", labels, "labels CSV t,node,label")->required();
  ev->add_option("--truth", truth, "truth CSV t,node,label")->required();
  ev->add_option("--metadata", metadata, "metadata.json from cluster, for K_hat and r_hat columns");
  std::string metrics_out = "metrics.csv";
  ev->add_option("--output", metrics_out, "metrics CSV path");

  Common ex_opts;
  auto* ex = app.add_subcommand("experiment", "Monte Carlo replicates with aggregated report");
  add_common(ex, ex_opts, true);
  std::optional<int> replicates;
  ex->add_option("--replicates", replicates, "number of replicates");

  auto* ke = app.add_subcommand("kernel", "print kernel weights and moment residuals");
  std::string window = "interior";
  int kr = 1, kl = 0;
  bool kjson = false;
  ke->add_option("--window", window, "interior, left or right")->check(CLI::IsMember({"interior", "left", "right"}));
  ke->add_option("--r", kr, "half-width")->required();
  ke->add_option("--l", kl, "order")->required();
  ke->add_flag("--json", kjson, "emit JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*sim) {
      dsbm::ExperimentConfig cfg = load(sim_opts);
      if (!format.empty()) cfg.snapshot_format = format;
      print(dsbm::cmd_simulate(cfg, cfg.output));
    } else if (*cl) {
      dsbm::ExperimentConfig cfg = load(cl_opts);
      if (!r_opt.empty()) {
        if (r_opt == "adaptive") {
          cfg.estimator.fixed_r.reset();
        } else {
          try {
            cfg.estimator.fixed_r = std::stoi(r_opt);
          } catch (const std::exception&) {
            throw dsbm::ConfigError("--r must be an integer or 'adaptive'");
          }
        }
      }
      if (K_opt) cfg.clustering.K = *K_opt;
      if (estimate_k) cfg.clustering.estimate_k = true;
      if (c_opt) cfg.estimator.c = *c_opt;
      print(dsbm::cmd_cluster(snapshots, cfg, cfg.output, export_estimates));
    } else if (*ev) {
      std::optional<fs::path> meta;
      if (!metadata.empty()) meta = metadata;
      print(dsbm::cmd_evaluate(labels, truth, metrics_out, meta));
    } else if (*ex) {
      dsbm::ExperimentConfig cfg = load(ex_opts);
      if (replicates) cfg.replicates = *replicates;
      print(dsbm::cmd_experiment(cfg));
    } else if (*ke) {
      return run_kernel(window, kr, kl, kjson);
    }
  } catch (const dsbm::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const dsbm::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const dsbm::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
