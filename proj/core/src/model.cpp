#include "dsbm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "dsbm/error.hpp"
#include "dsbm/rng.hpp"

namespace dsbm {

void DsbmParams::validate() const {
  if (n < 1) throw InvalidArgument("n must be positive");
  if (K < 1 || K > n) throw InvalidArgument("K must satisfy 1 <= K <= n");
  if (T < 1) throw InvalidArgument("T must be positive");
  if (s < 0 || s > n) throw InvalidArgument("s must satisfy 0 <= s <= n");
  if (!(alpha_n > 0.0 && alpha_n <= 1.0)) throw InvalidArgument("alpha_n must lie in (0, 1]");
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  if (!(L > 0.0)) throw InvalidArgument("L must be positive");
  if (!(diag_value >= 0.0) || !std::isfinite(diag_value)) throw InvalidArgument("diag_value must be finite and >= 0");
  if (theoretical_sparsity_check && n > 1) {
    const double floor_value = c0 * std::log(static_cast<double>(n)) / n;
    if (alpha_n < floor_value) {
      throw InvalidArgument("alpha_n = " + std::to_string(alpha_n) + " is below c0 log(n)/n = " +
                            std::to_string(floor_value));
    }
  }
}

MembershipSequence::MembershipSequence(int K, std::vector<Labels> labels) : K_(K), labels_(std::move(labels)) {
  if (K_ < 1) throw InvalidArgument("K must be positive");
  for (const Labels& row : labels_) {
    if (row.size() != labels_.front().size()) throw DimensionMismatch("label vectors differ in length");
    for (int v : row) {
      if (v < 0 || v >= K_) throw LabelOutOfRange("label " + std::to_string(v) + " outside [0, K)");
    }
  }
}

std::vector<int> MembershipSequence::class_sizes(int t) const {
  std::vector<int> sizes(static_cast<std::size_t>(K_), 0);
  for (int v : at(t)) ++sizes[static_cast<std::size_t>(v)];
  return sizes;
}

int MembershipSequence::n_max(int t) const {
  const auto sizes = class_sizes(t);
  return *std::max_element(sizes.begin(), sizes.end());
}

int MembershipSequence::n_min(int t) const {
  const auto sizes = class_sizes(t);
  return *std::min_element(sizes.begin(), sizes.end());
}

int MembershipSequence::n_max() const {
  int m = 0;
  for (int t = 0; t < T(); ++t) m = std::max(m, n_max(t));
  return m;
}

int MembershipSequence::hamming(int t) const {
  const Labels& a = at(t);
  const Labels& b = at(t + 1);
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

std::string_view to_string(ConnectivityFamily family) {
  switch (family) {
    case ConnectivityFamily::ConstantMatrix: return "constant";
    case ConnectivityFamily::AffineSinusoid: return "affine_sinusoid";
    case ConnectivityFamily::PolynomialSpline: return "polynomial_spline";
    case ConnectivityFamily::UserTable: return "user_table";
  }
  return "constant";
}

ConnectivityFamily connectivity_family_from_string(std::string_view name) {
  // Both the snake_case names written by to_string and the enum spellings are accepted.
  if (name == "constant" || name == "ConstantMatrix") return ConnectivityFamily::ConstantMatrix;
  if (name == "affine_sinusoid" || name == "AffineSinusoid") return ConnectivityFamily::AffineSinusoid;
  if (name == "polynomial_spline" || name == "PolynomialSpline") return ConnectivityFamily::PolynomialSpline;
  if (name == "user_table" || name == "UserTable") return ConnectivityFamily::UserTable;
  throw ConfigError("unknown connectivity family '" + std::string(name) + "'");
}

ConnectivitySpec ConnectivitySpec::constant(Matrix base, double alpha_n) {
  ConnectivitySpec spec;
  spec.family = ConnectivityFamily::ConstantMatrix;
  spec.alpha_n = alpha_n;
  spec.amplitude = Matrix::Zero(base.rows(), base.cols());
  spec.base = std::move(base);
  return spec;
}

ConnectivitySpec ConnectivitySpec::affine_sinusoid(Matrix base, Matrix amplitude, double alpha_n, double frequency,
                                                   double phase) {
  ConnectivitySpec spec;
  spec.family = ConnectivityFamily::AffineSinusoid;
  spec.alpha_n = alpha_n;
  spec.base = std::move(base);
  spec.amplitude = std::move(amplitude);
  spec.frequency = frequency;
  spec.phase = phase;
  return spec;
}

ConnectivitySpec ConnectivitySpec::polynomial_spline(Matrix base, Matrix amplitude, int degree,
                                                     std::vector<double> knots, std::vector<double> coeffs,
                                                     double alpha_n) {
  ConnectivitySpec spec;
  spec.family = ConnectivityFamily::PolynomialSpline;
  spec.alpha_n = alpha_n;
  spec.base = std::move(base);
  spec.amplitude = std::move(amplitude);
  spec.spline_degree = degree;
  spec.knots = std::move(knots);
  spec.knot_coeffs = std::move(coeffs);
  return spec;
}

ConnectivitySpec ConnectivitySpec::user_table(std::vector<Matrix> table, double alpha_n) {
  ConnectivitySpec spec;
  spec.family = ConnectivityFamily::UserTable;
  spec.alpha_n = alpha_n;
  spec.table = std::move(table);
  return spec;
}

int ConnectivitySpec::K() const {
  if (family == ConnectivityFamily::UserTable) {
    return table.empty() ? 0 : static_cast<int>(table.front().rows());
  }
  return static_cast<int>(base.rows());
}

Matrix ConnectivitySpec::shape(double x) const {
  switch (family) {
    case ConnectivityFamily::ConstantMatrix:
      return base;
    case ConnectivityFamily::AffineSinusoid:
      return base + amplitude * std::sin(2.0 * std::numbers::pi * frequency * x + phase);
    case ConnectivityFamily::PolynomialSpline: {
      double g = 0.0;
      for (std::size_t m = 0; m < knots.size(); ++m) {
        const double d = x - knots[m];
        if (d > 0.0) g += knot_coeffs[m] * std::pow(d, spline_degree);
      }
      return base + amplitude * g;
    }
    case ConnectivityFamily::UserTable: {
      // Grid point t (1-based) sits at x = t / T.
      const int T = static_cast<int>(table.size());
      const double pos = x * T;
      const double nearest = std::round(pos);
      if (std::abs(pos - nearest) < 1e-9 && nearest >= 1 && nearest <= T) {
        return table[static_cast<std::size_t>(nearest) - 1];
      }
      if (pos <= 1.0) return table.front();
      if (pos >= T) return table.back();
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const double frac = pos - static_cast<double>(lo);
      return (1.0 - frac) * table[lo - 1] + frac * table[lo];
    }
  }
  return base;
}

double ConnectivitySpec::holder_beta() const {
  switch (family) {
    case ConnectivityFamily::ConstantMatrix: return std::numeric_limits<double>::infinity();
    case ConnectivityFamily::AffineSinusoid: return 2.0;
    case ConnectivityFamily::PolynomialSpline: return static_cast<double>(spline_degree);
    case ConnectivityFamily::UserTable: return 1.0;
  }
  return 1.0;
}

double ConnectivitySpec::holder_L() const {
  switch (family) {
    case ConnectivityFamily::ConstantMatrix: return 0.0;
    case ConnectivityFamily::AffineSinusoid: {
      const double w = 2.0 * std::numbers::pi * frequency;
      return w * w * amplitude.cwiseAbs().maxCoeff();
    }
    case ConnectivityFamily::PolynomialSpline: {
      double factorial = 1.0;
      for (int k = 2; k <= spline_degree; ++k) factorial *= k;
      double coeff_sum = 0.0;
      for (double c : knot_coeffs) coeff_sum += std::abs(c);
      return factorial * coeff_sum * amplitude.cwiseAbs().maxCoeff();
    }
    case ConnectivityFamily::UserTable: {
      double slope = 0.0;
      for (std::size_t t = 1; t < table.size(); ++t) {
        slope = std::max(slope, (table[t] - table[t - 1]).cwiseAbs().maxCoeff() * static_cast<double>(table.size()));
      }
      return slope;
    }
  }
  return 0.0;
}

void ConnectivitySpec::validate() const {
  if (!(alpha_n > 0.0 && alpha_n <= 1.0)) throw InvalidArgument("connectivity alpha_n must lie in (0, 1]");
  const int k = K();
  if (k < 1) throw InvalidArgument("connectivity has no classes");
  auto check_square_symmetric = [k](const Matrix& m, const char* what) {
    if (m.rows() != k || m.cols() != k) throw DimensionMismatch(std::string(what) + " must be K x K");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw InvalidArgument(std::string(what) + " must be symmetric");
    }
  };
  if (family == ConnectivityFamily::UserTable) {
    for (const Matrix& m : table) check_square_symmetric(m, "table entry");
    return;
  }
  check_square_symmetric(base, "base");
  if (family != ConnectivityFamily::ConstantMatrix) check_square_symmetric(amplitude, "amplitude");
  if (family == ConnectivityFamily::PolynomialSpline) {
    if (spline_degree < 1) throw InvalidArgument("spline degree must be >= 1");
    if (knots.size() != knot_coeffs.size()) throw DimensionMismatch("knots and knot_coeffs differ in length");
  }
}

ConnectivityReport connectivity_report(const ConnectivitySpec& spec, int T) {
  ConnectivityReport report;
  report.beta = spec.holder_beta();
  report.L = spec.holder_L();
  report.lambda_min_margin = std::numeric_limits<double>::infinity();
  for (int t = 0; t < T; ++t) {
    const Matrix H = spec.shape(static_cast<double>(t + 1) / T);
    const double max_h = H.maxCoeff();
    report.c_alpha = std::max({report.c_alpha, max_h, max_h > 0 ? 1.0 / max_h : std::numeric_limits<double>::infinity()});
    Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
    report.lambda_min_margin = std::min(report.lambda_min_margin, es.eigenvalues()(0));
  }
  return report;
}

Matrix eval_connectivity(const ConnectivitySpec& spec, int t, int T) {
  if (T < 1 || t < 0 || t >= T) throw OutOfRange("time index outside [0, T)");
  Matrix B = spec.alpha_n * spec.shape(static_cast<double>(t + 1) / T);
  if (B.minCoeff() < 0.0 || B.maxCoeff() > 1.0) {
    throw OutOfRange("connectivity at t = " + std::to_string(t) + " leaves [0, 1] (min " +
                     std::to_string(B.minCoeff()) + ", max " + std::to_string(B.maxCoeff()) + ")");
  }
  return B;
}

Matrix build_probability_matrix(const Labels& labels, const Matrix& B) {
  if (B.rows() != B.cols()) throw DimensionMismatch("B must be square");
  const auto n = static_cast<Eigen::Index>(labels.size());
  const Eigen::Index K = B.rows();
  for (int v : labels) {
    if (v < 0 || v >= K) throw DimensionMismatch("label " + std::to_string(v) + " has no row in B");
  }
  Matrix P(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto lj = labels[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < n; ++i) P(i, j) = B(labels[static_cast<std::size_t>(i)], lj);
  }
  return P;
}

Labels balanced_labels(int n, int K) {
  Labels labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    labels[static_cast<std::size_t>(i)] = static_cast<int>(static_cast<long long>(i) * K / n);
  }
  return labels;
}

MembershipSequence simulate_memberships(const DsbmParams& params, const std::optional<Labels>& initial,
                                        std::uint64_t seed) {
  params.validate();
  Labels current = initial ? *initial : balanced_labels(params.n, params.K);
  if (static_cast<int>(current.size()) != params.n) throw InvalidInitial("initial labels must have length n");
  for (int v : current) {
    if (v < 0 || v >= params.K) throw InvalidInitial("initial label " + std::to_string(v) + " outside [0, K)");
  }

  Rng rng(seed);
  std::vector<int> sizes(static_cast<std::size_t>(params.K), 0);
  for (int v : current) ++sizes[static_cast<std::size_t>(v)];

  std::vector<Labels> labels;
  labels.reserve(static_cast<std::size_t>(params.T));
  labels.push_back(current);

  std::vector<int> pool(static_cast<std::size_t>(params.n));
  for (int t = 1; t < params.T; ++t) {
    const auto moves = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(params.s) + 1));
    std::iota(pool.begin(), pool.end(), 0);
    int made = 0;
    // Partial Fisher-Yates: pool[0..drawn) holds the nodes drawn so far.
    for (int drawn = 0; drawn < params.n && made < moves && params.K > 1; ++drawn) {
      const auto pick = drawn + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(params.n - drawn)));
      std::swap(pool[static_cast<std::size_t>(drawn)], pool[static_cast<std::size_t>(pick)]);
      const int node = pool[static_cast<std::size_t>(drawn)];
      const int from = current[static_cast<std::size_t>(node)];
      if (params.enforce_nonempty && sizes[static_cast<std::size_t>(from)] <= 1) continue;
      auto to = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(params.K - 1)));
      if (to >= from) ++to;
      current[static_cast<std::size_t>(node)] = to;
      --sizes[static_cast<std::size_t>(from)];
      ++sizes[static_cast<std::size_t>(to)];
      ++made;
    }
    labels.push_back(current);
  }
  return MembershipSequence(params.K, std::move(labels));
}

ProbabilityTensor probability_tensor(const MembershipSequence& memberships, const ConnectivitySpec& spec) {
  if (spec.K() != memberships.K()) throw DimensionMismatch("connectivity K differs from membership K");
  ProbabilityTensor P;
  P.reserve(static_cast<std::size_t>(memberships.T()));
  for (int t = 0; t < memberships.T(); ++t) {
    P.push_back(build_probability_matrix(memberships.at(t), eval_connectivity(spec, t, memberships.T())));
  }
  return P;
}

SnapshotSequence sample_adjacency(const ProbabilityTensor& P, double diag_value, std::uint64_t seed) {
  SnapshotSequence out;
  out.diag_value = diag_value;
  out.A.reserve(P.size());
  for (std::size_t t = 0; t < P.size(); ++t) {
    const Matrix& Pt = P[t];
    const Eigen::Index n = Pt.rows();
    if (Pt.cols() != n) throw DimensionMismatch("probability matrix must be square");
    if (!P.empty() && n != P.front().rows()) throw DimensionMismatch("probability matrices differ in size");
    Rng rng(derive_seed(seed, t));
    Matrix A(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      A(j, j) = diag_value;
      for (Eigen::Index i = 0; i < j; ++i) {
        const double p = Pt(i, j);
        if (!(p >= 0.0 && p <= 1.0)) throw OutOfRange("edge probability outside [0, 1]");
        const double a = uniform01(rng) < p ? 1.0 : 0.0;
        A(i, j) = a;
        A(j, i) = a;
      }
    }
    out.A.push_back(std::move(A));
  }
  return out;
}

ProbabilityTensor expected_adjacency(const ProbabilityTensor& P, double diag_value) {
  ProbabilityTensor out = P;
  for (Matrix& m : out) m.diagonal().setConstant(diag_value);
  return out;
}

}  // namespace dsbm
