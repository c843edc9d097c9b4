#include "dsbm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "dsbm/error.hpp"

namespace dsbm {

namespace {

using Rational = boost::multiprecision::cpp_rational;

constexpr int kExactMaxR = 32;
constexpr int kExactMaxL = 6;
constexpr double kMinReciprocalCondition = 1e-12;

// Exponents of the polynomial basis the kernel is expanded in, and the
// moment orders k whose equations pin down its coefficients. Interior kernels
// are even, so odd moments vanish on their own.
struct MomentLayout {
  std::vector<int> basis_powers;
  std::vector<int> moment_orders;
};

MomentLayout layout_for(WindowType window, int l) {
  MomentLayout layout;
  if (window == WindowType::Interior) {
    const int m = (l + 1) / 2;
    for (int j = 0; j <= m; ++j) {
      layout.basis_powers.push_back(2 * j);
      layout.moment_orders.push_back(2 * j);
    }
  } else {
    for (int j = 0; j <= l; ++j) {
      layout.basis_powers.push_back(j);
      layout.moment_orders.push_back(j);
    }
  }
  return layout;
}

Rational int_pow(long long base, int exp) {
  Rational result = 1;
  for (int e = 0; e < exp; ++e) result *= base;
  return result;
}

// Gauss-Jordan elimination over the rationals. Returns false if singular.
bool solve_exact(std::vector<std::vector<Rational>>& a, std::vector<Rational>& b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && a[pivot][col] == 0) ++pivot;
    if (pivot == n) return false;
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (std::size_t row = 0; row < n; ++row) {
      if (row == col || a[row][col] == 0) continue;
      const Rational factor = a[row][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[row][k] -= factor * a[col][k];
      b[row] -= factor * b[col];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return true;
}

std::vector<double> exact_weights(const std::vector<int>& offsets, const MomentLayout& layout) {
  const std::size_t unknowns = layout.basis_powers.size();
  std::vector<std::vector<Rational>> system(unknowns, std::vector<Rational>(unknowns));
  std::vector<Rational> rhs(unknowns, Rational(0));
  rhs[0] = Rational(static_cast<long long>(offsets.size()));

  for (std::size_t eq = 0; eq < unknowns; ++eq) {
    for (std::size_t j = 0; j < unknowns; ++j) {
      const int power = layout.moment_orders[eq] + layout.basis_powers[j];
      Rational sum = 0;
      for (int i : offsets) sum += int_pow(i, power);
      system[eq][j] = sum;
    }
  }
  if (!solve_exact(system, rhs)) {
    throw SingularMomentSystem("moment system is singular for this window size and order");
  }

  std::vector<double> weights;
  weights.reserve(offsets.size());
  for (int i : offsets) {
    Rational w = 0;
    for (std::size_t j = 0; j < unknowns; ++j) w += rhs[j] * int_pow(i, layout.basis_powers[j]);
    weights.push_back(w.convert_to<double>());
  }
  return weights;
}

// Double-precision route on the scaled basis (i/r)^p, which keeps the entries
// of the moment matrix O(|F|) regardless of r.
std::vector<double> floating_weights(const std::vector<int>& offsets, const MomentLayout& layout, int r) {
  const auto unknowns = static_cast<Eigen::Index>(layout.basis_powers.size());
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(unknowns, unknowns);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknowns);
  rhs(0) = static_cast<double>(offsets.size());
  const double scale = 1.0 / r;

  for (Eigen::Index eq = 0; eq < unknowns; ++eq) {
    for (Eigen::Index j = 0; j < unknowns; ++j) {
      const int power = layout.moment_orders[eq] + layout.basis_powers[j];
      double sum = 0.0;
      for (int i : offsets) sum += std::pow(i * scale, power);
      system(eq, j) = sum;
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  if (!(lu.rcond() > kMinReciprocalCondition)) {
    throw SingularMomentSystem("moment system is numerically singular (rcond " + std::to_string(lu.rcond()) + ")");
  }
  const Eigen::VectorXd coeffs = lu.solve(rhs);

  std::vector<double> weights;
  weights.reserve(offsets.size());
  for (int i : offsets) {
    double w = 0.0;
    for (Eigen::Index j = 0; j < unknowns; ++j) w += coeffs(j) * std::pow(i * scale, layout.basis_powers[j]);
    weights.push_back(w);
  }
  return weights;
}

}  // namespace

std::string_view to_string(WindowType window) {
  switch (window) {
    case WindowType::Interior: return "interior";
    case WindowType::LeftBoundary: return "left";
    case WindowType::RightBoundary: return "right";
  }
  return "interior";
}

WindowType window_type_from_string(std::string_view name) {
  if (name == "interior" || name == "1") return WindowType::Interior;
  if (name == "left" || name == "2") return WindowType::LeftBoundary;
  if (name == "right" || name == "3") return WindowType::RightBoundary;
  throw InvalidArgument("unknown window type '" + std::string(name) + "' (expected interior, left or right)");
}

std::vector<int> window_offsets(WindowType window, int r) {
  std::vector<int> offsets;
  const int lo = window == WindowType::LeftBoundary ? 0 : -r;
  const int hi = window == WindowType::RightBoundary ? 0 : r;
  offsets.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (int i = lo; i <= hi; ++i) offsets.push_back(i);
  return offsets;
}

double DiscreteKernel::w_max() const {
  double m = 0.0;
  for (double w : weights) m = std::max(m, std::abs(w));
  return m;
}

double power_sum_poly(int h, int r) {
  if (h < 0 || r < 1) throw InvalidArgument("power_sum_poly requires h >= 0 and r >= 1");
  if (h == 0) return 1.0;
  long double sum = 0.0L;
  for (int i = 1; i <= r; ++i) sum += std::pow(static_cast<long double>(i) / r, h);
  return static_cast<double>(sum / r);
}

DiscreteKernel build_kernel(WindowType window, int r, int l) {
  if (r < 0 || l < 0) throw InvalidArgument("kernel half-width and order must be nonnegative");

  DiscreteKernel kernel{window, r, l, {}};
  if (r == 0) {
    kernel.weights = {1.0};
    return kernel;
  }

  const MomentLayout layout = layout_for(window, l);
  const std::vector<int> offsets = window_offsets(window, r);
  if (offsets.size() < layout.basis_powers.size()) {
    throw SingularMomentSystem("window with " + std::to_string(offsets.size()) + " points cannot carry " +
                               std::to_string(layout.basis_powers.size()) + " kernel coefficients");
  }

  if (r <= kExactMaxR && l <= kExactMaxL) {
    kernel.weights = exact_weights(offsets, layout);
  } else {
    kernel.weights = floating_weights(offsets, layout, r);
  }
  return kernel;
}

std::vector<double> verify_moments(const DiscreteKernel& kernel) {
  const std::vector<int> offsets = kernel.offsets();
  if (offsets.size() != kernel.weights.size()) {
    throw DimensionMismatch("kernel has " + std::to_string(kernel.weights.size()) + " weights for " +
                            std::to_string(offsets.size()) + " offsets");
  }
  std::vector<double> residuals;
  residuals.reserve(static_cast<std::size_t>(kernel.l) + 1);
  const long double card = static_cast<long double>(offsets.size());
  for (int k = 0; k <= kernel.l; ++k) {
    long double sum = 0.0L;
    for (std::size_t idx = 0; idx < offsets.size(); ++idx) {
      sum += std::pow(static_cast<long double>(offsets[idx]), k) * kernel.weights[idx];
    }
    residuals.push_back(static_cast<double>(sum / card - (k == 0 ? 1.0L : 0.0L)));
  }
  return residuals;
}

void to_json(nlohmann::json& j, const DiscreteKernel& kernel) {
  j = nlohmann::json{{"window", std::string(to_string(kernel.window))},
                     {"r", kernel.r},
                     {"l", kernel.l},
                     {"weights", kernel.weights}};
}

void from_json(const nlohmann::json& j, DiscreteKernel& kernel) {
  kernel.window = window_type_from_string(j.at("window").get<std::string>());
  kernel.r = j.at("r").get<int>();
  kernel.l = j.at("l").get<int>();
  kernel.weights = j.at("weights").get<std::vector<double>>();
  if (kernel.weights.size() != window_offsets(kernel.window, kernel.r).size()) {
    throw DimensionMismatch("kernel JSON weight count does not match its window");
  }
}

}  // namespace dsbm
