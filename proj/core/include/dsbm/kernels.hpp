#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace dsbm {

/// Which side of the time axis a smoothing window may extend to.
///   Interior      offsets {-r, ..., r}
///   LeftBoundary  offsets {0, ..., r}   (first r time points)
///   RightBoundary offsets {-r, ..., 0}  (last r time points)
enum class WindowType { Interior, LeftBoundary, RightBoundary };

std::string_view to_string(WindowType window);
WindowType window_type_from_string(std::string_view name);

/// Offsets of a window in increasing order.
std::vector<int> window_offsets(WindowType window, int r);

/// Weights of an order-l discrete kernel over an integer window.
///
/// For every k in 0..l the kernel satisfies
///     (1/|F|) * sum_{i in F} W(i) * i^k = [k == 0]
/// where F is the window. `weights[j]` is the weight at offset
/// `first_offset() + j`.
struct DiscreteKernel {
  WindowType window = WindowType::Interior;
  int r = 0;
  int l = 0;
  std::vector<double> weights;

  int first_offset() const { return window == WindowType::LeftBoundary ? 0 : -r; }
  int size() const { return static_cast<int>(weights.size()); }
  double weight(int offset) const { return weights.at(static_cast<std::size_t>(offset - first_offset())); }
  std::vector<int> offsets() const { return window_offsets(window, r); }
  double w_max() const;
};

/// r^{-(h+1)} * sum_{i=1}^{r} i^h, with the convention P_0 = 1.
double power_sum_poly(int h, int r);

/// Builds W^{(window)}_{r,l} by solving the moment system.
///
/// Interior kernels are even polynomials in i of degree 2*ceil(l/2); boundary
/// kernels are polynomials of degree l. Small systems (r <= 32, l <= 6) are
/// solved in exact rational arithmetic, larger ones by partially pivoted LU.
/// r == 0 always yields the single weight {1}.
///
/// Throws SingularMomentSystem when the window has too few distinct points
/// for the requested order.
DiscreteKernel build_kernel(WindowType window, int r, int l);

/// residual[k] = (1/|F|) sum_i i^k W(i) - [k == 0], for k = 0..l.
std::vector<double> verify_moments(const DiscreteKernel& kernel);

void to_json(nlohmann::json& j, const DiscreteKernel& kernel);
void from_json(const nlohmann::json& j, DiscreteKernel& kernel);

}  // namespace dsbm
