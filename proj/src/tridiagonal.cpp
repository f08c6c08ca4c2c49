#include "attotip/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace attotip::tridiagonal {

std::size_t count_below(const SymTridiagonal& m, double x) {
  // Signs of the LDL^T pivots of (M - x I).
  const std::size_t n = m.diag.size();
  std::size_t count = 0;
  double d = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double b2 = i == 0 ? 0.0 : m.off[i - 1] * m.off[i - 1];
    d = (m.diag[i] - x) - (i == 0 ? 0.0 : b2 / d);
    if (d == 0.0) d = -std::numeric_limits<double>::epsilon() * (std::abs(x) + 1.0);
    if (d < 0.0) ++count;
  }
  return count;
}

double lowest_eigenvalue(const SymTridiagonal& m, double tol) {
  const std::size_t n = m.diag.size();
  if (n == 0 || m.off.size() + 1 != n) throw std::invalid_argument("lowest_eigenvalue: bad matrix shape");
  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(m.off[i - 1]) : 0.0) + (i + 1 < n ? std::abs(m.off[i]) : 0.0);
    lo = std::min(lo, m.diag[i] - r);
    hi = std::max(hi, m.diag[i] + r);
  }
  const double scale = std::max(std::abs(lo), std::abs(hi));
  if (tol <= 0.0) tol = 4.0 * std::numeric_limits<double>::epsilon() * scale;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (count_below(m, mid) >= 1)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> eigenvector(const SymTridiagonal& m, double lambda) {
  const std::size_t n = m.diag.size();
  double scale = 0.0;
  for (double d : m.diag) scale = std::max(scale, std::abs(d));
  // Nudge the shift off the eigenvalue so the factorisation stays regular.
  const double shift = lambda - 1e-12 * std::max(scale, 1.0);

  std::vector<double> lower(n, 0.0), upper(n, 0.0), diag(n), scratch(n);
  for (std::size_t i = 0; i < n; ++i) {
    diag[i] = m.diag[i] - shift;
    if (i > 0) lower[i] = m.off[i - 1];
    if (i + 1 < n) upper[i] = m.off[i];
  }
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> prev;
  for (int iter = 0; iter < 8; ++iter) {
    prev = x;
    solve<double>(lower, diag, upper, x, scratch);
    double norm = 0.0;
    for (double v : x) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm)) throw std::runtime_error("eigenvector: inverse iteration failed");
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] /= norm;
      dot += x[i] * prev[i];
    }
    if (iter >= 2 && std::abs(std::abs(dot) - 1.0) < 1e-14) break;
  }
  // Fix the sign so the largest component is positive.
  const auto big = std::max_element(x.begin(), x.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  if (*big < 0.0)
    for (double& v : x) v = -v;
  return x;
}

}  // namespace attotip::tridiagonal
