#pragma once

// Tridiagonal kernels: Thomas solve, Sturm-sequence bisection for the lowest
// eigenvalue of a symmetric tridiagonal matrix, and inverse iteration.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace attotip::tridiagonal {

struct SymTridiagonal {
  std::vector<double> diag;
  std::vector<double> off;  // size diag.size() - 1
};

/// Number of eigenvalues strictly below x.
std::size_t count_below(const SymTridiagonal& m, double x);

/// Lowest eigenvalue by bisection on the Sturm count, to absolute tolerance
/// `tol` (default: a few ulps of the Gershgorin radius).
double lowest_eigenvalue(const SymTridiagonal& m, double tol = 0.0);

/// Unit-norm (Euclidean) eigenvector for an eigenvalue estimate by inverse
/// iteration. Throws std::runtime_error if the iteration does not settle.
std::vector<double> eigenvector(const SymTridiagonal& m, double lambda);

/// Solves a tridiagonal system in place (Thomas algorithm, no pivoting).
/// `lower[i]` couples row i to i-1 (lower[0] unused), `upper[i]` row i to i+1.
template <class T>
void solve(std::span<const T> lower, std::span<const T> diag, std::span<const T> upper, std::span<T> rhs,
           std::span<T> scratch) {
  const std::size_t n = diag.size();
  if (rhs.size() != n || scratch.size() < n || lower.size() != n || upper.size() != n)
    throw std::invalid_argument("tridiagonal::solve: size mismatch");
  if (n == 0) return;
  T inv = T(1) / diag[0];
  scratch[0] = upper[0] * inv;
  rhs[0] *= inv;
  for (std::size_t i = 1; i < n; ++i) {
    inv = T(1) / (diag[i] - lower[i] * scratch[i - 1]);
    scratch[i] = upper[i] * inv;
    rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) * inv;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scratch[i] * rhs[i + 1];
}

}  // namespace attotip::tridiagonal
