#pragma once

// Least-squares helpers shared by the spectral analysis.

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>

namespace attotip::fitting {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LinearFit {
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;  // residual variance * (X^T X)^-1; zero without dof
  double residual_sum = 0.0;   // sum of squared residuals
  int dof = 0;
};

/// Ordinary least squares y ~ X c via column-pivoted QR. Throws FitError if X
/// is rank deficient.
LinearFit linear_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

struct NonlinearFit {
  Eigen::VectorXd parameters;
  double residual_sum = 0.0;
  int iterations = 0;
};

/// Residual vector r(p) of fixed length; the fit minimises |r|^2.
using Residual = std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r)>;

/// Levenberg-Marquardt with forward-difference Jacobian. Throws FitError if
/// the minimiser reports a failure or produces non-finite parameters.
NonlinearFit levenberg_marquardt(const Residual& residual, int n_residuals, const Eigen::VectorXd& start,
                                 int max_evaluations = 4000);

}  // namespace attotip::fitting
