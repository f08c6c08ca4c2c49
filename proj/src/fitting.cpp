#include "attotip/fitting.hpp"

#include <cmath>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

namespace attotip::fitting {

LinearFit linear_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw FitError("linear_least_squares: row count mismatch");
  if (x.rows() < x.cols()) throw FitError("linear_least_squares: fewer observations than coefficients");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-12);
  if (qr.rank() < x.cols()) throw FitError("linear_least_squares: design matrix is rank deficient");
  LinearFit fit;
  fit.coefficients = qr.solve(y);
  fit.residual_sum = (x * fit.coefficients - y).squaredNorm();
  fit.dof = static_cast<int>(x.rows() - x.cols());
  const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
  fit.covariance = fit.dof > 0 ? Eigen::MatrixXd(xtx_inv * (fit.residual_sum / fit.dof))
                               : Eigen::MatrixXd::Zero(x.cols(), x.cols());
  return fit;
}

namespace {

struct Functor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const Residual* residual;
  int n_inputs;
  int n_values;

  int inputs() const { return n_inputs; }
  int values() const { return n_values; }
  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    (*residual)(p, r);
    return 0;
  }
};

}  // namespace

NonlinearFit levenberg_marquardt(const Residual& residual, int n_residuals, const Eigen::VectorXd& start,
                                 int max_evaluations) {
  if (n_residuals < start.size()) throw FitError("levenberg_marquardt: more parameters than residuals");
  Functor f{&residual, static_cast<int>(start.size()), n_residuals};
  Eigen::NumericalDiff<Functor> numdiff(f);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<Functor>> lm(numdiff);
  lm.parameters.maxfev = max_evaluations;
  lm.parameters.xtol = 1e-12;
  lm.parameters.ftol = 1e-14;
  Eigen::VectorXd p = start;
  const auto status = lm.minimize(p);
  using S = Eigen::LevenbergMarquardtSpace::Status;
  if (status == S::ImproperInputParameters || status == S::UserAsked)
    throw FitError("levenberg_marquardt: minimiser rejected the problem");
  for (int i = 0; i < p.size(); ++i)
    if (!std::isfinite(p[i])) throw FitError("levenberg_marquardt: non-finite parameters");
  NonlinearFit out;
  out.parameters = p;
  Eigen::VectorXd r(n_residuals);
  residual(p, r);
  out.residual_sum = r.squaredNorm();
  out.iterations = static_cast<int>(lm.iter);
  return out;
}

}  // namespace attotip::fitting
