#include "attotip/field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "attotip/units.hpp"

namespace attotip::field {

namespace {

constexpr double kPhaseLattice = 4294967296.0;  // 2^32

// 4-point Gauss-Legendre on [0, 1].
constexpr std::array<double, 4> kGlNodes = {0.069431844202973713, 0.33000947820757187,
                                            0.66999052179242813, 0.93056815579702629};
constexpr std::array<double, 4> kGlWeights = {0.17392742256872693, 0.32607257743127307,
                                              0.32607257743127307, 0.17392742256872693};

void check_params(const PulseParams& p) {
  if (!(p.wavelength > 0.0) || !std::isfinite(p.wavelength))
    throw std::invalid_argument("pulse.wavelength must be positive");
  if (!(p.fwhm_duration > 0.0) || !std::isfinite(p.fwhm_duration))
    throw std::invalid_argument("pulse.fwhm_duration must be positive");
  if (!(p.peak_field >= 0.0) || !std::isfinite(p.peak_field))
    throw std::invalid_argument("pulse.peak_field must be non-negative");
  if (!std::isfinite(p.ce_phase)) throw std::invalid_argument("pulse.ce_phase must be finite");
}

}  // namespace

double canonical_phase(double phi) {
  const double two_pi = 2.0 * units::pi;
  double r = std::remainder(phi, two_pi);
  r = std::nearbyint(r * kPhaseLattice) / kPhaseLattice;
  const double pi_snapped = std::nearbyint(units::pi * kPhaseLattice) / kPhaseLattice;
  if (r <= -pi_snapped) r = pi_snapped;
  return r;
}

double carrier_frequency(double wavelength) { return 2.0 * units::pi * units::c_light / wavelength; }

double sine_square_cycles(double omega, double fwhm_duration) {
  return omega * fwhm_duration / (4.0 * std::acos(std::pow(2.0, -0.25)));
}

Pulse::Pulse(const PulseParams& params, int nodes_per_cycle) : params_(params) {
  check_params(params_);
  if (nodes_per_cycle < kDefaultNodesPerCycle)
    throw std::invalid_argument("pulse: at least 4096 quadrature nodes per cycle required");
  params_.ce_phase = canonical_phase(params_.ce_phase);

  omega_ = field::carrier_frequency(params_.wavelength);
  period_ = 2.0 * units::pi / omega_;

  double support = 0.0;
  switch (params_.envelope) {
    case Envelope::SineSquare:
      n_cycles_ = sine_square_cycles(omega_, params_.fwhm_duration);
      support = n_cycles_ * period_;
      break;
    case Envelope::Gaussian:
      n_cycles_ = sine_square_cycles(omega_, params_.fwhm_duration);
      support = 2.0 * kGaussianSupport * params_.fwhm_duration;
      break;
    case Envelope::Flat:
      n_cycles_ = std::round(params_.fwhm_duration / period_);
      support = n_cycles_ * period_;
      break;
  }
  if (!(n_cycles_ >= 0.5))
    throw std::invalid_argument("pulse: duration covers less than half a carrier cycle (n = " +
                                std::to_string(n_cycles_) + ")");

  t_start_ = 0.0;
  t_end_ = support;
  t_center_ = 0.5 * support;

  const auto cells = std::max<long>(
      64, static_cast<long>(std::ceil(support / period_ * nodes_per_cycle)));
  step_ = support / static_cast<double>(cells);

  const auto n = static_cast<std::size_t>(cells) + 1;
  node_e_.resize(n);
  node_a_.assign(n, 0.0);
  node_ia_.assign(n, 0.0);
  node_ia2_.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) node_e_[k] = e_field(t_start_ + step_ * static_cast<double>(k));

  // Composite Simpson per cell for A, then exact integration of the cubic
  // Hermite interpolant for int A and 4-point Gauss-Legendre for int A^2.
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double t0 = t_start_ + step_ * static_cast<double>(k);
    const double e_mid = e_field(t0 + 0.5 * step_);
    node_a_[k + 1] = node_a_[k] - step_ / 6.0 * (node_e_[k] + 4.0 * e_mid + node_e_[k + 1]);

    const double ia = step_ * (0.5 * (node_a_[k] + node_a_[k + 1]) +
                               step_ * (node_e_[k + 1] - node_e_[k]) / 12.0);
    node_ia_[k + 1] = node_ia_[k] + ia;

    double ia2 = 0.0;
    for (std::size_t g = 0; g < 4; ++g) {
      const double a = hermite_a(static_cast<int>(k), kGlNodes[g]);
      ia2 += kGlWeights[g] * a * a;
    }
    node_ia2_[k + 1] = node_ia2_[k] + step_ * ia2;
  }
}

double Pulse::envelope(double t) const {
  if (t < t_start_ || t > t_end_) return 0.0;
  const double e0 = params_.peak_field;
  switch (params_.envelope) {
    case Envelope::SineSquare: {
      const double s = std::sin(units::pi * (t - t_start_) / (t_end_ - t_start_));
      return e0 * s * s;
    }
    case Envelope::Gaussian: {
      const double x = (t - t_center_) / params_.fwhm_duration;
      return e0 * std::exp(-2.0 * std::numbers::ln2 * x * x);
    }
    case Envelope::Flat:
      return e0;
  }
  return 0.0;
}

double Pulse::e_field(double t) const {
  if (t < t_start_ || t > t_end_) return 0.0;
  return envelope(t) * std::cos(omega_ * (t - t_center_) + params_.ce_phase);
}

Pulse::Cell Pulse::locate(double t) const {
  const double x = (t - t_start_) / step_;
  const auto last = static_cast<int>(node_a_.size()) - 2;
  int k = std::clamp(static_cast<int>(std::floor(x)), 0, last);
  return {k, x - static_cast<double>(k)};
}

double Pulse::hermite_a(int k, double s) const {
  const auto i = static_cast<std::size_t>(k);
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  // dA/dt = -E at the nodes.
  return h00 * node_a_[i] - h10 * step_ * node_e_[i] + h01 * node_a_[i + 1] -
         h11 * step_ * node_e_[i + 1];
}

double Pulse::vector_potential(double t) const {
  if (t <= t_start_) return 0.0;
  if (t >= t_end_) return node_a_.back();
  const auto [k, s] = locate(t);
  return hermite_a(k, s);
}

double Pulse::integral_a(double t) const {
  if (t <= t_start_) return 0.0;
  if (t >= t_end_) return node_ia_.back() + node_a_.back() * (t - t_end_);
  const auto [k, s] = locate(t);
  const auto i = static_cast<std::size_t>(k);
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double s4 = s3 * s;
  const double i00 = s - s3 + 0.5 * s4;
  const double i10 = 0.5 * s2 - 2.0 * s3 / 3.0 + 0.25 * s4;
  const double i01 = s3 - 0.5 * s4;
  const double i11 = -s3 / 3.0 + 0.25 * s4;
  return node_ia_[i] + step_ * (i00 * node_a_[i] - i10 * step_ * node_e_[i] +
                                i01 * node_a_[i + 1] - i11 * step_ * node_e_[i + 1]);
}

double Pulse::integral_a_squared(double t) const {
  if (t <= t_start_) return 0.0;
  if (t >= t_end_) {
    const double a = node_a_.back();
    return node_ia2_.back() + a * a * (t - t_end_);
  }
  const auto [k, s] = locate(t);
  double acc = 0.0;
  for (std::size_t g = 0; g < 4; ++g) {
    const double a = hermite_a(k, s * kGlNodes[g]);
    acc += kGlWeights[g] * a * a;
  }
  return node_ia2_[static_cast<std::size_t>(k)] + step_ * s * acc;
}

Pulse make_pulse(const PulseParams& params) { return Pulse(params); }

FieldSample field_at(const Pulse& pulse, double t) { return pulse.at(t); }

double ponderomotive_energy(const PulseParams& params) {
  const double omega = carrier_frequency(params.wavelength);
  const double e = units::e_charge;
  const double up = e * e * params.peak_field * params.peak_field /
                    (4.0 * units::m_electron * omega * omega);
  return up / units::eV;
}

double keldysh_parameter(const PulseParams& params, double work_function_ev) {
  if (!(work_function_ev > 0.0)) throw std::invalid_argument("keldysh: work function must be positive");
  if (!(params.peak_field > 0.0))
    throw std::invalid_argument("keldysh: undefined for zero peak field");
  const double omega = carrier_frequency(params.wavelength);
  return omega * std::sqrt(2.0 * units::m_electron * work_function_ev * units::eV) /
         (units::e_charge * params.peak_field);
}

}  // namespace attotip::field
