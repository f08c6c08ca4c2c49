#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "attotip/field.hpp"
#include "attotip/smm.hpp"
#include "doctest.h"
#include "oracle.hpp"

using namespace attotip;
using field::Envelope;
using field::Pulse;
using field::PulseParams;

namespace {

constexpr double kAuField = 5.14220674763e11;  // V/m

// Monochromatic field cos(omega (t - t_center) + phi) over a whole number of
// cycles. A is zero at both ends and mean-free.
PulseParams monochromatic(double phase, double cycles = 8.0) {
  PulseParams p;
  p.envelope = Envelope::Flat;
  p.ce_phase = phase;
  p.fwhm_duration = cycles * 2.0 * oracle::pi * 800e-9 / oracle::c;
  return p;
}

double up_joule(const PulseParams& p) {
  const double omega = 2.0 * oracle::pi * oracle::c / p.wavelength;
  return oracle::e * oracle::e * p.peak_field * p.peak_field / (4.0 * oracle::me * omega * omega);
}

double max_relative_difference(const Spectrum& a, const Spectrum& b) {
  double peak = 0.0;
  for (double v : a.values) peak = std::max(peak, v);
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d / peak;
}

}  // namespace

TEST_CASE("configuration validation names the field") {
  smm::SmmConfig cfg;
  cfg.t0_samples_per_cycle = 50;
  CHECK_THROWS_WITH_AS(smm::validate(cfg), doctest::Contains("t0_samples_per_cycle"), std::invalid_argument);
  cfg = {};
  cfg.energy_bin_width = 0.3;
  CHECK_THROWS_WITH_AS(smm::validate(cfg), doctest::Contains("energy_bin_width"), std::invalid_argument);
  cfg = {};
  cfg.work_function = 0.0;
  CHECK_THROWS_WITH_AS(smm::validate(cfg), doctest::Contains("work_function"), std::invalid_argument);
}

TEST_CASE("emission rate against the tunnelling formula in atomic units") {
  PulseParams p;
  p.ce_phase = oracle::pi;  // field minimum -E0 at the centre
  const Pulse pulse = field::make_pulse(p);
  const smm::SmmConfig cfg;
  const double f = p.peak_field / kAuField;
  const double phi = 5.2 / oracle::hartree_ev;
  const double expected = 1.0 / f * std::exp(-4.0 * std::sqrt(2.0) * std::pow(phi, 1.5) / (3.0 * f));
  CHECK(smm::emission_rate(pulse, pulse.t_center(), cfg) == doctest::Approx(expected).epsilon(1e-9));

  SUBCASE("zero for positive or vanishing field") {
    const Pulse positive = field::make_pulse(PulseParams{});
    CHECK(smm::emission_rate(positive, positive.t_center(), cfg) == 0.0);
    CHECK(smm::emission_rate(positive, positive.t_start() - 1e-15, cfg) == 0.0);
    for (int i = 0; i < 200; ++i) {
      const double t = positive.t_start() + (positive.t_end() - positive.t_start()) * i / 199.0;
      if (positive.e_field(t) >= 0.0) CHECK(smm::emission_rate(positive, t, cfg) == 0.0);
    }
  }

  SUBCASE("strictly increasing with the field magnitude") {
    double previous = 0.0;
    for (double e0 = 2e9; e0 <= 20e9; e0 += 1e9) {
      PulseParams q = p;
      q.peak_field = e0;
      const Pulse pq = field::make_pulse(q);
      const double w = smm::emission_rate(pq, pq.t_center(), cfg);
      CHECK(w > previous);
      previous = w;
    }
  }
}

TEST_CASE("tunnel exit is phi over |e E|") {
  PulseParams p;
  p.ce_phase = oracle::pi;
  const Pulse pulse = field::make_pulse(p);
  const smm::SmmConfig cfg;
  CHECK(smm::tunnel_exit(pulse, pulse.t_center(), cfg) == doctest::Approx(0.5e-9).epsilon(1e-9));

  PulseParams half = p;
  half.peak_field *= 0.5;
  const Pulse ph = field::make_pulse(half);
  CHECK(smm::tunnel_exit(ph, ph.t_center(), cfg) ==
        doctest::Approx(2.0 * smm::tunnel_exit(pulse, pulse.t_center(), cfg)).epsilon(1e-12));

  const Pulse positive = field::make_pulse(PulseParams{});
  CHECK_THROWS_AS(smm::tunnel_exit(positive, positive.t_center(), cfg), std::domain_error);
  CHECK_THROWS_AS(smm::propagate(positive, positive.t_center(), cfg), std::domain_error);
}

TEST_CASE("drift momenta") {
  const Pulse pulse = field::make_pulse(PulseParams{});
  const auto zero = smm::drift_momenta(pulse, pulse.t_start(), pulse.t_start());
  CHECK(zero.p0 == 0.0);
  CHECK(zero.p1 == 0.0);
  const double t = pulse.t_center() + 0.3e-15;
  const auto same = smm::drift_momenta(pulse, t, t);
  CHECK(same.p1 == doctest::Approx(same.p0).epsilon(1e-14));
  CHECK(same.p0 == doctest::Approx(-oracle::e * pulse.vector_potential(t)).epsilon(1e-12));
}

TEST_CASE("integrator reproduces the closed-form monochromatic trajectory") {
  const PulseParams p = monochromatic(0.4);
  const Pulse pulse = field::make_pulse(p);
  const double omega = pulse.carrier_frequency();
  const double tc = pulse.t_center();
  const double k = oracle::e * p.peak_field / oracle::me;
  const double amplitude = k / (omega * omega);

  for (double t0 : {pulse.t_start() + 1.3 * pulse.period(), tc - 0.21 * pulse.period(), tc + 0.77 * pulse.period()}) {
    const double z0 = 0.37e-9;
    const double th0 = omega * (t0 - tc) + p.ce_phase;
    const auto exact = [&](double t) {
      return z0 + amplitude * (std::cos(omega * (t - tc) + p.ce_phase) - std::cos(th0)) +
             k / omega * std::sin(th0) * (t - t0);
    };
    for (double frac : {0.05, 0.3, 0.5, 0.9, 1.4, 2.0}) {
      const double t = t0 + frac * pulse.period();
      const smm::PhasePoint end = smm::integrate_motion(pulse, {t0, z0, 0.0}, t, 1e-10);
      const double z = exact(t);
      const double scale = std::max(std::abs(z), amplitude);
      CHECK(std::abs(end.z - z) / scale < 1e-6);
      if (std::abs(z) > 0.1 * amplitude) CHECK(end.z == doctest::Approx(z).epsilon(1e-6));
    }
  }
}

TEST_CASE("ten Up maximum return energy for a monochromatic field launched at the surface") {
  const PulseParams p = monochromatic(0.0);
  const Pulse pulse = field::make_pulse(p);
  smm::SmmConfig cfg;
  cfg.exit_model = smm::ExitModel::Surface;
  const double up_ev = up_joule(p) / oracle::e;

  // Brute-force scan over one cycle of emission times in the middle.
  const double begin = pulse.t_center() - pulse.period();
  const int n = 20000;
  double best = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t0 = begin + pulse.period() * i / n;
    if (!(pulse.e_field(t0) < 0.0)) continue;
    if (auto traj = smm::propagate(pulse, t0, cfg)) best = std::max(best, traj->final_energy);
  }
  CHECK(best / up_ev == doctest::Approx(10.007).epsilon(0.002));
  CHECK(std::abs(best / up_ev - 10.0) < 0.1);
}

TEST_CASE("accepted trajectories satisfy their invariants and energy bookkeeping") {
  const Pulse pulse = field::make_pulse(PulseParams{});
  const smm::SmmConfig cfg;
  int accepted = 0;
  for (int i = 0; i < 400; ++i) {
    const double t0 = pulse.t_start() + (pulse.t_end() - pulse.t_start()) * (i + 0.5) / 400.0;
    if (!(pulse.e_field(t0) < -0.3 * pulse.params().peak_field)) continue;
    const auto traj = smm::propagate(pulse, t0, cfg);
    if (!traj) continue;
    ++accepted;
    CHECK(traj->t_rescatter > traj->t_emit);
    CHECK(traj->t_rescatter - traj->t_emit <= cfg.max_flight_cycles * pulse.period() * (1 + 1e-12));
    CHECK(traj->z_exit > 0.0);
    CHECK(traj->weight >= 0.0);
    CHECK(traj->final_energy >= 0.0);
    CHECK(traj->z_exit == doctest::Approx(smm::tunnel_exit(pulse, t0, cfg)).epsilon(1e-14));
    // The position at t_rescatter is back at the surface.
    const auto at = smm::integrate_motion(pulse, {t0, traj->z_exit, 0.0}, traj->t_rescatter, 1e-10);
    CHECK(std::abs(at.z) < 1e-6 * traj->z_exit);
    const auto m = smm::drift_momenta(pulse, traj->t_emit, traj->t_rescatter);
    // Kinetic momentum once the field is gone: p1 + |e| A(t_end).
    const double p_kin = m.p1 + oracle::e * pulse.vector_potential(pulse.t_end());
    CHECK(traj->drift_momentum == doctest::Approx(p_kin).epsilon(1e-9));
    CHECK(traj->final_energy == doctest::Approx(p_kin * p_kin / (2.0 * oracle::me) / oracle::e).epsilon(1e-9));
    if (traj->final_energy > 0.5)
      CHECK(smm::propagated_drift_energy(pulse, *traj, 1e-11) == doctest::Approx(traj->final_energy).epsilon(1e-6));
  }
  CHECK(accepted >= 10);
}

TEST_CASE("crest-born electrons of a long pulse escape directly") {
  const Pulse pulse = field::make_pulse(monochromatic(oracle::pi, 12.0));
  const smm::SmmConfig cfg;
  CHECK_FALSE(smm::propagate(pulse, pulse.t_center(), cfg).has_value());
}

TEST_CASE("action") {
  smm::SmmConfig cfg;

  SUBCASE("zero field leaves only the work-function terms") {
    PulseParams p;
    p.peak_field = 0.0;
    const Pulse pulse = field::make_pulse(p);
    smm::Trajectory traj;
    traj.t_emit = pulse.t_start() + 3.1e-15;
    traj.t_rescatter = pulse.t_start() + 5.0e-15;
    const double expected = 5.2 * oracle::e * (traj.t_emit - pulse.t_start());
    CHECK(smm::action(pulse, traj, cfg) == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("closed form against direct quadrature of the defining integrals") {
    const Pulse pulse = field::make_pulse(PulseParams{});
    const double t0 = pulse.t_center() - 0.45 * pulse.period();
    const auto traj = smm::propagate(pulse, t0 + 0.0, cfg);
    smm::Trajectory tr;
    tr.t_emit = t0;
    tr.t_rescatter = traj ? traj->t_rescatter : t0 + 0.7 * pulse.period();
    const auto m = smm::drift_momenta(pulse, tr.t_emit, tr.t_rescatter);
    const double phi = 5.2 * oracle::e;
    const auto integrand = [&](double t, double p) {
      const double kin = p + oracle::e * pulse.vector_potential(t);
      return kin * kin / (2.0 * oracle::me) + phi;
    };
    const auto simpson = [&](double a, double b, double p) {
      const int n = 200000;
      const double h = (b - a) / n;
      double s = integrand(a, p) + integrand(b, p);
      for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * integrand(a + i * h, p);
      return s * h / 3.0;
    };
    // p here is the canonical momentum, so the kinetic momentum is p + eA.
    const double expected = simpson(pulse.t_start(), tr.t_rescatter, m.p1) - simpson(tr.t_emit, tr.t_rescatter, m.p0);
    CHECK(smm::action(pulse, tr, cfg) == doctest::Approx(expected).epsilon(1e-7));
  }

  SUBCASE("phase difference of trajectories one cycle apart grows with energy at the rate dt1") {
    const PulseParams p = monochromatic(0.0, 10.0);
    const Pulse pulse = field::make_pulse(p);
    const double period = pulse.period();
    std::vector<double> energies;
    std::vector<double> delta_s;
    std::vector<double> delta_t1;
    for (double frac : {0.57, 0.60, 0.63, 0.66}) {
      const double t0 = pulse.t_center() - 2.0 * period + frac * period;
      if (!(pulse.e_field(t0) < 0.0)) continue;
      const auto a = smm::propagate(pulse, t0, cfg);
      const auto b = smm::propagate(pulse, t0 + period, cfg);
      REQUIRE(a.has_value());
      REQUIRE(b.has_value());
      CHECK(b->final_energy == doctest::Approx(a->final_energy).epsilon(1e-6));
      energies.push_back(a->final_energy * oracle::e);
      delta_s.push_back(smm::action(pulse, *b, cfg) - smm::action(pulse, *a, cfg));
      delta_t1.push_back(b->t_rescatter - a->t_rescatter);
    }
    REQUIRE(energies.size() >= 3);
    for (std::size_t i = 1; i < energies.size(); ++i) {
      const double slope = (delta_s[i] - delta_s[0]) / (energies[i] - energies[0]);
      CHECK(slope == doctest::Approx(delta_t1[0]).epsilon(0.15));
      CHECK(delta_t1[i] == doctest::Approx(period).epsilon(1e-6));
    }
  }

  SUBCASE("quadrature refinement changes S / hbar by less than 1e-3 rad") {
    const PulseParams p;
    const Pulse coarse(p, Pulse::kDefaultNodesPerCycle);
    const Pulse fine(p, 2 * Pulse::kDefaultNodesPerCycle);
    for (double frac : {-0.45, -0.4, 0.55, 0.6}) {
      const double t0 = coarse.t_center() + frac * coarse.period();
      if (!(coarse.e_field(t0) < 0.0)) continue;
      const auto a = smm::propagate(coarse, t0, cfg);
      const auto b = smm::propagate(fine, t0, cfg);
      REQUIRE(a.has_value() == b.has_value());
      if (!a) continue;
      CHECK(std::abs(a->phase - b->phase) < 1e-3);
    }
  }
}

TEST_CASE("coherent spectrum invariances") {
  const Pulse pulse = field::make_pulse(PulseParams{});
  smm::SmmConfig cfg;
  cfg.t0_samples_per_cycle = 2048;
  const smm::Ensemble ens = smm::trace_ensemble(pulse, cfg);
  const Spectrum base = smm::coherent_spectrum(ens, cfg);
  CHECK(base.size() == 500);

  SUBCASE("global phase offset") {
    smm::Ensemble shifted = ens;
    for (auto& s : shifted.samples)
      if (s.trajectory) s.trajectory->phase += 2.345;
    CHECK(max_relative_difference(base, smm::coherent_spectrum(shifted, cfg)) < 1e-12);
  }

  SUBCASE("rate prefactor scales the whole spectrum") {
    smm::SmmConfig doubled = cfg;
    doubled.rate_prefactor = 2.0;
    const Spectrum s2 = smm::spectrum(pulse, doubled);
    for (std::size_t i = 0; i < base.size(); ++i)
      CHECK(s2.values[i] == doctest::Approx(2.0 * base.values[i]).epsilon(1e-12));
  }

  SUBCASE("worker count does not change the result") {
    smm::SmmConfig one = cfg;
    one.workers = 1;
    smm::SmmConfig three = cfg;
    three.workers = 3;
    const Spectrum a = smm::spectrum(pulse, one);
    const Spectrum b = smm::spectrum(pulse, three);
    CHECK(a.values == b.values);
    CHECK(a.values == base.values);
  }
}

TEST_CASE("doubling the sampling density changes the plateau by less than 2%") {
  const Pulse pulse = field::make_pulse(PulseParams{});
  smm::SmmConfig a;
  smm::SmmConfig b;
  b.t0_samples_per_cycle = 2 * a.t0_samples_per_cycle;
  const Spectrum sa = smm::spectrum(pulse, a);
  const Spectrum sb = smm::spectrum(pulse, b);
  double peak = 0.0;
  for (double v : sa.values) peak = std::max(peak, v);
  double worst = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i)
    if (sa.energies[i] >= 5.0 && sa.energies[i] <= 11.0)
      worst = std::max(worst, std::abs(sa.values[i] - sb.values[i]) / peak);
  CHECK(worst < 0.02);
}

TEST_CASE("phase scan rows are 2 pi periodic bit for bit") {
  smm::SmmConfig cfg;
  cfg.t0_samples_per_cycle = 1024;
  const SpectrumMap map = smm::phase_scan(PulseParams{}, {0.5, 0.5 + 2.0 * oracle::pi, 0.5 - 2.0 * oracle::pi}, cfg);
  REQUIRE(map.n_phases() == 3);
  const auto r0 = map.row(0);
  const auto r1 = map.row(1);
  const auto r2 = map.row(2);
  CHECK(std::equal(r0.begin(), r0.end(), r1.begin()));
  CHECK(std::equal(r0.begin(), r0.end(), r2.begin()));
}

TEST_CASE("cut-off of the default pulse near 16 Up") {
  const smm::SmmConfig cfg;
  const double up = field::ponderomotive_energy(PulseParams{});
  double best = 0.0;
  for (double phase : {-0.1, 0.0, 0.1}) {
    PulseParams p;
    p.ce_phase = phase;
    best = std::max(best, smm::classical_cutoff(field::make_pulse(p), cfg));
  }
  CHECK(best / up == doctest::Approx(16.0).epsilon(1.5 / 16.0));
}
