// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Runs the full semiclassical and quantum phase scans, so
// expect several minutes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "attotip/config.hpp"
#include "attotip/field.hpp"
#include "attotip/run.hpp"
#include "attotip/smm.hpp"
#include "attotip/spectra.hpp"
#include "attotip/tdse.hpp"
#include "oracle.hpp"
#include "synthetic.hpp"

using namespace attotip;

namespace {

constexpr double pi = oracle::pi;
constexpr double kBohr = 5.29177210903e-11;      // m
constexpr double kAuTime = 2.4188843265857e-17;  // s

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double wrap(double x) { return std::remainder(x, 2.0 * pi); }

field::PulseParams monochromatic(double phase, double cycles = 8.0) {
  field::PulseParams p;
  p.envelope = field::Envelope::Flat;
  p.ce_phase = phase;
  p.fwhm_duration = cycles * 2.0 * pi * p.wavelength / oracle::c;
  return p;
}

// Scans shared by several criteria, computed on first use.
struct Shared {
  std::optional<SpectrumMap> smm_map;
  std::optional<pipeline::AnalysisReport> smm_report;
  std::optional<SpectrumMap> tdse_map;
  std::vector<tdse::PopulationTrace> tdse_populations;
  std::optional<pipeline::AnalysisReport> tdse_report;

  const pipeline::RunConfig smm_cfg = pipeline::preset("paper-smm");
  const pipeline::RunConfig tdse_cfg = pipeline::preset("paper-tdse");

  const SpectrumMap& smm() {
    if (!smm_map) {
      smm_map = pipeline::simulate(smm_cfg);
      smm_report = pipeline::analyze(*smm_map, smm_cfg.analysis);
    }
    return *smm_map;
  }
  const pipeline::AnalysisReport& smm_analysis() {
    smm();
    return *smm_report;
  }
  const SpectrumMap& tdse() {
    if (!tdse_map) {
      tdse_map = pipeline::simulate(tdse_cfg, &tdse_populations);
      tdse_report = pipeline::analyze(*tdse_map, tdse_cfg.analysis);
    }
    return *tdse_map;
  }
  const pipeline::AnalysisReport& tdse_analysis() {
    tdse();
    return *tdse_report;
  }
};

std::size_t phase_index(const SpectrumMap& map, double phi) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < map.n_phases(); ++i)
    if (std::abs(wrap(map.ce_phases[i] - phi)) < std::abs(wrap(map.ce_phases[best] - phi))) best = i;
  return best;
}

Outcome ponderomotive() {
  const double up = field::ponderomotive_energy(field::PulseParams{});
  return {std::abs(up - 0.86) <= 0.01, fmt("Up = %.4f eV (0.86 +- 0.01)", up)};
}

Outcome keldysh() {
  const double g = field::keldysh_parameter(field::PulseParams{}, 5.2);
  return {g >= 1.5 && g <= 2.5, fmt("gamma = %.3f (within [1.5, 2.5])", g)};
}

Outcome ten_up() {
  const field::PulseParams p = monochromatic(0.0);
  const field::Pulse pulse = field::make_pulse(p);
  smm::SmmConfig cfg;
  cfg.exit_model = smm::ExitModel::Surface;
  const double up = field::ponderomotive_energy(p);
  const double begin = pulse.t_center() - pulse.period();
  const int n = 20000;
  double best = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t0 = begin + pulse.period() * i / n;
    if (!(pulse.e_field(t0) < 0.0)) continue;
    if (auto traj = smm::propagate(pulse, t0, cfg)) best = std::max(best, traj->final_energy);
  }
  return {std::abs(best / up - 10.0) <= 0.1, fmt("max return energy = %.4f Up (10 +- 0.1)", best / up)};
}

Outcome sixteen_up() {
  const smm::SmmConfig cfg;
  const double up = field::ponderomotive_energy(field::PulseParams{});
  double best = 0.0;
  double best_phase = 0.0;
  for (int k = -16; k < 16; ++k) {
    field::PulseParams p;
    p.ce_phase = k * pi / 16.0;
    const double c = smm::classical_cutoff(field::make_pulse(p), cfg);
    if (c > best) {
      best = c;
      best_phase = p.ce_phase;
    }
  }
  const bool in_window = std::abs(best / up - 16.0) <= 1.5;
  // Informational: with Up = 0.86 eV the lower window edge is 12.47 eV, so
  // the measured range 12.3-13.6 eV overlaps the window but is not inside it.
  const double lo = 14.5 * up, hi = 17.5 * up;
  const char* relation = (lo <= 12.3 && 13.6 <= hi) ? "contains" : (13.6 >= lo && 12.3 <= hi ? "overlaps" : "misses");
  return {in_window, fmt("max cut-off = %.3f eV = %.2f Up at phase %.3f pi (16 +- 1.5 Up); window [%.2f, %.2f] eV %s "
                         "the measured 12.3-13.6 eV",
                         best, best / up, best_phase / pi, lo, hi, relation)};
}

Outcome fringe_spacing(Shared& s) {
  const SpectrumMap& map = s.smm();
  const auto& rep = s.smm_analysis();
  const std::size_t row = phase_index(map, pi);
  if (!rep.visibility[row]) return {false, "no plateau peak fit at phase pi"};
  const auto& e = rep.visibility[row]->peak_energies;
  if (e.size() < 2) return {false, "fewer than two plateau peaks"};
  std::vector<double> sorted = e;
  std::sort(sorted.begin(), sorted.end());
  const double spacing = (sorted.back() - sorted.front()) / static_cast<double>(sorted.size() - 1);
  return {std::abs(spacing - 1.56) <= 0.15,
          fmt("mean spacing at phase pi = %.3f eV over %zu peaks in 5-12 eV (1.56 +- 0.15)", spacing, sorted.size())};
}

Outcome interference_on_off(Shared& s) {
  const SpectrumMap& map = s.smm();
  const auto& rep = s.smm_analysis();
  const auto& v_pi = rep.visibility[phase_index(map, pi)];
  const auto& v_zero = rep.visibility[phase_index(map, 0.0)];
  if (!v_pi || !v_zero) return {false, "visibility fit missing at phase pi or 0"};
  if (!rep.visibility_fit || !rep.cutoff_fit) return {false, "phase fits missing"};
  const double ratio = v_pi->average / v_zero->average;
  const bool contrast = v_pi->average >= 2.0 * v_zero->average;
  const double offset = std::abs(wrap(rep.visibility_fit->phase0 - rep.cutoff_fit->phase0));
  const bool opposite = std::abs(offset - pi) <= 0.2 * pi;
  return {contrast && opposite,
          fmt("visibility %.3f at pi vs %.3f at 0 (ratio %.2f, >= 2: %s); fit phase offset %.3f pi (1 +- 0.2: %s)",
              v_pi->average, v_zero->average, ratio, contrast ? "yes" : "no", offset / pi, opposite ? "yes" : "no")};
}

Outcome smm_cutoff_phase(Shared& s) {
  const auto& rep = s.smm_analysis();
  if (!rep.cutoff_fit || !rep.cutoff_fit->phase_defined) return {false, "cut-off fit missing"};
  const double p0 = wrap(rep.cutoff_fit->phase0);
  return {std::abs(wrap(p0 - 0.03 * pi)) <= 0.07 * pi,
          fmt("cut-off peaks at %.3f pi (0.03 +- 0.07); offset %.3f eV, amplitude %.3f eV", p0 / pi,
              rep.cutoff_fit->offset, rep.cutoff_fit->amplitude)};
}

// A secondary branch directly follows a primary one of the same emission
// lobe and reaches the same maximum energy.
Outcome intra_cycle() {
  const smm::SmmConfig cfg;
  const field::Pulse pulse = field::make_pulse(field::PulseParams{});
  const smm::Ensemble ens = smm::trace_ensemble(pulse, cfg);
  std::vector<bool> include(ens.branches.size(), true);
  std::string delays;
  bool near_200 = false;
  for (std::size_t b = 1; b < ens.branches.size(); ++b) {
    const auto& later = ens.branches[b];
    const auto& earlier = ens.branches[b - 1];
    if (later.cycle != earlier.cycle || later.first != earlier.last + 1) continue;
    if (later.max_energy <= 1.0 || std::abs(later.max_energy - earlier.max_energy) > 1e-3 * later.max_energy) continue;
    include[b] = false;
    const double delay = later.mean_emit - earlier.mean_emit;
    near_200 = near_200 || (delay > 100e-18 && delay < 300e-18);
    delays += fmt("%s%.0f", delays.empty() ? "" : ", ", delay * 1e18);
  }
  if (delays.empty()) return {false, "no secondary branch in the census"};
  const Spectrum all = smm::coherent_spectrum(ens, cfg);
  const Spectrum without = smm::coherent_spectrum(ens, cfg, include);
  double peak = 0.0, change = 0.0, at = 0.0;
  for (double v : all.values) peak = std::max(peak, v);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const double d = std::abs(all.values[i] - without.values[i]);
    if (d > change) {
      change = d;
      at = all.energies[i];
    }
  }
  const double rel = change / peak;
  return {near_200 && rel < 0.01,
          fmt("secondary branches %s as after their primaries; excluding them changes P(E) by %.2f%% of the "
              "peak (at %.2f eV; < 1%%)",
              delays.c_str(), 100.0 * rel, at)};
}

Outcome schottky() {
  const tdse::TdseConfig cfg;
  const double lowering = tdse::schottky_lowering(cfg.static_field);
  const tdse::PotentialGrid pot = tdse::build_potential(cfg);
  return {std::abs(lowering - 0.76) <= 0.02 && std::abs(pot.effective_barrier - 5.2) <= 0.05,
          fmt("lowering %.4f eV (0.76 +- 0.02), effective barrier %.4f eV (5.2 +- 0.05)", lowering,
              pot.effective_barrier)};
}

Outcome population_steps(Shared& s) {
  const SpectrumMap& map = s.tdse();
  const std::size_t row = phase_index(map, 0.0);
  const tdse::PopulationTrace& tr = s.tdse_populations.at(row);
  field::PulseParams params = s.tdse_cfg.pulse;
  params.ce_phase = map.ce_phases[row];
  const field::Pulse pulse = field::make_pulse(params);

  // Population change across each run of one field sign.
  const auto sign_at = [&](double t) {
    const double e = pulse.e_field(t);
    return e < 0.0 ? -1 : (e > 0.0 ? 1 : 0);
  };
  const double total = tr.population.front() - tr.population.back();
  if (!(total > 0.0)) return {false, "no ground-state depletion"};
  double negative_loss = 0.0, worst_positive = 0.0;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= tr.times.size(); ++i) {
    if (i < tr.times.size() && sign_at(tr.times[i]) == sign_at(tr.times[start])) continue;
    const int sign = sign_at(tr.times[start]);
    const double before = tr.population[start > 0 ? start - 1 : 0];
    const double delta = tr.population[i - 1] - before;
    if (sign < 0) negative_loss -= delta;
    if (sign > 0) worst_positive = std::max(worst_positive, std::abs(delta));
    start = i;
  }
  const double fraction = negative_loss / total;
  const double flat = worst_positive / total;
  return {fraction >= 0.9 && flat < 0.01,
          fmt("total loss %.3e; %.1f%% in negative half-cycles (>= 90%%); largest positive half-cycle change "
              "%.2f%% of the loss (< 1%%)",
              total, 100.0 * fraction, 100.0 * flat)};
}

Outcome tdse_cutoff_phase(Shared& s) {
  const auto& rep = s.tdse_analysis();
  if (!rep.cutoff_fit || !rep.cutoff_fit->phase_defined) return {false, "cut-off fit missing"};
  const double p0 = wrap(rep.cutoff_fit->phase0);
  const bool located = std::abs(wrap(p0 + 0.22 * pi)) <= 0.1 * pi;
  std::string vis = "visibility fit missing";
  bool anti = false;
  if (rep.visibility_fit && rep.visibility_fit->phase_defined) {
    const double offset = std::abs(wrap(rep.visibility_fit->phase0 - rep.cutoff_fit->phase0));
    anti = std::abs(offset - pi) <= 0.2 * pi;
    vis = fmt("visibility-cut-off offset %.3f pi (1 +- 0.2: %s)", offset / pi, anti ? "yes" : "no");
  }
  return {located && anti, fmt("cut-off peaks at %.3f pi (-0.22 +- 0.1: %s); %s", p0 / pi, located ? "yes" : "no",
                               vis.c_str())};
}

// Crank-Nicolson norm drift, free spreading, SG on quadratics, closed-form
// trajectory and -dA/dt = E.
Outcome hygiene() {
  std::vector<std::string> failed;
  std::string detail;

  {
    tdse::TdseConfig cfg;
    cfg.grid_max = 30e-9;
    cfg.detector_plane = 15e-9;
    cfg.absorber_width = 0.0;
    cfg.absorber_strength = 0.0;
    cfg.time_step = 1e-18;
    field::PulseParams p;
    p.envelope = field::Envelope::Gaussian;
    p.fwhm_duration = 5.5e-15;
    p.peak_field = 9.9e9;
    const field::Pulse pulse = field::make_pulse(p);
    const tdse::PotentialGrid pot = tdse::build_potential(cfg);
    const tdse::WaveState ground = tdse::ground_state(pot).first;
    tdse::WaveState state = ground;
    state.time = pulse.t_center() - 2e-15;
    double worst = 0.0;
    for (int step = 0; step < 400; ++step) {
      const double before = tdse::norm_of(state, pot);
      state = tdse::propagate(state, pot, pulse, cfg, ground, state.time + cfg.time_step).first;
      worst = std::max(worst, std::abs(tdse::norm_of(state, pot) - before));
    }
    if (!(worst < 1e-10)) failed.push_back("norm drift");
    detail += fmt("norm drift %.1e/step", worst);
  }

  {
    tdse::PotentialGrid pot;
    const double half = 30e-9, step = 0.01e-9;
    const auto n = static_cast<std::size_t>(std::llround(2.0 * half / step)) + 1;
    pot.step = step;
    for (std::size_t i = 0; i < n; ++i) pot.z.push_back(-half + step * static_cast<double>(i));
    pot.v.assign(n, 0.0);
    pot.absorber.assign(n, 0.0);
    pot.detector_plane = 1.0;
    const double sigma0 = 2e-9 / kBohr;
    tdse::WaveState start;
    for (double z : pot.z) {
      const double x = z / kBohr;
      start.psi.push_back(std::pow(2.0 * pi * sigma0 * sigma0, -0.25) * std::exp(-x * x / (4.0 * sigma0 * sigma0)));
    }
    tdse::TdseConfig cfg;
    cfg.time_step = 10e-18;
    field::PulseParams p;
    p.envelope = field::Envelope::Gaussian;
    p.peak_field = 0.0;
    const field::Pulse pulse = field::make_pulse(p);
    start.time = pulse.t_start();
    const double elapsed = 100e-15;
    const auto out = tdse::propagate(start, pot, pulse, cfg, pulse.t_start() + elapsed).first;
    double w = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double q = std::norm(out.psi[i]);
      const double x = pot.z[i] / kBohr;
      w += q;
      m1 += q * x;
      m2 += q * x * x;
    }
    const double width = std::sqrt(m2 / w - (m1 / w) * (m1 / w));
    const double t_au = elapsed / kAuTime;
    const double expected = sigma0 * std::sqrt(1.0 + std::pow(t_au / (2.0 * sigma0 * sigma0), 2));
    const double rel = std::abs(width / expected - 1.0);
    if (!(rel < 1e-4)) failed.push_back("free spreading");
    detail += fmt(", free width %.1e", rel);
  }

  {
    double worst = 0.0;
    for (std::size_t window : {3u, 7u, 21u, 41u}) {
      std::vector<double> q;
      for (int i = 0; i < 200; ++i) q.push_back(1.5 - 0.3 * i + 0.02 * i * i);
      const auto sm = spectra::savitzky_golay(q, window, 2);
      for (std::size_t i = 0; i < q.size(); ++i) worst = std::max(worst, std::abs(sm[i] - q[i]) / std::abs(q[i]));
    }
    if (!(worst < 1e-12)) failed.push_back("SG quadratics");
    detail += fmt(", SG %.1e", worst);
  }

  {
    const field::PulseParams p = monochromatic(0.4);
    const field::Pulse pulse = field::make_pulse(p);
    const double omega = pulse.carrier_frequency();
    const double tc = pulse.t_center();
    const double k = oracle::e * p.peak_field / oracle::me;
    const double amplitude = k / (omega * omega);
    double worst = 0.0;
    for (double t0 : {pulse.t_start() + 1.3 * pulse.period(), tc - 0.21 * pulse.period(), tc + 0.77 * pulse.period()}) {
      const double z0 = 0.37e-9;
      const double th0 = omega * (t0 - tc) + p.ce_phase;
      for (double frac : {0.05, 0.3, 0.5, 0.9, 1.4, 2.0}) {
        const double t = t0 + frac * pulse.period();
        const double z = z0 + amplitude * (std::cos(omega * (t - tc) + p.ce_phase) - std::cos(th0)) +
                         k / omega * std::sin(th0) * (t - t0);
        const smm::PhasePoint end = smm::integrate_motion(pulse, {t0, z0, 0.0}, t, 1e-10);
        worst = std::max(worst, std::abs(end.z - z) / std::max(std::abs(z), amplitude));
      }
    }
    if (!(worst < 1e-6)) failed.push_back("trajectory");
    detail += fmt(", trajectory %.1e", worst);
  }

  {
    double worst = 0.0;
    for (field::Envelope env : {field::Envelope::SineSquare, field::Envelope::Gaussian, field::Envelope::Flat}) {
      field::PulseParams params;
      params.envelope = env;
      params.ce_phase = 0.7;
      const field::Pulse p = field::make_pulse(params);
      const double h = 1e-5 * p.period();
      const int n = 10000;
      for (int i = 1; i < n; ++i) {
        const double t = p.t_start() + (p.t_end() - p.t_start()) * i / n;
        if (t - h < p.t_start() || t + h > p.t_end()) continue;
        const double deriv = -(p.vector_potential(t + h) - p.vector_potential(t - h)) / (2.0 * h);
        worst = std::max(worst, std::abs(deriv - p.e_field(t)) / params.peak_field);
      }
    }
    if (!(worst < 1e-8)) failed.push_back("-dA/dt");
    detail += fmt(", -dA/dt %.1e", worst);
  }

  std::string failures;
  for (const auto& f : failed) failures += (failures.empty() ? "; failed: " : ", ") + f;
  return {failed.empty(), detail + failures};
}

Outcome round_trip() {
  const auto planted = synthetic::planted_map();
  pipeline::AnalysisParams params;
  params.visibility_region = {5.0, 11.5};
  params.visibility_peaks = 4;
  const auto rep = pipeline::analyze(planted.map, params);
  const spectra::ModulationResult* m = nullptr;
  for (const auto& r : rep.modulation)
    if (!m || std::abs(r.energy - planted.depth_energy) < std::abs(m->energy - planted.depth_energy)) m = &r;
  if (!m || !rep.visibility_fit || !rep.cutoff_fit) return {false, "analysis incomplete"};
  const double depth = m->depth;
  const double vis = rep.visibility_fit->offset;
  const double cut = rep.cutoff_fit->offset;
  return {std::abs(depth - 0.30) <= 0.006 && std::abs(vis - 0.25) <= 0.02 && std::abs(cut - 13.0) <= 0.05,
          fmt("depth %.4f (0.30 +- 0.006), visibility %.4f (0.25 +- 0.02), cut-off %.4f eV (13.0 +- 0.05)", depth,
              vis, cut)};
}

}  // namespace

int main() {
  Shared shared;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"ponderomotive energy", ponderomotive},
      {"Keldysh parameter", keldysh},
      {"10 Up return energy", ten_up},
      {"16 Up cut-off", sixteen_up},
      {"fringe spacing", [&] { return fringe_spacing(shared); }},
      {"interference on/off", [&] { return interference_on_off(shared); }},
      {"semiclassical cut-off phase", [&] { return smm_cutoff_phase(shared); }},
      {"intra-cycle suppression", intra_cycle},
      {"Schottky barrier", schottky},
      {"quantum population steps", [&] { return population_steps(shared); }},
      {"quantum cut-off phase", [&] { return tdse_cutoff_phase(shared); }},
      {"numerical hygiene", hygiene},
      {"analysis round trip", round_trip},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto started = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    failed += o.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                seconds);
    std::fflush(stdout);
  }
  std::printf("%zu of %zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
