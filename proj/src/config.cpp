#include "attotip/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace attotip::pipeline {

using json = nlohmann::ordered_json;

namespace {

constexpr double kTwoPi = 6.283185307179586;

template <class E>
using NameTable = std::vector<std::pair<E, const char*>>;

const NameTable<Mode> kModes = {{Mode::SmmScan, "smm-scan"}, {Mode::TdseScan, "tdse-scan"}, {Mode::Analyze, "analyze"}};
const NameTable<field::Envelope> kEnvelopes = {{field::Envelope::SineSquare, "sine-square"},
                                               {field::Envelope::Gaussian, "gaussian"},
                                               {field::Envelope::Flat, "flat"}};
const NameTable<smm::ExitModel> kExitModels = {{smm::ExitModel::TunnelExit, "tunnel-exit"},
                                               {smm::ExitModel::Surface, "surface"}};
const NameTable<smm::SampleWeighting> kWeightings = {{smm::SampleWeighting::BranchNormalized, "branch-normalized"},
                                                     {smm::SampleWeighting::TrajectorySum, "trajectory-sum"},
                                                     {smm::SampleWeighting::PerSample, "per-sample"}};

template <class E>
const char* name_of(const NameTable<E>& table, E value) {
  for (const auto& [v, n] : table)
    if (v == value) return n;
  return "?";
}

// Reads the keys of one JSON object into struct fields; every key read is
// remembered so that finish() can reject the rest.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<document>" : path_, "must be an object");
  }

  std::string field(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

  const json* find(const char* key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(field(key), "must be a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(field(key), "must be finite");
    }
  }

  void integer(const char* key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(field(key), "must be an integer");
      const auto x = v->get<std::int64_t>();
      if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(field(key), "out of range");
      out = static_cast<int>(x);
    }
  }

  void unsigned_integer(const char* key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(field(key), "must be a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void workers(const char* key, unsigned& out) {
    std::uint64_t x = out;
    unsigned_integer(key, x);
    if (x > 4096) throw ConfigError(field(key), "must not exceed 4096");
    out = static_cast<unsigned>(x);
  }

  void boolean(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key), "must be true or false");
      out = v->get<bool>();
    }
  }

  void string(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(field(key), "must be a string");
      out = v->get<std::string>();
    }
  }

  void interval(const char* key, spectra::Interval& out) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
        throw ConfigError(field(key), "must be a pair [lo, hi] of numbers");
      out = {(*v)[0].get<double>(), (*v)[1].get<double>()};
    }
  }

  template <class E>
  void choice(const char* key, E& out, const NameTable<E>& table) {
    if (const json* v = find(key)) {
      std::string allowed;
      for (const auto& [value, name] : table) {
        if (v->is_string() && v->get<std::string>() == name) {
          out = value;
          return;
        }
        allowed += (allowed.empty() ? "" : ", ") + std::string(name);
      }
      throw ConfigError(field(key), "must be one of " + allowed);
    }
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.contains(it.key())) throw ConfigError(field(it.key()), "unknown key");
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

void read_pulse(const json& j, field::PulseParams& p) {
  Reader r(j, "pulse");
  r.number("wavelength", p.wavelength);
  r.number("fwhm_duration", p.fwhm_duration);
  r.number("peak_field", p.peak_field);
  r.number("ce_phase", p.ce_phase);
  r.choice("envelope", p.envelope, kEnvelopes);
  r.finish();
}

void read_smm(const json& j, smm::SmmConfig& c) {
  Reader r(j, "smm");
  r.number("work_function", c.work_function);
  r.number("rate_prefactor", c.rate_prefactor);
  r.integer("t0_samples_per_cycle", c.t0_samples_per_cycle);
  r.number("max_flight_cycles", c.max_flight_cycles);
  r.number("energy_bin_width", c.energy_bin_width);
  r.number("energy_max", c.energy_max);
  r.choice("exit_model", c.exit_model, kExitModels);
  r.choice("weighting", c.weighting, kWeightings);
  r.number("relative_tolerance", c.relative_tolerance);
  r.workers("workers", c.workers);
  r.finish();
}

void read_tdse(const json& j, tdse::TdseConfig& c) {
  Reader r(j, "tdse");
  r.number("work_function", c.work_function);
  r.number("fermi_energy", c.fermi_energy);
  r.number("static_field", c.static_field);
  r.boolean("use_image_potential", c.use_image_potential);
  r.number("grid_min", c.grid_min);
  r.number("grid_max", c.grid_max);
  r.number("grid_step", c.grid_step);
  r.number("time_step", c.time_step);
  r.number("absorber_width", c.absorber_width);
  r.number("absorber_strength", c.absorber_strength);
  r.number("detector_plane", c.detector_plane);
  r.number("mask_ramp", c.mask_ramp);
  r.number("post_pulse_time", c.post_pulse_time);
  r.number("energy_bin_width", c.energy_bin_width);
  r.number("energy_max", c.energy_max);
  r.workers("workers", c.workers);
  r.finish();
}

void read_analysis(const json& j, AnalysisParams& a) {
  Reader r(j, "analysis");
  r.number("modulation_half_width", a.modulation_half_width);
  r.interval("visibility_region", a.visibility_region);
  r.integer("visibility_peaks", a.visibility_peaks);
  r.boolean("smooth_phase_axis", a.smooth_phase_axis);
  if (const json* v = r.find("visibility")) {
    Reader rv(*v, "analysis.visibility");
    rv.number("photon_energy", a.visibility.photon_energy);
    rv.number("seed_sigma", a.visibility.seed_sigma);
    rv.number("centre_freedom", a.visibility.centre_freedom);
    rv.number("min_separation", a.visibility.min_separation);
    rv.number("strong_smoothing", a.visibility.strong_smoothing);
    rv.number("prominence_ratio", a.visibility.prominence_ratio);
    rv.finish();
  }
  if (const json* v = r.find("cutoff")) {
    Reader rc(*v, "analysis.cutoff");
    rc.interval("plateau", a.cutoff.plateau);
    rc.number("threshold_fraction", a.cutoff.threshold_fraction);
    rc.number("smoothing_width", a.cutoff.smoothing_width);
    rc.number("steep_width", a.cutoff.steep_width);
    rc.number("shallow_width", a.cutoff.shallow_width);
    rc.number("gap", a.cutoff.gap);
    rc.finish();
  }
  r.finish();
}

void require(bool ok, const char* field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

// Library validators throw std::invalid_argument("section.field message");
// the leading token becomes the field of the ConfigError.
template <class Fn>
void rethrow_as_config_error(const char* section, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    const std::size_t space = what.find(' ');
    std::string field = what.substr(0, space);
    if (!field.empty() && field.back() == ':') field.pop_back();
    if (space == std::string::npos || field.rfind(section, 0) != 0) throw ConfigError(section, what);
    throw ConfigError(field, what.substr(space + 1));
  }
}

json interval_json(spectra::Interval i) { return json::array({i.lo, i.hi}); }

}  // namespace

std::vector<double> PhaseGrid::values() const {
  const auto n = static_cast<long long>(std::llround((stop - start) / step));
  std::vector<double> out;
  for (long long i = 0; i < n; ++i) out.push_back(start + static_cast<double>(i) * step);
  return out;
}

std::string_view mode_name(Mode mode) { return name_of(kModes, mode); }

std::vector<std::string> preset_names() { return {"paper-smm", "paper-tdse"}; }

RunConfig preset(std::string_view name) {
  RunConfig cfg;
  if (name == "paper-smm") {
    cfg.mode = Mode::SmmScan;
    cfg.pulse = field::PulseParams{};  // 800 nm, 6.3 fs, 10.4 GV/m, sine-square
    cfg.smm = smm::SmmConfig{};        // work function 5.2 eV
    cfg.analysis.visibility_region = {5.0, 12.0};
    cfg.analysis.visibility_peaks = 4;
    return cfg;
  }
  if (name == "paper-tdse") {
    cfg.mode = Mode::TdseScan;
    cfg.pulse.fwhm_duration = 5.5e-15;
    cfg.pulse.peak_field = 9.9e9;
    cfg.pulse.envelope = field::Envelope::Gaussian;
    cfg.tdse = tdse::TdseConfig{};     // work function 6 eV, 0.4 GV/m static field
    // The quantum plateau reaches about 14 eV and its fringes are deep enough
    // that a 0.5 eV smoothing window leaves non-positive counts in the fits.
    cfg.analysis.visibility_region = {10.0, 15.0};
    cfg.analysis.visibility_peaks = 3;
    cfg.analysis.cutoff.smoothing_width = 1.0;
    return cfg;
  }
  throw ConfigError("preset", "unknown preset '" + std::string(name) + "' (paper-smm, paper-tdse)");
}

RunConfig parse_config(std::string_view text, const RunConfig& base) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
  RunConfig cfg = base;
  Reader r(doc, "");
  const json* version = r.find("schema_version");
  if (!version) throw ConfigError("schema_version", "missing");
  if (!version->is_number_integer() || version->get<std::int64_t>() != kConfigSchemaVersion)
    throw ConfigError("schema_version", "must be " + std::to_string(kConfigSchemaVersion));
  r.choice("mode", cfg.mode, kModes);
  if (const json* v = r.find("pulse")) read_pulse(*v, cfg.pulse);
  if (const json* v = r.find("smm")) {
    if (v->is_null()) {
      cfg.smm.reset();
    } else {
      if (!cfg.smm) cfg.smm.emplace();
      read_smm(*v, *cfg.smm);
    }
  }
  if (const json* v = r.find("tdse")) {
    if (v->is_null()) {
      cfg.tdse.reset();
    } else {
      if (!cfg.tdse) cfg.tdse.emplace();
      read_tdse(*v, *cfg.tdse);
    }
  }
  if (const json* v = r.find("phases")) {
    Reader rp(*v, "phases");
    rp.number("start", cfg.phases.start);
    rp.number("stop", cfg.phases.stop);
    rp.number("step", cfg.phases.step);
    rp.finish();
  }
  if (const json* v = r.find("analysis")) read_analysis(*v, cfg.analysis);
  r.unsigned_integer("seed", cfg.seed);
  r.string("output_dir", cfg.output_dir);
  r.string("input", cfg.input);
  r.finish();
  validate(cfg);
  return cfg;
}

RunConfig parse_config(std::string_view text) { return parse_config(text, RunConfig{}); }

RunConfig load_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("<document>", "cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), base);
}

std::string to_json(const RunConfig& cfg, int indent) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["mode"] = mode_name(cfg.mode);
  const auto& p = cfg.pulse;
  j["pulse"] = {{"wavelength", p.wavelength},
                {"fwhm_duration", p.fwhm_duration},
                {"peak_field", p.peak_field},
                {"ce_phase", p.ce_phase},
                {"envelope", name_of(kEnvelopes, p.envelope)}};
  if (cfg.smm) {
    const auto& c = *cfg.smm;
    j["smm"] = {{"work_function", c.work_function},
                {"rate_prefactor", c.rate_prefactor},
                {"t0_samples_per_cycle", c.t0_samples_per_cycle},
                {"max_flight_cycles", c.max_flight_cycles},
                {"energy_bin_width", c.energy_bin_width},
                {"energy_max", c.energy_max},
                {"exit_model", name_of(kExitModels, c.exit_model)},
                {"weighting", name_of(kWeightings, c.weighting)},
                {"relative_tolerance", c.relative_tolerance},
                {"workers", c.workers}};
  }
  if (cfg.tdse) {
    const auto& c = *cfg.tdse;
    j["tdse"] = {{"work_function", c.work_function},
                 {"fermi_energy", c.fermi_energy},
                 {"static_field", c.static_field},
                 {"use_image_potential", c.use_image_potential},
                 {"grid_min", c.grid_min},
                 {"grid_max", c.grid_max},
                 {"grid_step", c.grid_step},
                 {"time_step", c.time_step},
                 {"absorber_width", c.absorber_width},
                 {"absorber_strength", c.absorber_strength},
                 {"detector_plane", c.detector_plane},
                 {"mask_ramp", c.mask_ramp},
                 {"post_pulse_time", c.post_pulse_time},
                 {"energy_bin_width", c.energy_bin_width},
                 {"energy_max", c.energy_max},
                 {"workers", c.workers}};
  }
  j["phases"] = {{"start", cfg.phases.start}, {"stop", cfg.phases.stop}, {"step", cfg.phases.step}};
  const auto& a = cfg.analysis;
  j["analysis"] = {{"modulation_half_width", a.modulation_half_width},
                   {"visibility_region", interval_json(a.visibility_region)},
                   {"visibility_peaks", a.visibility_peaks},
                   {"smooth_phase_axis", a.smooth_phase_axis},
                   {"visibility",
                    {{"photon_energy", a.visibility.photon_energy},
                     {"seed_sigma", a.visibility.seed_sigma},
                     {"centre_freedom", a.visibility.centre_freedom},
                     {"min_separation", a.visibility.min_separation},
                     {"strong_smoothing", a.visibility.strong_smoothing},
                     {"prominence_ratio", a.visibility.prominence_ratio}}},
                   {"cutoff",
                    {{"plateau", interval_json(a.cutoff.plateau)},
                     {"threshold_fraction", a.cutoff.threshold_fraction},
                     {"smoothing_width", a.cutoff.smoothing_width},
                     {"steep_width", a.cutoff.steep_width},
                     {"shallow_width", a.cutoff.shallow_width},
                     {"gap", a.cutoff.gap}}}};
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["input"] = cfg.input;
  return j.dump(indent);
}

void validate(const RunConfig& cfg) {
  switch (cfg.mode) {
    case Mode::SmmScan:
      require(cfg.smm.has_value(), "smm", "required in smm-scan mode");
      require(!cfg.tdse.has_value(), "tdse", "not allowed in smm-scan mode");
      require(cfg.input.empty(), "input", "only used in analyze mode");
      break;
    case Mode::TdseScan:
      require(cfg.tdse.has_value(), "tdse", "required in tdse-scan mode");
      require(!cfg.smm.has_value(), "smm", "not allowed in tdse-scan mode");
      require(cfg.input.empty(), "input", "only used in analyze mode");
      require(cfg.pulse.envelope == field::Envelope::Gaussian, "pulse.envelope", "tdse-scan requires gaussian");
      break;
    case Mode::Analyze:
      require(!cfg.smm.has_value(), "smm", "not allowed in analyze mode");
      require(!cfg.tdse.has_value(), "tdse", "not allowed in analyze mode");
      require(!cfg.input.empty(), "input", "required in analyze mode");
      break;
  }
  if (cfg.mode != Mode::Analyze) rethrow_as_config_error("pulse", [&] { (void)field::make_pulse(cfg.pulse); });
  if (cfg.smm) rethrow_as_config_error("smm", [&] { smm::validate(*cfg.smm); });
  if (cfg.tdse) rethrow_as_config_error("tdse", [&] { tdse::validate(*cfg.tdse); });

  const auto& ph = cfg.phases;
  require(std::isfinite(ph.step) && ph.step > 0.0, "phases.step", "must be positive");
  require(std::isfinite(ph.start) && std::isfinite(ph.stop) && ph.stop > ph.start, "phases.stop",
          "must exceed phases.start");
  const double per_turn = kTwoPi / ph.step;
  require(std::abs(per_turn - std::round(per_turn)) < 1e-9 * per_turn, "phases.step", "must divide 2 pi");
  const double count = (ph.stop - ph.start) / ph.step;
  require(std::abs(count - std::round(count)) < 1e-9 * count, "phases.stop",
          "stop - start must be a whole number of steps");
  require(std::round(count) <= std::round(per_turn), "phases.stop", "grid must not exceed one period");

  const auto& a = cfg.analysis;
  require(a.modulation_half_width >= 0.0, "analysis.modulation_half_width", "must be non-negative");
  require(a.visibility_region.hi > a.visibility_region.lo, "analysis.visibility_region", "needs lo < hi");
  require(a.visibility_peaks >= 1, "analysis.visibility_peaks", "must be at least 1");
  require(a.visibility.photon_energy > 0.0, "analysis.visibility.photon_energy", "must be positive");
  require(a.visibility.seed_sigma > 0.0, "analysis.visibility.seed_sigma", "must be positive");
  require(a.visibility.centre_freedom > 0.0 && a.visibility.centre_freedom < 0.5, "analysis.visibility.centre_freedom",
          "must lie in (0, 0.5)");
  require(a.visibility.min_separation > 0.0 && a.visibility.min_separation < 1.0, "analysis.visibility.min_separation",
          "must lie in (0, 1)");
  require(a.visibility.strong_smoothing > 0.0, "analysis.visibility.strong_smoothing", "must be positive");
  require(a.visibility.prominence_ratio > 0.0, "analysis.visibility.prominence_ratio", "must be positive");
  require(a.cutoff.plateau.hi > a.cutoff.plateau.lo, "analysis.cutoff.plateau", "needs lo < hi");
  require(a.cutoff.threshold_fraction > 0.0 && a.cutoff.threshold_fraction < 1.0, "analysis.cutoff.threshold_fraction",
          "must lie in (0, 1)");
  require(a.cutoff.smoothing_width >= 0.0, "analysis.cutoff.smoothing_width", "must be non-negative");
  require(a.cutoff.steep_width > 0.0, "analysis.cutoff.steep_width", "must be positive");
  require(a.cutoff.shallow_width > 0.0, "analysis.cutoff.shallow_width", "must be positive");
  require(a.cutoff.gap >= 0.0, "analysis.cutoff.gap", "must be non-negative");
  require(!cfg.output_dir.empty(), "output_dir", "must not be empty");
}

}  // namespace attotip::pipeline
