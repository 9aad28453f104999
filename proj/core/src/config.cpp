#include "tlsim/config.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "tlsim/errors.hpp"
#include "tlsim/format.hpp"
#include "tlsim/random.hpp"

namespace tlsim {

namespace {

constexpr double kCommensurateTolUm = 1e-6;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view v, const std::string& key) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end || !std::isfinite(out)) throw ConfigError(key, "expected a number, got '" + std::string(v) + "'");
  return out;
}

template <class Int>
Int parse_int(std::string_view v, const std::string& key) {
  Int out{};
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError(key, "expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

bool parse_bool(std::string_view v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + std::string(v) + "'");
}

struct Field {
  std::function<void(SimulationConfig&, std::string_view, const std::string&)> set;
  std::function<std::string(const SimulationConfig&)> get;
};

template <class Member>
Field real(Member member) {
  return {[member](SimulationConfig& c, std::string_view v, const std::string& k) { std::invoke(member, c) = parse_double(v, k); },
          [member](const SimulationConfig& c) { return format_double(std::invoke(member, c)); }};
}

template <class Int, class Member>
Field integer(Member member) {
  return {[member](SimulationConfig& c, std::string_view v, const std::string& k) { std::invoke(member, c) = parse_int<Int>(v, k); },
          [member](const SimulationConfig& c) { return std::to_string(std::invoke(member, c)); }};
}

// Table order is the canonical serialisation order.
const std::vector<std::pair<std::string, Field>>& field_table() {
  using C = SimulationConfig;
  static const std::vector<std::pair<std::string, Field>> table = {
      {"beam.energy_kev", real([](auto& c) -> auto& { return c.beam.kinetic_energy_kev; })},
      {"beam.energy_sigma_rel", real([](auto& c) -> auto& { return c.beam.energy_sigma_rel; })},
      {"beam.divergence_mrad", real([](auto& c) -> auto& { return c.beam.divergence_half_angle_mrad; })},
      {"beam.spot_width_mm", real([](auto& c) -> auto& { return c.beam.spot_width_mm; })},
      {"beam.flux_per_s", real([](auto& c) -> auto& { return c.beam.flux_per_s; })},
      {"g1.period_um", real([](auto& c) -> auto& { return c.g1.period_um; })},
      {"g1.open_fraction", real([](auto& c) -> auto& { return c.g1.open_fraction; })},
      {"g1.offset_um", real([](auto& c) -> auto& { return c.g1.lateral_offset_um; })},
      {"g1.rotation_mrad", real([](auto& c) -> auto& { return c.g1.rotation_mrad; })},
      {"g1.lock_to_resonance",
       {[](C& c, std::string_view v, const std::string& k) { c.lock_g1_to_resonance = parse_bool(v, k); },
        [](const C& c) { return std::string(c.lock_g1_to_resonance ? "true" : "false"); }}},
      {"g2.period_um", real([](auto& c) -> auto& { return c.g2.period_um; })},
      {"g2.open_fraction", real([](auto& c) -> auto& { return c.g2.open_fraction; })},
      {"g2.offset_um", real([](auto& c) -> auto& { return c.g2.lateral_offset_um; })},
      {"g2.rotation_mrad", real([](auto& c) -> auto& { return c.g2.rotation_mrad; })},
      {"geometry.l1_m", real([](auto& c) -> auto& { return c.geometry.l1_m; })},
      {"geometry.l2_m", real([](auto& c) -> auto& { return c.geometry.l2_m; })},
      {"geometry.tilt_deg", real([](auto& c) -> auto& { return c.geometry.detector_tilt_deg; })},
      {"geometry.collimator_mm", real([](auto& c) -> auto& { return c.geometry.collimator_width_mm; })},
      {"detector.sigma_um", real([](auto& c) -> auto& { return c.detector.position_sigma_um; })},
      {"detector.rotation_mrad", real([](auto& c) -> auto& { return c.detector.rotation_misalignment_mrad; })},
      {"detector.half_extent_u_mm", real([](auto& c) -> auto& { return c.detector.half_extent_u_mm; })},
      {"detector.half_extent_s_mm", real([](auto& c) -> auto& { return c.detector.half_extent_s_mm; })},
      {"detector.background_fraction", real([](auto& c) -> auto& { return c.detector.background_fraction; })},
      {"detector.n_strata", integer<std::size_t>([](auto& c) -> auto& { return c.detector.n_strata; })},
      {"resolution.n_points", integer<std::size_t>([](auto& c) -> auto& { return c.resolution.n_points; })},
      {"resolution.window_um",
       {[](C& c, std::string_view v, const std::string& k) { c.resolution.window_um = v == "auto" ? 0.0 : parse_double(v, k); },
        [](const C& c) { return c.resolution.window_um == 0.0 ? std::string("auto") : format_double(c.resolution.window_um); }}},
      {"resolution.n_angles", integer<std::size_t>([](auto& c) -> auto& { return c.resolution.n_angles; })},
      {"resolution.n_energy_samples",
       integer<std::size_t>([](auto& c) -> auto& { return c.resolution.n_energy_samples; })},
      {"run.seed", integer<std::uint64_t>([](auto& c) -> auto& { return c.run.seed; })},
      {"run.workers", integer<unsigned>([](auto& c) -> auto& { return c.run.workers; })},
      {"run.exposure_hours", real([](auto& c) -> auto& { return c.run.exposure_hours; })},
      {"run.scale_factor", real([](auto& c) -> auto& { return c.run.scale_factor; })},
      {"run.n_events", integer<std::size_t>([](auto& c) -> auto& { return c.run.n_events; })},
  };
  return table;
}

const std::array<std::string_view, 7> kSections = {"beam", "g1", "g2", "geometry", "detector", "resolution", "run"};

}  // namespace

void DetectorSpec::validate() const {
  if (!(position_sigma_um >= 0)) throw ConfigError("detector.sigma_um", "must be >= 0");
  if (!std::isfinite(rotation_misalignment_mrad) || std::abs(rotation_misalignment_mrad) > 100)
    throw ConfigError("detector.rotation_mrad", "must lie in [-100, 100]");
  if (!(half_extent_u_mm > 0)) throw ConfigError("detector.half_extent_u_mm", "must be > 0");
  if (!(half_extent_s_mm > 0)) throw ConfigError("detector.half_extent_s_mm", "must be > 0");
  if (!(background_fraction >= 0 && background_fraction < 1))
    throw ConfigError("detector.background_fraction", "must lie in [0, 1)");
  if (n_strata < 1) throw ConfigError("detector.n_strata", "must be >= 1");
}

bool commensurate(double window_um, double period_um) {
  const double cycles = window_um / period_um;
  return std::abs(cycles - std::round(cycles)) * period_um <= kCommensurateTolUm && std::round(cycles) >= 1;
}

double auto_window_um(double d1_um, double d2_um, double target_um) {
  const double fine = std::min(d1_um, d2_um);
  const double coarse = std::max(d1_um, d2_um);
  double best = 0.0;
  for (std::size_t n = 1; static_cast<double>(n) * coarse <= 4.0 * target_um; ++n) {
    const double w = static_cast<double>(n) * coarse;
    if (!commensurate(w, fine)) continue;
    const double snapped = std::round(w / fine) * fine;
    if (best == 0.0 || std::abs(snapped - target_um) < std::abs(best - target_um)) best = snapped;
  }
  if (best == 0.0) {
    throw ConfigError("resolution.window_um",
                      "no window up to 4x" + format_double(target_um) + " um is commensurate with both grating periods; set it explicitly");
  }
  return best;
}

EffectiveSetup resolve_setup(const SimulationConfig& c) {
  EffectiveSetup s{.g1 = c.g1, .g2 = c.g2, .window_um = 0, .n_points = c.resolution.n_points, .grid_spacing_um = 0,
                   .fringe_period_um = 0};
  if (c.lock_g1_to_resonance) s.g1.period_um = resonant_g1_period_um(c.g2.period_um, c.geometry.l1_m, c.geometry.l2_m);
  s.window_um = c.resolution.window_um > 0 ? c.resolution.window_um : auto_window_um(s.g1.period_um, s.g2.period_um);
  s.grid_spacing_um = s.window_um / static_cast<double>(s.n_points);
  s.fringe_period_um = beat_period_um(s.g1.period_um, s.g2.period_um);
  return s;
}

void SimulationConfig::validate() const {
  beam.validate();
  g1.validate("g1");
  g2.validate("g2");
  geometry.validate();
  detector.validate();
  if (g1.rotation_mrad != g2.rotation_mrad) {
    throw ConfigError("g1.rotation_mrad",
                      "relative grating rotation is not modelled by the 1D engine; give both gratings the same rotation");
  }
  const auto& r = resolution;
  if (r.n_points < 64 || !std::has_single_bit(r.n_points)) throw ConfigError("resolution.n_points", "must be a power of two >= 64");
  if (r.n_angles < 1) throw ConfigError("resolution.n_angles", "must be >= 1");
  if (r.n_energy_samples < 1) throw ConfigError("resolution.n_energy_samples", "must be >= 1");
  if (!(r.window_um >= 0)) throw ConfigError("resolution.window_um", "must be > 0 or auto");
  if (!(run.scale_factor > 0)) throw ConfigError("run.scale_factor", "must be > 0");
  if (!(run.exposure_hours > 0)) throw ConfigError("run.exposure_hours", "must be > 0");

  const EffectiveSetup s = resolve_setup(*this);
  if (!commensurate(s.window_um, s.g1.period_um) || !commensurate(s.window_um, s.g2.period_um)) {
    throw ConfigError("resolution.window_um", "window " + format_double(s.window_um) +
                                                  " um is not an integer multiple of both grating periods (" +
                                                  format_double(s.g1.period_um) + ", " + format_double(s.g2.period_um) +
                                                  " um)");
  }
  if (s.grid_spacing_um > std::min(s.g1.period_um, s.g2.period_um) / 32.0) {
    throw ConfigError("resolution.n_points", "grid spacing exceeds 1/32 of the finer grating period");
  }
}

std::size_t SimulationConfig::default_event_count() const {
  if (run.n_events > 0) return run.n_events;
  const double physical = beam.flux_per_s * run.exposure_hours * 3600.0;
  return static_cast<std::size_t>(std::llround(std::max(1.0, physical / run.scale_factor)));
}

SimulationConfig parse_config(std::string_view text) {
  SimulationConfig config;
  std::map<std::string, const Field*> index;
  for (const auto& [name, field] : field_table()) index.emplace(name, &field);

  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("", "line " + std::to_string(line_no) + ": malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (std::find(kSections.begin(), kSections.end(), section) == kSections.end()) {
        throw ConfigError(section, "unknown section (line " + std::to_string(line_no) + ")");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("", "line " + std::to_string(line_no) + ": expected key = value");
    std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.find('.') == std::string::npos) {
      if (section.empty()) throw ConfigError(key, "key outside any section (line " + std::to_string(line_no) + ")");
      key = section + "." + key;
    }
    const auto it = index.find(key);
    if (it == index.end()) throw ConfigError(key, "unknown key (line " + std::to_string(line_no) + ")");
    it->second->set(config, value, key);
  }
  config.validate();
  return config;
}

SimulationConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const SimulationConfig& config) {
  std::string out;
  for (const auto& [name, field] : field_table()) {
    out += name;
    out += " = ";
    out += field.get(config);
    out += '\n';
  }
  return out;
}

std::uint64_t config_hash(const SimulationConfig& config) {
  SimulationConfig c = config;
  c.run.workers = 0;  // worker count never changes results
  return fnv1a64(serialize_config(c));
}

}  // namespace tlsim
