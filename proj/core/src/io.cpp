#include "tlsim/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tlsim/errors.hpp"
#include "tlsim/format.hpp"

namespace tlsim {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

bool parse_double(std::string_view text, double& out) {
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::pair<double, double> spread(const ContrastCurve& c) {
  const auto [lo, hi] = std::minmax_element(c.contrast.begin(), c.contrast.end());
  const double sigma = *std::max_element(c.sigma.begin(), c.sigma.end());
  return {*hi - *lo, sigma};
}

}  // namespace

std::string_view version() { return TLSIM_VERSION; }

RunManifest make_manifest(const SimulationConfig& config, std::string command) {
  RunManifest m;
  m.config_hash = config_hash(config);
  m.seed = config.run.seed;
  m.command = std::move(command);
  m.scale_factor = config.run.scale_factor;
  return m;
}

std::string manifest_header(const RunManifest& m) {
  std::string s;
  s += "# tlsim " + std::string(version()) + "\n";
  s += "# config_hash=" + hex64(m.config_hash) + "\n";
  s += "# seed=" + std::to_string(m.seed) + "\n";
  s += "# command=" + m.command + "\n";
  s += "# scale_factor=" + format_double(m.scale_factor) + "\n";
  if (m.timestamp) s += "# timestamp=" + *m.timestamp + "\n";
  return s;
}

std::string profile_csv(const RunManifest& m, const IntensityProfile& p) {
  std::string s = manifest_header(m);
  s += "# plane_distance_m=" + format_double(p.plane_distance_m) + "\n";
  s += "# nominal_period_um=" + format_double(p.nominal_period_um) + "\n";
  s += "x_um,intensity\n";
  for (std::size_t i = 0; i < p.x_um.size(); ++i) {
    s += format_double(p.x_um[i]);
    s += ',';
    s += format_double(p.intensity[i]);
    s += '\n';
  }
  return s;
}

std::string events_csv(const RunManifest& m, const EventList& ev) {
  std::string s = manifest_header(m);
  s.reserve(s.size() + ev.events.size() * 40);
  s += "u_um,s_um\n";
  for (const auto& e : ev.events) {
    s += format_double(e.u_um);
    s += ',';
    s += format_double(e.s_um);
    s += '\n';
  }
  return s;
}

std::string truth_text(const RunManifest& m, const GenerationTruth& t) {
  std::string s = manifest_header(m);
  s += "model=" + t.model + "\n";
  s += "energy_kev=" + format_double(t.energy_kev) + "\n";
  s += "n_events=" + std::to_string(t.n_events) + "\n";
  s += "seed=" + std::to_string(t.seed) + "\n";
  s += "scale_factor=" + format_double(t.scale_factor) + "\n";
  s += "rotation_mrad=" + format_double(t.rotation_mrad) + "\n";
  s += "sigma_um=" + format_double(t.sigma_um) + "\n";
  s += "background_fraction=" + format_double(t.background_fraction) + "\n";
  s += "stratum_s_mm=" + join(t.stratum_s_mm) + "\n";
  s += "contrast=" + join(t.contrast) + "\n";
  s += "period_um=" + join(t.period_um) + "\n";
  return s;
}

std::string fit_report(const RunManifest& m, const FringeFitResult& f) {
  std::string s = manifest_header(m);
  s += "period_um=" + format_double(f.period_um) + "\n";
  s += "rotation_mrad=" + format_double(f.rotation_mrad) + "\n";
  s += "phase_rad=" + format_double(f.phase_rad) + "\n";
  s += "contrast=" + format_double(f.contrast) + "\n";
  s += "contrast_sigma=" + format_double(f.contrast_sigma) + "\n";
  s += "n_events=" + std::to_string(f.n_events) + "\n";
  s += "rayleigh_power=" + format_double(f.rayleigh_power) + "\n";
  s += "flags=" + f.flags.to_string() + "\n";
  return s;
}

std::string curve_csv(const RunManifest& m, const ContrastCurve& c, const std::vector<std::string>& extra_comments) {
  std::string s = manifest_header(m);
  s += "# label=" + c.label + "\n";
  for (const auto& line : extra_comments) s += "# " + line + "\n";
  s += "abscissa,contrast,sigma\n";
  for (std::size_t i = 0; i < c.abscissa.size(); ++i) {
    s += format_double(c.abscissa[i]) + "," + format_double(c.contrast[i]) + "," + format_double(c.sigma[i]) + "\n";
  }
  return s;
}

std::string ModelComparison::verdict() const {
  return std::string("quantum_varies=") + (quantum_varies ? "true" : "false") +
         " classical_flat=" + (classical_flat ? "true" : "false");
}

ModelComparison compare(EnergyScan quantum, EnergyScan classical) {
  ModelComparison c{std::move(quantum), std::move(classical), false, false};
  const auto [q_spread, q_sigma] = spread(c.quantum.measured);
  const auto [c_spread, c_sigma] = spread(c.classical.measured);
  c.quantum_varies = q_spread > 3.0 * q_sigma;
  c.classical_flat = c_spread < 3.0 * c_sigma;
  return c;
}

std::string comparison_csv(const RunManifest& m, const ModelComparison& c) {
  std::string s = manifest_header(m);
  s += "# " + c.verdict() + "\n";
  s += "energy_kev,quantum_contrast,quantum_sigma,classical_contrast,classical_sigma,quantum_model,classical_model\n";
  const auto& q = c.quantum;
  const auto& k = c.classical;
  for (std::size_t i = 0; i < q.measured.abscissa.size(); ++i) {
    s += format_double(q.measured.abscissa[i]) + "," + format_double(q.measured.contrast[i]) + "," +
         format_double(q.measured.sigma[i]) + "," + format_double(k.measured.contrast[i]) + "," +
         format_double(k.measured.sigma[i]) + "," + format_double(q.model.contrast[i]) + "," +
         format_double(k.model.contrast[i]) + "\n";
  }
  return s;
}

EventList parse_events(std::istream& in) {
  EventList ev;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    if (!header) {
      if (v != "u_um,s_um") throw IoError("expected header 'u_um,s_um', found '" + std::string(v) + "'", line_no);
      header = true;
      continue;
    }
    const auto comma = v.find(',');
    if (comma == std::string_view::npos) throw IoError("expected 2 columns, found 1", line_no);
    if (v.find(',', comma + 1) != std::string_view::npos) throw IoError("expected 2 columns, found more", line_no);
    Event e;
    if (!parse_double(trim(v.substr(0, comma)), e.u_um) || !parse_double(trim(v.substr(comma + 1)), e.s_um)) {
      throw IoError("malformed number in '" + std::string(v) + "'", line_no);
    }
    ev.events.push_back(e);
  }
  if (in.bad()) throw IoError("read failure");
  if (!header) throw IoError("missing header 'u_um,s_um'");
  return ev;
}

EventList read_events(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_events(in);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

}  // namespace tlsim
