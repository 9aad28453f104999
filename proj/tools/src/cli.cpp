#include "tlsim_cli/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <optional>

#include "tlsim/analysis.hpp"
#include "tlsim/config.hpp"
#include "tlsim/errors.hpp"
#include "tlsim/format.hpp"
#include "tlsim/io.hpp"
#include "tlsim/montecarlo.hpp"
#include "tlsim/propagation.hpp"

namespace tlsim::cli {

namespace {

const std::vector<double> kExposureEnergies{8.0, 9.0, 11.0, 14.0, 16.0};

struct Common {
  std::string config_path;
  unsigned workers = 0;
  bool workers_set = false;
  bool timestamp = false;
  std::string out;
};

struct Options {
  Common common;
  double energy = 0.0;
  std::string model = "quantum";
  double l2eff_mm = 0.0;
  bool check_convergence = false;
  std::size_t n = 0;
  std::optional<std::uint64_t> seed;
  std::string truth;
  std::string events;
  std::string period_range;
  std::string rotation_range;
  std::vector<double> energies = kExposureEnergies;
  std::size_t bins = 8;
  std::string overlay;
};

Interval parse_range(const std::string& text, const char* flag) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError(flag, "expected lo:hi, got '" + text + "'");
  try {
    std::size_t a = 0, b = 0;
    const std::string lo = text.substr(0, colon), hi = text.substr(colon + 1);
    Interval r{std::stod(lo, &a), std::stod(hi, &b)};
    if (a != lo.size() || b != hi.size()) throw std::invalid_argument("trailing text");
    if (!(r.hi >= r.lo)) throw ConfigError(flag, "range must satisfy lo <= hi");
    return r;
  } catch (const std::logic_error&) {
    throw ConfigError(flag, "expected lo:hi, got '" + text + "'");
  }
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Runner {
 public:
  Runner(const Options& o, const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
      : o_(o), out_(out), err_(err) {
    config_ = o.common.config_path.empty() ? SimulationConfig{} : load_config(o.common.config_path);
    if (o.common.workers_set) config_.run.workers = o.common.workers;
    config_.validate();
    command_ = canonical_command(args);
  }

  int simulate() {
    const double energy = o_.energy > 0.0 ? o_.energy : config_.beam.kinetic_energy_kev;
    const double l2 = o_.l2eff_mm > 0.0 ? o_.l2eff_mm * 1e-3 : config_.geometry.l2_m;
    warn_energy(energy);
    int code = kOk;
    IntensityProfile p;
    if (parse_model(o_.model) == ModelKind::quantum) {
      auto q = quantum_intensity(config_, energy, l2, QuantumOptions{o_.check_convergence});
      if (!q.converged) {
        err_ << "warning: visibility moved from " << format_double(q.visibility) << " to "
             << format_double(q.visibility_doubled_angles) << " when doubling n_angles\n";
        code = kNumeric;
      }
      p = std::move(q.profile);
    } else {
      p = classical_intensity(config_, l2);
    }
    emit(profile_csv(manifest(config_.run.seed), p));
    return code;
  }

  int events() {
    const double energy = o_.energy > 0.0 ? o_.energy : config_.beam.kinetic_energy_kev;
    warn_energy(energy);
    const std::uint64_t seed = o_.seed.value_or(config_.run.seed);
    const EventList ev = generate_exposure(config_, energy, parse_model(o_.model), o_.n, seed);
    const RunManifest m = manifest(seed);
    emit(events_csv(m, ev));
    std::string truth_path = o_.truth;
    if (truth_path.empty() && !o_.common.out.empty()) truth_path = o_.common.out + ".truth";
    if (!truth_path.empty() && ev.truth) write_file(truth_path, truth_text(m, *ev.truth));
    return kOk;
  }

  int fit() {
    if (o_.events.empty()) throw ConfigError("--events", "an events file is required");
    const EventList ev = read_events(o_.events);
    const Interval per = o_.period_range.empty() ? default_period_range(config_, 0.02)
                                                 : parse_range(o_.period_range, "--period-range");
    const Interval rot = o_.rotation_range.empty() ? default_rotation_range(config_, 2.0)
                                                   : parse_range(o_.rotation_range, "--rotation-range");
    const FringeFitResult f = fit_fringes(ev.events, per, rot, config_.run.workers);
    emit(fit_report(manifest(config_.run.seed), f));
    return kOk;
  }

  int scan_energy() {
    const std::uint64_t seed = o_.seed.value_or(config_.run.seed);
    const EnergyScan scan = contrast_vs_energy(config_, o_.energies, parse_model(o_.model), o_.n, seed);
    const RunManifest m = manifest(seed);
    emit(curve_csv(m, scan.measured, {"model=" + o_.model}));
    if (!o_.overlay.empty()) write_file(o_.overlay, curve_csv(m, scan.model, {"model=" + o_.model, "noise-free"}));
    return kOk;
  }

  int scan_longitudinal() {
    const std::uint64_t seed = o_.seed.value_or(config_.run.seed);
    EventList ev;
    if (!o_.events.empty()) {
      ev = read_events(o_.events);
    } else {
      const double energy = o_.energy > 0.0 ? o_.energy : config_.beam.kinetic_energy_kev;
      warn_energy(energy);
      ev = generate_exposure(config_, energy, parse_model(o_.model), o_.n, seed);
    }
    const LongitudinalScan scan = contrast_vs_longitudinal(ev.events, o_.bins, config_);
    std::string seeds = "period_seed_um=";
    for (std::size_t i = 0; i < scan.period_seed_um.size(); ++i) {
      if (i) seeds += ',';
      seeds += format_double(scan.period_seed_um[i]);
    }
    emit(curve_csv(manifest(seed), scan.curve, {seeds}));
    return kOk;
  }

  int compare_models() {
    const std::uint64_t seed = o_.seed.value_or(config_.run.seed);
    auto q = contrast_vs_energy(config_, o_.energies, ModelKind::quantum, o_.n, seed);
    auto c = contrast_vs_energy(config_, o_.energies, ModelKind::classical, o_.n, seed);
    const ModelComparison cmp = compare(std::move(q), std::move(c));
    emit(comparison_csv(manifest(seed), cmp));
    if (!o_.common.out.empty()) out_ << cmp.verdict() << "\n";
    return kOk;
  }

 private:
  RunManifest manifest(std::uint64_t seed) const {
    RunManifest m = make_manifest(config_, command_);
    m.seed = seed;
    if (o_.common.timestamp) m.timestamp = utc_now();
    return m;
  }

  void emit(const std::string& text) {
    if (o_.common.out.empty()) {
      out_ << text;
    } else {
      write_file(o_.common.out, text);
    }
  }

  void warn_energy(double e) {
    BeamSpec b = config_.beam;
    b.kinetic_energy_kev = e;
    if (!b.energy_in_nominal_range()) err_ << "warning: " << format_double(e) << " keV is outside 5-18 keV\n";
  }

  const Options& o_;
  std::ostream& out_;
  std::ostream& err_;
  SimulationConfig config_;
  std::string command_;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.common.config_path, "key=value configuration file");
  sub->add_option("--workers", o.common.workers, "worker threads (0 = all cores); never changes results")
      ->each([&o](const std::string&) { o.common.workers_set = true; });
  sub->add_flag("--timestamp", o.common.timestamp, "record the wall-clock time in the manifest");
  sub->add_option("--out", o.common.out, "output path (default: stdout)");
}

void add_model(CLI::App* sub, Options& o) {
  sub->add_option("--model", o.model, "quantum or classical")->check(CLI::IsMember({"quantum", "classical"}));
}

}  // namespace

std::string canonical_command(const std::vector<std::string>& args) {
  static const std::vector<std::string> dropped{"--workers", "--out", "--truth", "--overlay"};
  std::string cmd = "tlsim";
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    bool skip = false;
    for (const auto& d : dropped) {
      if (a == d) {
        skip = true;
        ++i;  // value follows
        break;
      }
      if (a.rfind(d + "=", 0) == 0) {
        skip = true;
        break;
      }
    }
    if (!skip) cmd += " " + a;
  }
  return cmd;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Talbot-Lau positron interferometer simulator", "tlsim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version()));

  auto* sim = app.add_subcommand("simulate", "fringe intensity profile at one plane");
  add_common(sim, o);
  add_model(sim, o);
  sim->add_option("--energy", o.energy, "kinetic energy in keV (default: beam.energy_kev)");
  sim->add_option("--l2eff-mm", o.l2eff_mm, "G2-to-plane distance in mm (default: geometry.l2_m)");
  sim->add_flag("--check-convergence", o.check_convergence, "rerun with doubled n_angles; exit 2 if visibility moves > 1%");

  auto* evs = app.add_subcommand("events", "synthetic emulsion exposure");
  add_common(evs, o);
  add_model(evs, o);
  evs->add_option("--energy", o.energy, "kinetic energy in keV");
  evs->add_option("--n", o.n, "event count (default: flux * exposure / scale_factor)");
  evs->add_option("--seed", o.seed, "run seed (default: run.seed)");
  evs->add_option("--truth", o.truth, "generation truth sidecar (default: <out>.truth)");

  auto* fit = app.add_subcommand("fit", "period, rotation and contrast from an events file");
  add_common(fit, o);
  fit->add_option("--events", o.events, "events CSV")->required();
  fit->add_option("--period-range", o.period_range, "lo:hi in um (default: d3 +- 2%)");
  fit->add_option("--rotation-range", o.rotation_range, "lo:hi in mrad; use --rotation-range=-2:2 for negatives");

  auto* se = app.add_subcommand("scan-energy", "contrast against beam energy");
  add_common(se, o);
  add_model(se, o);
  se->add_option("--energies", o.energies, "comma-separated keV list")->delimiter(',');
  se->add_option("--n", o.n, "events per exposure");
  se->add_option("--seed", o.seed, "run seed");
  se->add_option("--overlay", o.overlay, "also write the noise-free model curve here");

  auto* sl = app.add_subcommand("scan-longitudinal", "contrast along the tilted emulsion");
  add_common(sl, o);
  add_model(sl, o);
  sl->add_option("--bins", o.bins, "number of s bins")->check(CLI::Range(3, 1000));
  sl->add_option("--energy", o.energy, "kinetic energy in keV");
  sl->add_option("--n", o.n, "event count");
  sl->add_option("--seed", o.seed, "run seed");
  sl->add_option("--events", o.events, "scan an existing events file instead of simulating");

  auto* cm = app.add_subcommand("compare-models", "quantum and classical energy scans with a verdict");
  add_common(cm, o);
  cm->add_option("--energies", o.energies, "comma-separated keV list")->delimiter(',');
  cm->add_option("--n", o.n, "events per exposure");
  cm->add_option("--seed", o.seed, "run seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    Runner r(o, args, out, err);
    if (sim->parsed()) return r.simulate();
    if (evs->parsed()) return r.events();
    if (fit->parsed()) return r.fit();
    if (se->parsed()) return r.scan_energy();
    if (sl->parsed()) return r.scan_longitudinal();
    if (cm->parsed()) return r.compare_models();
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ResolutionError& e) {
    err << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const ModelError& e) {
    err << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace tlsim::cli
