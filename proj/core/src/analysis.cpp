#include "tlsim/analysis.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>

#include "tlsim/errors.hpp"
#include "tlsim/parallel.hpp"

namespace tlsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Refinement works in units of the target tolerance.
constexpr double kPeriodUnit = 1e-4;    // um
constexpr double kRotationUnit = 1e-2;  // mrad

struct Centred {
  std::vector<double> u, w;
  double span_u = 0.0, span_w = 0.0, w_min = 0.0;
};

Centred centre(std::span<const Event> events) {
  Centred c;
  const auto n = static_cast<double>(events.size());
  double mu = 0.0, mw = 0.0;
  for (const auto& e : events) {
    mu += e.u_um;
    mw += e.s_um;
  }
  mu /= n;
  mw /= n;
  c.u.reserve(events.size());
  c.w.reserve(events.size());
  double u_lo = std::numeric_limits<double>::infinity(), u_hi = -u_lo, w_lo = u_lo, w_hi = -u_lo;
  for (const auto& e : events) {
    c.u.push_back(e.u_um - mu);
    c.w.push_back(e.s_um - mw);
    u_lo = std::min(u_lo, c.u.back());
    u_hi = std::max(u_hi, c.u.back());
    w_lo = std::min(w_lo, c.w.back());
    w_hi = std::max(w_hi, c.w.back());
  }
  c.span_u = u_hi - u_lo;
  c.span_w = w_hi - w_lo;
  c.w_min = w_lo;
  return c;
}

double centred_power(const Centred& c, double period_um, double rotation_mrad) {
  const double r = rotation_mrad * 1e-3;
  const double ku = std::cos(r) / period_um;
  const double kw = std::sin(r) / period_um;
  double re = 0.0, im = 0.0;
  for (std::size_t j = 0; j < c.u.size(); ++j) {
    const double ph = kTwoPi * (ku * c.u[j] + kw * c.w[j]);
    re += std::cos(ph);
    im += std::sin(ph);
  }
  return 2.0 / static_cast<double>(c.u.size()) * std::hypot(re, im);
}

struct GridPoint {
  double power = -1.0;
  double period_um = 0.0;
  double rotation_mrad = 0.0;
};

bool better(const GridPoint& a, const GridPoint& b) {
  if (a.power != b.power) return a.power > b.power;
  if (a.period_um != b.period_um) return a.period_um < b.period_um;
  return a.rotation_mrad < b.rotation_mrad;
}

std::vector<double> linspace(double lo, double hi, double pitch) {
  if (!(hi > lo) || !(pitch > 0.0)) return {0.5 * (lo + hi)};
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / pitch)) + 1;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

struct Objective {
  const Centred* data;
  Interval period;
  Interval rotation;
  bool fixed_rotation;
};

double negative_power(const gsl_vector* x, void* params) {
  const auto* o = static_cast<const Objective*>(params);
  const double d = gsl_vector_get(x, 0) * kPeriodUnit;
  const double r = o->fixed_rotation ? o->rotation.lo : gsl_vector_get(x, 1) * kRotationUnit;
  if (!o->period.contains(d) || !o->rotation.contains(r)) return 1.0;
  return -centred_power(*o->data, d, r);
}

GridPoint refine(const Centred& data, Interval period, Interval rotation, const GridPoint& start, double period_step,
                 double rotation_step_mrad) {
  static std::once_flag quiet;
  std::call_once(quiet, [] { gsl_set_error_handler_off(); });
  Objective obj{&data, period, rotation, !(rotation.width() > 0.0)};
  const std::size_t dims = obj.fixed_rotation ? 1 : 2;
  gsl_multimin_function fn{&negative_power, dims, &obj};
  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> x(gsl_vector_alloc(dims), &gsl_vector_free);
  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> step(gsl_vector_alloc(dims), &gsl_vector_free);
  gsl_vector_set(x.get(), 0, start.period_um / kPeriodUnit);
  gsl_vector_set(step.get(), 0, std::max(period_step / kPeriodUnit, 1.0));
  if (dims == 2) {
    gsl_vector_set(x.get(), 1, start.rotation_mrad / kRotationUnit);
    gsl_vector_set(step.get(), 1, std::max(rotation_step_mrad / kRotationUnit, 1.0));
  }
  std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dims), &gsl_multimin_fminimizer_free);
  gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), step.get());
  for (int iter = 0; iter < 1000; ++iter) {
    if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), 0.5) == GSL_SUCCESS) break;
  }
  GridPoint best;
  best.power = -gsl_multimin_fminimizer_minimum(s.get());
  best.period_um = gsl_vector_get(s->x, 0) * kPeriodUnit;
  best.rotation_mrad = dims == 2 ? gsl_vector_get(s->x, 1) * kRotationUnit : rotation.lo;
  return best;
}

double mid_mm(double lo_um, double hi_um) { return 0.5 * (lo_um + hi_um) * 1e-3; }

}  // namespace

std::string FitFlags::to_string() const {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += ',';
    s += name;
  };
  add(boundary, "boundary");
  add(low_significance, "low_significance");
  add(merged, "merged");
  return s.empty() ? "none" : s;
}

std::complex<double> rayleigh_sum(std::span<const Event> events, double period_um, double rotation_mrad) {
  if (!(period_um > 0.0)) throw DomainError("period must be > 0");
  const double r = rotation_mrad * 1e-3;
  const double ku = std::cos(r) / period_um;
  const double kw = std::sin(r) / period_um;
  double re = 0.0, im = 0.0;
  for (const auto& e : events) {
    const double ph = kTwoPi * (ku * e.u_um + kw * e.s_um);
    re += std::cos(ph);
    im += std::sin(ph);
  }
  return {re, im};
}

double rayleigh_power(std::span<const Event> events, double period_um, double rotation_mrad) {
  if (events.size() < 2) throw DomainError("Rayleigh power needs at least two events");
  return 2.0 / static_cast<double>(events.size()) * std::abs(rayleigh_sum(events, period_um, rotation_mrad));
}

CorrectedContrast corrected_contrast(double r, std::size_t n) {
  if (n < 2) throw DomainError("corrected contrast needs n >= 2");
  const double nd = static_cast<double>(n);
  const double c2 = (r * r - 4.0 / nd) / (1.0 - 1.0 / nd);
  return {std::sqrt(std::max(c2, 0.0)), std::sqrt(2.0 / nd)};
}

FringeFitResult fit_fringes(std::span<const Event> events, Interval period, Interval rotation, unsigned workers) {
  if (events.size() < 100) throw DomainError("fit needs at least 100 events");
  if (!(period.lo > 0.0) || !(period.hi >= period.lo)) throw DomainError("period range must be positive and ordered");
  if (!(rotation.hi >= rotation.lo) || std::abs(rotation.lo) >= 1e3 || std::abs(rotation.hi) >= 1e3) {
    throw DomainError("rotation range must be ordered and within +-1000 mrad");
  }
  const Centred data = centre(events);
  const double n = static_cast<double>(events.size());
  const double r_lo = rotation.lo * 1e-3, r_hi = rotation.hi * 1e-3;

  // Grid over a = cos(r)/d and r; k_w = a tan(r). Pitches keep the phase
  // drift across the event span below pi/4 per step.
  const double cos_max = (r_lo <= 0.0 && r_hi >= 0.0) ? 1.0 : std::max(std::cos(r_lo), std::cos(r_hi));
  const double cos_min = std::min(std::cos(r_lo), std::cos(r_hi));
  const double a_lo = cos_min / period.hi, a_hi = cos_max / period.lo;
  const double a_pitch = data.span_u > 0.0 ? 1.0 / (8.0 * data.span_u) : 0.0;
  const double r_pitch = data.span_w > 0.0 ? 1.0 / (8.0 * data.span_w * a_hi) : 0.0;
  const auto a_grid = linspace(a_lo, a_hi, a_pitch);
  const auto r_grid = linspace(r_lo, r_hi, r_pitch);

  // Events are grouped in w strips narrow enough that the rotation phase
  // varies by less than pi/4 inside a strip.
  const double kw_max = a_hi * std::max(std::abs(std::tan(r_lo)), std::abs(std::tan(r_hi)));
  std::size_t strips = 1;
  if (kw_max > 0.0 && data.span_w > 0.0) {
    strips = std::min<std::size_t>(4096, static_cast<std::size_t>(std::ceil(data.span_w * 8.0 * kw_max)));
    strips = std::max<std::size_t>(strips, 1);
  }
  const double strip_w = data.span_w > 0.0 ? data.span_w / static_cast<double>(strips) : 1.0;
  std::vector<std::size_t> strip_of(data.w.size());
  for (std::size_t j = 0; j < data.w.size(); ++j) {
    strip_of[j] = std::min(strips - 1, static_cast<std::size_t>((data.w[j] - data.w_min) / strip_w));
  }
  std::vector<double> strip_centre(strips);
  for (std::size_t m = 0; m < strips; ++m) strip_centre[m] = data.w_min + (static_cast<double>(m) + 0.5) * strip_w;

  struct Row {
    GridPoint best;
    double sum = 0.0;
    std::size_t count = 0;
  };
  std::vector<Row> rows(a_grid.size());
  parallel_for(a_grid.size(), workers, [&](std::size_t i) {
    const double a = a_grid[i];
    std::vector<std::complex<double>> s(strips);
    for (std::size_t j = 0; j < data.u.size(); ++j) s[strip_of[j]] += std::polar(1.0, kTwoPi * a * data.u[j]);
    Row& row = rows[i];
    for (double r : r_grid) {
      const double d = std::cos(r) / a;
      if (!period.contains(d)) continue;
      const double kw = a * std::tan(r);
      std::complex<double> total = 0.0;
      for (std::size_t m = 0; m < strips; ++m) total += s[m] * std::polar(1.0, kTwoPi * kw * strip_centre[m]);
      const GridPoint p{2.0 / n * std::abs(total), d, r * 1e3};
      row.sum += p.power;
      ++row.count;
      if (better(p, row.best)) row.best = p;
    }
  });

  GridPoint best;
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& row : rows) {
    sum += row.sum;
    count += row.count;
    if (row.count > 0 && better(row.best, best)) best = row.best;
  }
  if (count == 0) {
    // Range narrower than one grid step: start from its centre.
    best = GridPoint{0.0, 0.5 * (period.lo + period.hi), 0.5 * (rotation.lo + rotation.hi)};
    best.power = centred_power(data, best.period_um, best.rotation_mrad);
    sum = best.power;
    count = 1;
  }
  const double grid_mean = sum / static_cast<double>(count);

  const double d_pitch = best.period_um * best.period_um * a_pitch;
  const double r_pitch_mrad = r_pitch * 1e3;
  GridPoint refined = refine(data, period, rotation, best, d_pitch, r_pitch_mrad);
  if (!(refined.power >= best.power)) refined = best;

  FringeFitResult fit;
  fit.period_um = refined.period_um;
  fit.rotation_mrad = refined.rotation_mrad;
  fit.rayleigh_power = refined.power;
  fit.n_events = events.size();
  fit.phase_rad = std::arg(rayleigh_sum(events, fit.period_um, fit.rotation_mrad));
  const auto cc = corrected_contrast(fit.rayleigh_power, events.size());
  fit.contrast = std::min(cc.contrast, 1.0);
  fit.contrast_sigma = cc.sigma;
  fit.grid_max_over_mean = grid_mean > 0.0 ? best.power / grid_mean : 0.0;
  fit.flags.low_significance = fit.grid_max_over_mean < 3.0;
  const double d_edge = std::max(d_pitch, kPeriodUnit);
  const double r_edge = std::max(r_pitch_mrad, kRotationUnit);
  fit.flags.boundary = (period.width() > 0.0 && (fit.period_um - period.lo < d_edge || period.hi - fit.period_um < d_edge)) ||
                       (rotation.width() > 0.0 &&
                        (fit.rotation_mrad - rotation.lo < r_edge || rotation.hi - fit.rotation_mrad < r_edge));
  return fit;
}

Interval default_period_range(const SimulationConfig& config, double half_width_rel) {
  const double d3 = magnified_period_um(config.g2.period_um, config.geometry.l1_m, config.geometry.l2_m);
  return {d3 * (1.0 - half_width_rel), d3 * (1.0 + half_width_rel)};
}

Interval default_rotation_range(const SimulationConfig& config, double half_width_mrad) {
  const double centre = config.g1.rotation_mrad + config.detector.rotation_misalignment_mrad;
  return {centre - half_width_mrad, centre + half_width_mrad};
}

LongitudinalScan contrast_vs_longitudinal(std::span<const Event> events, std::size_t n_bins,
                                          const SimulationConfig& config, const FitSettings& settings) {
  if (n_bins < 3) throw DomainError("longitudinal scan needs at least 3 bins");
  const double s_half = config.detector.half_extent_s_mm * 1e3;
  const double width = 2.0 * s_half / static_cast<double>(n_bins);
  std::vector<std::vector<Event>> bins(n_bins);
  for (const auto& e : events) {
    const auto b = static_cast<std::ptrdiff_t>(std::floor((e.s_um + s_half) / width));
    bins[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(n_bins) - 1))].push_back(e);
  }

  // Groups of consecutive bins, each holding at least min_events_per_bin events.
  struct Group {
    std::size_t first, last;
    std::vector<Event> events;
  };
  std::vector<Group> groups;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (groups.empty() || groups.back().events.size() >= settings.min_events_per_bin) {
      groups.push_back(Group{b, b, {}});
    }
    Group& g = groups.back();
    g.last = b;
    g.events.insert(g.events.end(), bins[b].begin(), bins[b].end());
  }
  if (groups.size() > 1 && groups.back().events.size() < settings.min_events_per_bin) {
    Group tail = std::move(groups.back());
    groups.pop_back();
    groups.back().last = tail.last;
    groups.back().events.insert(groups.back().events.end(), tail.events.begin(), tail.events.end());
  }

  LongitudinalScan scan;
  scan.curve.label = "longitudinal-scan";
  const Interval rot = default_rotation_range(config, settings.rotation_half_width_mrad);
  for (const auto& g : groups) {
    const double lo = -s_half + static_cast<double>(g.first) * width;
    const double hi = -s_half + static_cast<double>(g.last + 1) * width;
    const double s_mm = mid_mm(lo, hi);
    const double l2_eff = longitudinal_mapping_m(s_mm, config.geometry);
    const double seed = magnified_period_um(config.g2.period_um, config.geometry.l1_m, l2_eff);
    const Interval per{seed * (1.0 - settings.period_half_width_rel), seed * (1.0 + settings.period_half_width_rel)};
    FringeFitResult fit = fit_fringes(g.events, per, rot, config.run.workers);
    fit.flags.merged = g.last > g.first;
    scan.curve.abscissa.push_back(s_mm);
    scan.curve.contrast.push_back(fit.contrast);
    scan.curve.sigma.push_back(fit.contrast_sigma);
    scan.period_seed_um.push_back(seed);
    scan.fits.push_back(fit);
  }
  return scan;
}

EnergyScan contrast_vs_energy(const SimulationConfig& config, std::span<const double> energies_kev, ModelKind kind,
                              std::size_t n_per_exposure, std::uint64_t seed, const FitSettings& settings) {
  if (energies_kev.empty()) throw DomainError("energy scan needs at least one energy");
  EnergyScan scan;
  scan.measured.label = "energy-scan";
  scan.model.label = "energy-scan";
  const double slice_um = config.detector.half_extent_s_mm * 1e3 / 8.0;
  const Interval per = default_period_range(config, settings.period_half_width_rel);
  const Interval rot = default_rotation_range(config, settings.rotation_half_width_mrad);
  for (double e : energies_kev) {
    const EventList ev = generate_exposure(config, e, kind, n_per_exposure, seed);
    std::vector<Event> central;
    for (const auto& h : ev.events) {
      if (std::abs(h.s_um) <= slice_um) central.push_back(h);
    }
    const FringeFitResult fit = fit_fringes(central, per, rot, config.run.workers);
    scan.measured.abscissa.push_back(e);
    scan.measured.contrast.push_back(fit.contrast);
    scan.measured.sigma.push_back(fit.contrast_sigma);
    scan.fits.push_back(fit);

    const IntensityProfile p = kind == ModelKind::quantum ? quantum_intensity(config, e, config.geometry.l2_m).profile
                                                          : classical_intensity(config, config.geometry.l2_m);
    scan.model.abscissa.push_back(e);
    scan.model.contrast.push_back(profile_visibility(p, p.nominal_period_um));
    scan.model.sigma.push_back(1e-6);  // noise-free; floor keeps sigma > 0
  }
  return scan;
}

}  // namespace tlsim
