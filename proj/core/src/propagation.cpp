#include "tlsim/propagation.hpp"

#include <gsl/gsl_cdf.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tlsim/errors.hpp"
#include "tlsim/format.hpp"
#include "tlsim/parallel.hpp"

namespace tlsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Upper bound on (angle blocks x planes) held in memory during averaging.
constexpr std::size_t kMaxPartialSums = 16;

double pm_to_um(double pm) { return pm * 1e-6; }
double m_to_um(double m) { return m * 1e6; }

void require_sampling(std::size_t n, double window_um, double wavelength_pm, double distance_m) {
  if (!fresnel_sampling_ok(n, window_um, wavelength_pm, distance_m)) {
    throw ResolutionError("Fresnel step of " + format_double(distance_m) + " m at " + format_double(wavelength_pm) +
                          " pm undersamples the transfer function on a " + format_double(window_um) + " um / " +
                          std::to_string(n) + "-point grid (need lambda*z*n <= window^2)");
  }
}

/// exp(-2 pi i f_k shift) for every DFT bin, built from two short tables so the
/// cost is one complex multiply per bin.
class ShiftRamp {
 public:
  ShiftRamp(std::size_t n, double window_um) : n_(n), window_um_(window_um) {}

  void fill(double shift_um, std::span<cplx> out) const {
    constexpr std::size_t kLo = 256;
    const double step = -kTwoPi * shift_um / window_um_;
    const auto half = static_cast<std::ptrdiff_t>(n_ / 2);
    std::vector<cplx> lo(kLo);
    for (std::size_t b = 0; b < kLo; ++b) lo[b] = std::polar(1.0, step * static_cast<double>(b));
    const std::ptrdiff_t a_min = -((half + kLo - 1) / static_cast<std::ptrdiff_t>(kLo)) - 1;
    const std::ptrdiff_t a_max = half / static_cast<std::ptrdiff_t>(kLo) + 1;
    std::vector<cplx> hi(static_cast<std::size_t>(a_max - a_min + 1));
    for (std::ptrdiff_t a = a_min; a <= a_max; ++a) {
      hi[static_cast<std::size_t>(a - a_min)] = std::polar(1.0, step * static_cast<double>(a * static_cast<std::ptrdiff_t>(kLo)));
    }
    for (std::size_t k = 0; k < n_; ++k) {
      const std::ptrdiff_t m = k < (n_ + 1) / 2 ? static_cast<std::ptrdiff_t>(k) : static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(n_);
      std::ptrdiff_t a = m / static_cast<std::ptrdiff_t>(kLo);
      std::ptrdiff_t b = m % static_cast<std::ptrdiff_t>(kLo);
      if (b < 0) {
        b += static_cast<std::ptrdiff_t>(kLo);
        --a;
      }
      out[k] = hi[static_cast<std::size_t>(a - a_min)] * lo[static_cast<std::size_t>(b)];
    }
  }

 private:
  std::size_t n_;
  double window_um_;
};

CVector transfer_function(std::size_t n, double dx_um, double wavelength_pm, double distance_m, double carrier = 0.0) {
  CVector h(n);
  const double coeff = -std::numbers::pi * pm_to_um(wavelength_pm) * m_to_um(distance_m);
  for (std::size_t k = 0; k < n; ++k) {
    const double f = dft_frequency(k, n, dx_um);
    // The carrier's own f^2 term is a constant phase and is dropped.
    h[k] = std::polar(1.0, coeff * (f * f + 2.0 * f * carrier));
  }
  return h;
}

IntensityProfile make_profile(const Grid& grid, std::vector<double> intensity, double plane_m, double period_um) {
  IntensityProfile p;
  p.x_um.resize(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i) p.x_um[i] = grid.x(i);
  double sum = 0.0;
  for (double v : intensity) sum += v;
  const double mean = sum / static_cast<double>(intensity.size());
  if (mean > 0.0) {
    for (double& v : intensity) v /= mean;
  }
  p.intensity = std::move(intensity);
  p.plane_distance_m = plane_m;
  p.nominal_period_um = period_um;
  return p;
}

ComplexField masked_plane_wave(const GratingSpec& g, const Grid& grid) {
  const auto t = grating_transmission_profile(g, grid);
  ComplexField f{CVector(t.begin(), t.end()), grid.spacing_um()};
  return f;
}

Grid grid_of(const EffectiveSetup& s) { return Grid{s.n_points, s.window_um}; }

/// Tilt-independent part of the on-axis two-grating propagation at one
/// wavelength: the field arriving at G2 and the L2 transfer functions.
class OnAxisPropagator {
 public:
  OnAxisPropagator(const GratingSpec& g1, const GratingSpec& g2, const Grid& grid, double wavelength_pm, double l1_m,
                   std::span<const double> l2_m)
      : grid_(grid), l1_m_(l1_m), l2_m_(l2_m.begin(), l2_m.end()), t2_(grating_transmission_profile(g2, grid)),
        ramp_(grid.n_points, grid.window_um) {
    require_sampling(grid.n_points, grid.window_um, wavelength_pm, l1_m);
    for (double z : l2_m_) require_sampling(grid.n_points, grid.window_um, wavelength_pm, z);
    at_g2_ = fresnel_transfer(masked_plane_wave(g1, grid), wavelength_pm, l1_m).samples;
    h2_.reserve(l2_m_.size());
    for (double z : l2_m_) h2_.push_back(transfer_function(grid.n_points, grid.spacing_um(), wavelength_pm, z));
  }

  std::size_t planes() const { return l2_m_.size(); }

  /// Adds |u|^2 for the quantised tilt into acc[p] for every plane p.
  void accumulate(double tilt_rad, std::span<std::vector<double>> acc, CVector& spectrum, CVector& work) const {
    const std::size_t n = grid_.n_points;
    const long long shift = g2_shift_steps(tilt_rad);
    const auto ln = static_cast<long long>(n);
    spectrum.resize(n);
    work.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const auto src = static_cast<std::size_t>(((static_cast<long long>(j) + shift) % ln + ln) % ln);
      spectrum[j] = at_g2_[j] * t2_[src];
    }
    fft_forward(spectrum);
    CVector ramp(n);
    for (std::size_t p = 0; p < l2_m_.size(); ++p) {
      const double out_shift_um = tilt_rad * m_to_um(l1_m_ + l2_m_[p]);
      ramp_.fill(out_shift_um, ramp);
      const CVector& h = h2_[p];
      for (std::size_t k = 0; k < n; ++k) work[k] = spectrum[k] * h[k] * ramp[k];
      fft_inverse(work);
      auto& a = acc[p];
      for (std::size_t j = 0; j < n; ++j) a[j] += std::norm(work[j]);
    }
  }

  long long g2_shift_steps(double tilt_rad) const {
    const double steps = tilt_rad * m_to_um(l1_m_) / grid_.spacing_um();
    const double rounded = std::round(steps);
    if (std::abs(steps - rounded) > 1e-6) {
      throw DomainError("tilt " + format_double(tilt_rad) + " rad is not quantised to the grid; use quantize_tilt");
    }
    return static_cast<long long>(rounded);
  }

 private:
  Grid grid_;
  double l1_m_;
  std::vector<double> l2_m_;
  std::vector<double> t2_;
  ShiftRamp ramp_;
  CVector at_g2_;
  std::vector<CVector> h2_;
};

std::vector<std::vector<double>> average_quantum(const SimulationConfig& config, const EffectiveSetup& setup,
                                                 double energy_kev, std::span<const double> l2_m) {
  const Grid grid = grid_of(setup);
  const std::size_t n = grid.n_points;
  const std::size_t planes = l2_m.size();
  const double half_angle = config.beam.divergence_half_angle_mrad * 1e-3;
  const auto tilts = illumination_tilts(half_angle, config.resolution.n_angles, config.geometry.l1_m, grid);
  const auto energies = energy_nodes(energy_kev, config.beam.energy_sigma_rel, config.resolution.n_energy_samples);

  std::vector<std::vector<double>> total(planes, std::vector<double>(n, 0.0));
  const std::size_t blocks = std::min(tilts.size(), std::max<std::size_t>(1, kMaxPartialSums / planes));

  for (double e : energies) {
    const OnAxisPropagator prop(setup.g1, setup.g2, grid, debroglie_wavelength_pm(e), config.geometry.l1_m, l2_m);
    std::vector<std::vector<std::vector<double>>> partial(blocks, std::vector<std::vector<double>>(planes, std::vector<double>(n, 0.0)));
    parallel_for(blocks, config.run.workers, [&](std::size_t b) {
      const std::size_t lo = b * tilts.size() / blocks;
      const std::size_t hi = (b + 1) * tilts.size() / blocks;
      CVector spectrum, work;
      for (std::size_t i = lo; i < hi; ++i) prop.accumulate(tilts[i], partial[b], spectrum, work);
    });
    for (std::size_t b = 0; b < blocks; ++b) {
      for (std::size_t p = 0; p < planes; ++p) {
        auto& t = total[p];
        const auto& s = partial[b][p];
        for (std::size_t j = 0; j < n; ++j) t[j] += s[j];
      }
    }
  }
  return total;
}

}  // namespace

std::vector<double> grating_transmission_profile(const GratingSpec& g, const Grid& grid) {
  if (!commensurate(grid.window_um, g.period_um)) {
    throw ConfigError("resolution.window_um", "window " + format_double(grid.window_um) +
                                                  " um is not an integer multiple of the grating period " +
                                                  format_double(g.period_um) + " um");
  }
  std::vector<double> t(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i) t[i] = g.transmission(grid.x(i));
  return t;
}

bool fresnel_sampling_ok(std::size_t n_points, double window_um, double wavelength_pm, double distance_m) {
  // lambda z f_max^2 <= n/4 with f_max = n / (2 W)  <=>  lambda z n <= W^2.
  return pm_to_um(wavelength_pm) * m_to_um(distance_m) * static_cast<double>(n_points) <= window_um * window_um;
}

ComplexField fresnel_transfer(const ComplexField& field, double wavelength_pm, double distance_m) {
  return fresnel_transfer_tilted(field, wavelength_pm, distance_m, 0.0);
}

ComplexField fresnel_transfer_tilted(const ComplexField& envelope, double wavelength_pm, double distance_m,
                                     double tilt_rad) {
  if (!(distance_m >= 0.0)) throw DomainError("propagation distance must be >= 0");
  if (!(wavelength_pm > 0.0)) throw DomainError("wavelength must be > 0");
  if (distance_m == 0.0) return envelope;
  const std::size_t n = envelope.samples.size();
  require_sampling(n, envelope.window_width_um(), wavelength_pm, distance_m);
  ComplexField out = envelope;
  fft_forward(out.samples);
  const double carrier = tilt_rad / pm_to_um(wavelength_pm);
  const CVector h = transfer_function(n, envelope.grid_spacing_um, wavelength_pm, distance_m, carrier);
  for (std::size_t k = 0; k < n; ++k) out.samples[k] *= h[k];
  fft_inverse(out.samples);
  return out;
}

IntensityProfile propagate_coherent(const GratingSpec& g1, const GratingSpec& g2, const InterferometerGeometry& geom,
                                    double wavelength_pm, double l2_eff_m, double tilt_rad, const Grid& grid) {
  if (std::abs(tilt_rad) > 5e-3) throw DomainError("illumination tilt must lie within +-5 mrad");
  ComplexField u = masked_plane_wave(g1, grid);
  u = fresnel_transfer_tilted(u, wavelength_pm, geom.l1_m, tilt_rad);
  const auto t2 = grating_transmission_profile(g2, grid);
  for (std::size_t i = 0; i < grid.n_points; ++i) u.samples[i] *= t2[i];
  u = fresnel_transfer_tilted(u, wavelength_pm, l2_eff_m, tilt_rad);
  std::vector<double> intensity(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i) intensity[i] = std::norm(u.samples[i]);
  return make_profile(grid, std::move(intensity), l2_eff_m, beat_period_um(g1.period_um, g2.period_um));
}

IntensityProfile propagate_shifted(const GratingSpec& g1, const GratingSpec& g2, const InterferometerGeometry& geom,
                                   double wavelength_pm, double l2_eff_m, double tilt_rad, const Grid& grid) {
  if (std::abs(tilt_rad) > 5e-3) throw DomainError("illumination tilt must lie within +-5 mrad");
  const double planes[] = {l2_eff_m};
  const OnAxisPropagator prop(g1, g2, grid, wavelength_pm, geom.l1_m, planes);
  std::vector<std::vector<double>> acc(1, std::vector<double>(grid.n_points, 0.0));
  CVector spectrum, work;
  prop.accumulate(tilt_rad, acc, spectrum, work);
  return make_profile(grid, std::move(acc[0]), l2_eff_m, beat_period_um(g1.period_um, g2.period_um));
}

double quantize_tilt(double tilt_rad, double l1_m, const Grid& grid) {
  const double step = grid.spacing_um() / m_to_um(l1_m);
  return std::round(tilt_rad / step) * step;
}

std::vector<double> illumination_tilts(double half_angle_rad, std::size_t n, double l1_m, const Grid& grid) {
  if (half_angle_rad == 0.0 || n == 1) return {0.0};
  std::vector<double> tilts(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double a = -half_angle_rad + (static_cast<double>(j) + 0.5) * 2.0 * half_angle_rad / static_cast<double>(n);
    tilts[j] = quantize_tilt(a, l1_m, grid);
  }
  return tilts;
}

std::vector<double> energy_nodes(double energy_kev, double sigma_rel, std::size_t n) {
  if (n <= 1 || sigma_rel == 0.0) return {energy_kev};
  std::vector<double> e(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double q = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
    e[j] = energy_kev * (1.0 + sigma_rel * gsl_cdf_ugaussian_Pinv(q));
  }
  return e;
}

std::vector<IntensityProfile> quantum_intensity_planes(const SimulationConfig& config, double energy_kev,
                                                       std::span<const double> l2_eff_m) {
  config.validate();
  if (!(energy_kev > 0)) throw DomainError("energy must be > 0");
  const EffectiveSetup setup = resolve_setup(config);
  auto sums = average_quantum(config, setup, energy_kev, l2_eff_m);
  const Grid grid = grid_of(setup);
  std::vector<IntensityProfile> out;
  out.reserve(sums.size());
  for (std::size_t p = 0; p < sums.size(); ++p) {
    out.push_back(make_profile(grid, std::move(sums[p]), l2_eff_m[p], setup.fringe_period_um));
  }
  return out;
}

QuantumIntensity quantum_intensity(const SimulationConfig& config, double energy_kev, double l2_eff_m,
                                   const QuantumOptions& options) {
  const double planes[] = {l2_eff_m};
  QuantumIntensity q;
  q.profile = std::move(quantum_intensity_planes(config, energy_kev, planes).front());
  q.visibility = profile_visibility(q.profile, q.profile.nominal_period_um);
  if (options.check_convergence && config.resolution.n_angles > 1 && config.beam.divergence_half_angle_mrad > 0) {
    SimulationConfig doubled = config;
    doubled.resolution.n_angles *= 2;
    const auto p2 = quantum_intensity_planes(doubled, energy_kev, planes).front();
    q.visibility_doubled_angles = profile_visibility(p2, p2.nominal_period_um);
    q.converged = std::abs(q.visibility_doubled_angles - q.visibility) <= 0.01 * std::max(q.visibility, 0.05);
  } else {
    q.visibility_doubled_angles = q.visibility;
  }
  return q;
}

std::vector<IntensityProfile> classical_intensity_planes(const SimulationConfig& config,
                                                         std::span<const double> l2_eff_m) {
  config.validate();
  const EffectiveSetup setup = resolve_setup(config);
  const Grid grid = grid_of(setup);
  const std::size_t n = grid.n_points;
  const double half_angle = config.beam.divergence_half_angle_mrad * 1e-3;
  const std::size_t n_angles = half_angle == 0.0 ? 1 : config.resolution.n_angles;
  std::vector<double> tilts(n_angles, 0.0);
  if (n_angles > 1) {
    for (std::size_t j = 0; j < n_angles; ++j) {
      tilts[j] = -half_angle + (static_cast<double>(j) + 0.5) * 2.0 * half_angle / static_cast<double>(n_angles);
    }
  }
  const double l1_um = m_to_um(config.geometry.l1_m);
  const GratingSpec& g1 = setup.g1;
  const GratingSpec& g2 = setup.g2;

  std::vector<IntensityProfile> out;
  for (double l2 : l2_eff_m) {
    const double l2_um = m_to_um(l2);
    std::vector<double> intensity(n, 0.0);
    constexpr std::size_t kChunk = 4096;
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    // A ray reaching x at tilt a crossed G2 at x - a*l2 and G1 at x - a*(l1 + l2).
    parallel_for(chunks, config.run.workers, [&](std::size_t c) {
      const std::size_t lo = c * kChunk;
      const std::size_t hi = std::min(n, lo + kChunk);
      for (double a : tilts) {
        const double s1 = a * (l1_um + l2_um);
        const double s2 = a * l2_um;
        for (std::size_t i = lo; i < hi; ++i) {
          const double x = grid.x(i);
          intensity[i] += g1.transmission(x - s1) * g2.transmission(x - s2);
        }
      }
    });
    out.push_back(make_profile(grid, std::move(intensity), l2, setup.fringe_period_um));
  }
  return out;
}

IntensityProfile classical_intensity(const SimulationConfig& config, double l2_eff_m) {
  const double planes[] = {l2_eff_m};
  return std::move(classical_intensity_planes(config, planes).front());
}

double profile_visibility(const IntensityProfile& p, double period_um) {
  const double dx = p.grid_spacing_um();
  if (!(period_um > 2.0 * dx)) throw ResolutionError("visibility period must exceed two grid steps");
  if (p.window_um() < 8.0 * period_um * (1.0 - 1e-9)) throw ResolutionError("profile spans fewer than 8 periods");
  double c0 = 0.0;
  cplx c1 = 0.0;
  for (std::size_t i = 0; i < p.x_um.size(); ++i) {
    c0 += p.intensity[i];
    c1 += p.intensity[i] * std::polar(1.0, -kTwoPi * p.x_um[i] / period_um);
  }
  if (c0 <= 0.0) return 0.0;
  return 2.0 * std::abs(c1) / c0;
}

}  // namespace tlsim
