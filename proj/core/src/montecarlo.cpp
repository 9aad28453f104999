#include "tlsim/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tlsim/errors.hpp"
#include "tlsim/parallel.hpp"
#include "tlsim/random.hpp"

namespace tlsim {

namespace {

constexpr std::size_t kBlock = 4096;

/// Inverse CDF of a periodic piecewise-constant density. Cell i is centred
/// on profile.x_um[i].
class PeriodicSampler {
 public:
  explicit PeriodicSampler(const IntensityProfile& p) : dx_(p.grid_spacing_um()), window_(p.window_um()) {
    if (p.intensity.size() < 2) throw ModelError("intensity profile needs at least two samples");
    values_ = p.intensity;
    cumulative_.resize(values_.size() + 1, 0.0);
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double v = values_[i];
      if (!(v >= 0.0) || !std::isfinite(v)) throw ModelError("intensity must be finite and non-negative");
      cumulative_[i + 1] = cumulative_[i] + v * dx_;
    }
    total_ = cumulative_.back();
    if (!(total_ > 0.0)) throw ModelError("intensity is identically zero; nothing to sample");
  }

  /// Integral of the density from the start of cell 0 up to x.
  double integral(double x) const {
    const double y = x + 0.5 * dx_;
    const double k = std::floor(y / window_);
    double r = y - k * window_;
    auto i = static_cast<std::size_t>(r / dx_);
    if (i >= values_.size()) i = values_.size() - 1;
    r -= static_cast<double>(i) * dx_;
    return k * total_ + cumulative_[i] + values_[i] * r;
  }

  double inverse(double target) const {
    const double k = std::floor(target / total_);
    const double r = target - k * total_;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
    std::size_t i = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    if (i >= values_.size()) i = values_.size() - 1;
    while (values_[i] == 0.0 && i + 1 < values_.size()) ++i;
    const double within = std::clamp((r - cumulative_[i]) / values_[i], 0.0, dx_);
    return k * window_ + static_cast<double>(i) * dx_ + within - 0.5 * dx_;
  }

 private:
  double dx_;
  double window_;
  std::vector<double> values_;
  std::vector<double> cumulative_;
  double total_ = 0.0;
};

IntensityProfile flat_profile() {
  IntensityProfile p;
  for (int i = 0; i < 8; ++i) {
    p.x_um.push_back(i);
    p.intensity.push_back(1.0);
  }
  p.nominal_period_um = 8.0;
  return p;
}

double half_u_um(const DetectorSpec& det) { return det.half_extent_u_mm * 1e3; }
double half_s_um(const DetectorSpec& det) { return det.half_extent_s_mm * 1e3; }

}  // namespace

std::string_view model_name(ModelKind kind) { return kind == ModelKind::quantum ? "quantum" : "classical"; }

ModelKind parse_model(std::string_view name) {
  if (name == "quantum") return ModelKind::quantum;
  if (name == "classical") return ModelKind::classical;
  throw ConfigError("model", "expected quantum or classical, got '" + std::string(name) + "'");
}

IntensityModel uniform_model(const DetectorSpec& det) {
  return IntensityModel{"uniform", {IntensityStratum{-half_s_um(det), half_s_um(det), flat_profile()}}};
}

IntensityModel sinusoid_model(double period_um, double contrast, const DetectorSpec& det, double phase_rad) {
  if (!(period_um > 0.0)) throw DomainError("sinusoid period must be > 0");
  if (!(contrast >= 0.0 && contrast <= 1.0)) throw DomainError("sinusoid contrast must lie in [0, 1]");
  constexpr std::size_t kPeriods = 64;
  constexpr std::size_t kPerPeriod = 256;
  IntensityProfile p;
  const std::size_t n = kPeriods * kPerPeriod;
  const double dx = period_um / kPerPeriod;
  p.x_um.resize(n);
  p.intensity.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.x_um[i] = static_cast<double>(i) * dx;
    p.intensity[i] = 1.0 + contrast * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / kPerPeriod + phase_rad);
  }
  p.nominal_period_um = period_um;
  return IntensityModel{"sinusoid", {IntensityStratum{-half_s_um(det), half_s_um(det), std::move(p)}}};
}

IntensityModel engine_model(const SimulationConfig& config, double energy_kev, ModelKind kind, GenerationTruth* truth) {
  const DetectorSpec& det = config.detector;
  const std::size_t k = det.n_strata;
  const double s_half = half_s_um(det);
  std::vector<double> centres_mm(k), planes(k);
  for (std::size_t i = 0; i < k; ++i) {
    centres_mm[i] = (-s_half + (static_cast<double>(i) + 0.5) * 2.0 * s_half / static_cast<double>(k)) * 1e-3;
    planes[i] = longitudinal_mapping_m(centres_mm[i], config.geometry, det.half_extent_s_mm);
  }
  auto profiles = kind == ModelKind::quantum ? quantum_intensity_planes(config, energy_kev, planes)
                                             : classical_intensity_planes(config, planes);
  IntensityModel model{std::string(model_name(kind)), {}};
  if (truth != nullptr) {
    truth->model = model.tag;
    truth->energy_kev = energy_kev;
    truth->stratum_s_mm = centres_mm;
    truth->contrast.clear();
    truth->period_um.clear();
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (truth != nullptr) {
      truth->contrast.push_back(profile_visibility(profiles[i], profiles[i].nominal_period_um));
      truth->period_um.push_back(profiles[i].nominal_period_um);
    }
    const double lo = -s_half + static_cast<double>(i) * 2.0 * s_half / static_cast<double>(k);
    const double hi = i + 1 == k ? s_half : -s_half + static_cast<double>(i + 1) * 2.0 * s_half / static_cast<double>(k);
    model.strata.push_back(IntensityStratum{lo, hi, std::move(profiles[i])});
  }
  return model;
}

EventList sample_events(const IntensityModel& model, std::size_t n, std::uint64_t seed, const DetectorSpec& det,
                        unsigned workers) {
  if (n < 1) throw DomainError("event count must be >= 1");
  if (model.strata.empty()) throw ModelError("intensity model has no strata");
  const std::size_t k = model.strata.size();
  std::vector<PeriodicSampler> samplers;
  samplers.reserve(k);
  for (const auto& st : model.strata) samplers.emplace_back(st.profile);

  const double theta = det.rotation_misalignment_mrad * 1e-3;
  const double c = std::cos(theta);
  const double sn = std::sin(theta);
  const double u_half = half_u_um(det);

  std::vector<std::size_t> offset(k + 1, 0);
  for (std::size_t i = 0; i < k; ++i) offset[i + 1] = offset[i] + n / k + (i < n % k ? 1 : 0);

  EventList out;
  out.seed = seed;
  out.events.resize(n);
  parallel_for(k, workers, [&](std::size_t i) {
    auto rng = substream(seed, "events", i);
    const auto& st = model.strata[i];
    const auto& sampler = samplers[i];
    for (std::size_t j = offset[i]; j < offset[i + 1]; ++j) {
      const double s = st.s_lo_um + uniform01(rng) * (st.s_hi_um - st.s_lo_um);
      const double a = sampler.integral(-u_half * c + s * sn);
      const double b = sampler.integral(u_half * c + s * sn);
      const double x = sampler.inverse(a + uniform01(rng) * (b - a));
      if (theta == 0.0) {
        out.events[j] = Event{std::clamp(x, -u_half, u_half), s};
      } else {
        const double u = std::clamp((x - s * sn) / c, -u_half, u_half);
        // Fringe frame: applying the misalignment rotation recovers (u, s).
        out.events[j] = Event{x, -u * sn + s * c};
      }
    }
  });
  return out;
}

EventList apply_detector_effects(const EventList& ev, const DetectorSpec& det, std::uint64_t seed, unsigned workers) {
  const double theta = det.rotation_misalignment_mrad * 1e-3;
  const double c = std::cos(theta);
  const double sn = std::sin(theta);
  const double u_half = half_u_um(det);
  const double s_half = half_s_um(det);
  const double sigma = det.position_sigma_um;
  const double bg = det.background_fraction;
  auto inside = [&](double u, double s) { return std::abs(u) <= u_half && std::abs(s) <= s_half; };

  EventList out;
  out.seed = ev.seed;
  out.truth = ev.truth;
  out.events = ev.events;
  const std::size_t n = out.events.size();
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  parallel_for(blocks, workers, [&](std::size_t b) {
    auto smear = substream(seed, "smear", b);
    auto background = substream(seed, "background", b);
    const std::size_t hi = std::min(n, (b + 1) * kBlock);
    for (std::size_t j = b * kBlock; j < hi; ++j) {
      Event& e = out.events[j];
      if (theta != 0.0) {
        const double u = e.u_um * c - e.s_um * sn;
        const double s = e.u_um * sn + e.s_um * c;
        e = Event{std::clamp(u, -u_half, u_half), std::clamp(s, -s_half, s_half)};
      }
      if (sigma > 0.0) {
        for (int attempt = 0; attempt < 10000; ++attempt) {
          const double u = e.u_um + sigma * standard_normal(smear);
          const double s = e.s_um + sigma * standard_normal(smear);
          if (inside(u, s)) {
            e = Event{u, s};
            break;
          }
        }
      }
      if (bg > 0.0 && uniform01(background) < bg) {
        const double u = (2.0 * uniform01(background) - 1.0) * u_half;
        const double s = (2.0 * uniform01(background) - 1.0) * s_half;
        e = Event{u, s};
      }
    }
  });
  return out;
}

EventList generate_exposure(const SimulationConfig& config, double energy_kev, ModelKind kind, std::size_t n,
                            std::uint64_t seed) {
  config.validate();
  if (n == 0) n = config.default_event_count();
  GenerationTruth truth;
  const IntensityModel model = engine_model(config, energy_kev, kind, &truth);

  // Common grating rotation turns the fringes; the emulsion misalignment adds to it.
  DetectorSpec det = config.detector;
  det.rotation_misalignment_mrad += config.g1.rotation_mrad;

  EventList ev = sample_events(model, n, seed, det, config.run.workers);
  ev = apply_detector_effects(ev, det, seed, config.run.workers);
  truth.rotation_mrad = det.rotation_misalignment_mrad;
  truth.sigma_um = det.position_sigma_um;
  truth.background_fraction = det.background_fraction;
  truth.n_events = n;
  truth.seed = seed;
  truth.scale_factor = config.run.scale_factor;
  ev.truth = std::move(truth);
  return ev;
}

}  // namespace tlsim
