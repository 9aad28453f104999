#include "tlsim/physics.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "tlsim/errors.hpp"

namespace tlsim {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(what) + " must be positive and finite");
  }
}

void check(bool ok, const std::string& field, const char* msg) {
  if (!ok) throw ConfigError(field, msg);
}

}  // namespace

void BeamSpec::validate() const {
  check(kinetic_energy_kev > 0 && std::isfinite(kinetic_energy_kev), "beam.energy_kev", "must be > 0");
  check(energy_sigma_rel >= 0 && energy_sigma_rel <= 0.01, "beam.energy_sigma_rel", "must lie in [0, 0.01]");
  check(divergence_half_angle_mrad > 0 && divergence_half_angle_mrad <= 5.0, "beam.divergence_mrad",
        "must lie in (0, 5]");
  check(spot_width_mm > 0, "beam.spot_width_mm", "must be > 0");
  check(flux_per_s > 0, "beam.flux_per_s", "must be > 0");
}

bool BeamSpec::energy_in_nominal_range() const {
  return kinetic_energy_kev >= 5.0 && kinetic_energy_kev <= 18.0;
}

void GratingSpec::validate(const char* section) const {
  const std::string s(section);
  check(period_um > 0 && std::isfinite(period_um), s + ".period_um", "must be > 0");
  check(open_fraction > 0 && open_fraction <= 1, s + ".open_fraction", "must lie in (0, 1]");
  check(std::isfinite(lateral_offset_um), s + ".offset_um", "must be finite");
  check(std::isfinite(rotation_mrad), s + ".rotation_mrad", "must be finite");
}

double GratingSpec::transmission(double x_um) const {
  if (open_fraction >= 1.0) return 1.0;
  // Signed distance from the nearest slit centre, in units of the period.
  const double r = (x_um - lateral_offset_um) / period_um;
  const double frac = r - std::round(r);
  return std::abs(frac) < 0.5 * open_fraction ? 1.0 : 0.0;
}

void InterferometerGeometry::validate() const {
  check(l1_m > 0 && std::isfinite(l1_m), "geometry.l1_m", "must be > 0");
  check(l2_m > 0 && std::isfinite(l2_m), "geometry.l2_m", "must be > 0");
  check(detector_tilt_deg >= 0 && detector_tilt_deg < 90, "geometry.tilt_deg", "must lie in [0, 90)");
  check(collimator_width_mm > 0, "geometry.collimator_mm", "must be > 0");
}

double momentum_kev_c(double e) {
  require_positive(e, "kinetic energy");
  return std::sqrt(e * e + 2.0 * e * PhysicalConstants::electron_rest_energy);
}

double debroglie_wavelength_pm(double e) {
  // hc in keV nm over pc in keV gives nm.
  return PhysicalConstants::planck_hc / momentum_kev_c(e) * 1.0e3;
}

double beta(double e) {
  return momentum_kev_c(e) / (e + PhysicalConstants::electron_rest_energy);
}

double transit_time_s(double e, double path_length_m) {
  require_positive(path_length_m, "path length");
  return path_length_m / (PhysicalConstants::speed_of_light * beta(e));
}

double resonance_residual(double l1_m, double l2_m, double d1_um, double d2_um) {
  if (l2_m == 0.0) throw DomainError("resonance_residual: l2 must be non-zero");
  if (d2_um == 0.0) throw DomainError("resonance_residual: d2 must be non-zero");
  return l1_m / l2_m - (d1_um / d2_um - 1.0);
}

double resonance_residual(const InterferometerGeometry& geom, const GratingSpec& g1, const GratingSpec& g2) {
  return resonance_residual(geom.l1_m, geom.l2_m, g1.period_um, g2.period_um);
}

double resonant_g1_period_um(double g2_period_um, double l1_m, double l2_m) {
  require_positive(g2_period_um, "g2 period");
  require_positive(l2_m, "l2");
  return g2_period_um * (1.0 + l1_m / l2_m);
}

double magnified_period_um(double g2_period_um, double l1_m, double l2_m) {
  if (l1_m == 0.0) throw DomainError("magnified_period: l1 must be non-zero");
  return g2_period_um * (l1_m + l2_m) / l1_m;
}

double beat_period_um(double d1_um, double d2_um) {
  require_positive(d1_um, "d1");
  require_positive(d2_um, "d2");
  if (d1_um == d2_um) return d1_um;
  return d1_um * d2_um / std::abs(d1_um - d2_um);
}

double talbot_length_m(double period_um, double wavelength_pm) {
  require_positive(period_um, "period");
  require_positive(wavelength_pm, "wavelength");
  const double d = period_um * 1e-6;
  return 2.0 * d * d / (wavelength_pm * 1e-12);
}

double longitudinal_mapping_m(double s_mm, const InterferometerGeometry& geom) {
  if (!(geom.detector_tilt_deg >= 0 && geom.detector_tilt_deg < 90)) {
    throw DomainError("detector tilt must lie in [0, 90) degrees");
  }
  const double slope = std::cos(geom.detector_tilt_deg * std::numbers::pi / 180.0);
  return geom.l2_m + s_mm * 1e-3 * slope;
}

double longitudinal_mapping_m(double s_mm, const InterferometerGeometry& geom, double half_extent_s_mm) {
  if (std::abs(s_mm) > half_extent_s_mm) {
    throw DomainError("emulsion coordinate s lies outside the emulsion extent");
  }
  return longitudinal_mapping_m(s_mm, geom);
}

}  // namespace tlsim
