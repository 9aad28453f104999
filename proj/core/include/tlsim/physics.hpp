#pragma once

// Positron kinematics and closed-form relations of the two-grating
// interferometer. Units are carried in the names: keV, um, m, mm, pm, s.

namespace tlsim {

struct PhysicalConstants {
  static constexpr double planck_hc = 1.23984193;            // keV nm
  static constexpr double electron_rest_energy = 510.99895;  // keV
  static constexpr double speed_of_light = 2.99792458e8;     // m/s
};

struct BeamSpec {
  double kinetic_energy_kev = 14.0;
  double energy_sigma_rel = 0.001;
  double divergence_half_angle_mrad = 1.5;
  double spot_width_mm = 2.0;
  double flux_per_s = 1.0e3;

  /// Throws ConfigError naming the `beam.*` key on violation.
  void validate() const;
  /// Energy inside the facility range [5, 18] keV. Outside is allowed but warned about.
  bool energy_in_nominal_range() const;
};

struct GratingSpec {
  double period_um = 1.0;
  double open_fraction = 0.5;  // 1 means no bars
  double lateral_offset_um = 0.0;
  double rotation_mrad = 0.0;

  void validate(const char* section) const;

  /// Binary transmission: 1 inside the slit of width open_fraction * period
  /// centred at lateral_offset_um (mod period), 0 on the bar.
  double transmission(double x_um) const;
};

struct InterferometerGeometry {
  double l1_m = 0.118;
  double l2_m = 0.576;
  double detector_tilt_deg = 45.0;
  double collimator_width_mm = 2.0;

  void validate() const;
};

// Kinematics. All throw DomainError on non-positive energies or lengths.
double momentum_kev_c(double kinetic_energy_kev);
double debroglie_wavelength_pm(double kinetic_energy_kev);
double beta(double kinetic_energy_kev);
double transit_time_s(double kinetic_energy_kev, double path_length_m);

/// l1/l2 - (d1/d2 - 1); zero when the period-magnifying resonance holds.
double resonance_residual(const InterferometerGeometry& geom, const GratingSpec& g1, const GratingSpec& g2);
double resonance_residual(double l1_m, double l2_m, double d1_um, double d2_um);

/// G1 period that zeroes the resonance residual for the given drifts.
double resonant_g1_period_um(double g2_period_um, double l1_m, double l2_m);

/// d2 * (l1 + l2) / l1.
double magnified_period_um(double g2_period_um, double l1_m, double l2_m);

/// Period of the beat between two gratings, d1 d2 / |d1 - d2|.
/// Equal periods have no beat; the grating period itself is returned.
double beat_period_um(double d1_um, double d2_um);

/// 2 d^2 / lambda.
double talbot_length_m(double period_um, double wavelength_pm);

/// Axial distance from G2 of the emulsion point at in-plane coordinate s.
/// s = 0 sits on the nominal detector plane at l2; slope is cos(tilt).
double longitudinal_mapping_m(double s_mm, const InterferometerGeometry& geom);

/// Same, with the emulsion extent enforced.
double longitudinal_mapping_m(double s_mm, const InterferometerGeometry& geom, double half_extent_s_mm);

}  // namespace tlsim
