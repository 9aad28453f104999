#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tlsim/config.hpp"
#include "tlsim/fft.hpp"
#include "tlsim/physics.hpp"

namespace tlsim {

/// Complex amplitude on a periodic window of count * grid_spacing_um.
struct ComplexField {
  CVector samples;
  double grid_spacing_um = 0.0;

  double window_width_um() const { return static_cast<double>(samples.size()) * grid_spacing_um; }
};

/// Fringe intensity at one longitudinal plane, normalised to unit mean.
struct IntensityProfile {
  std::vector<double> x_um;
  std::vector<double> intensity;
  double plane_distance_m = 0.0;
  double nominal_period_um = 0.0;

  double grid_spacing_um() const { return x_um.size() > 1 ? x_um[1] - x_um[0] : 0.0; }
  double window_um() const { return grid_spacing_um() * static_cast<double>(x_um.size()); }
};

/// Periodic sampling grid shared by every field in one propagation.
struct Grid {
  std::size_t n_points;
  double window_um;

  double spacing_um() const { return window_um / static_cast<double>(n_points); }
  double x(std::size_t i) const { return static_cast<double>(i) * spacing_um(); }
};

/// Binary mask t(x_i) on the grid. Throws ConfigError if the window is not an
/// integer number of grating periods.
std::vector<double> grating_transmission_profile(const GratingSpec& g, const Grid& grid);

/// Paraxial free-space step: multiplies the spectrum by exp(-i pi lambda z f^2).
/// Throws ResolutionError when lambda z f_max^2 > n/4, i.e. the transfer
/// function's chirp is undersampled (grid spacing < lambda z / window).
ComplexField fresnel_transfer(const ComplexField& field, double wavelength_pm, double distance_m);

/// Same step for the field exp(2 pi i x tilt/lambda) * v(x), carrying the
/// carrier analytically: v is propagated with H(f + tilt/lambda). Returns v.
ComplexField fresnel_transfer_tilted(const ComplexField& envelope, double wavelength_pm, double distance_m,
                                     double tilt_rad);

/// Lambda z f_max^2 for the grid, against the n/4 bound.
bool fresnel_sampling_ok(std::size_t n_points, double window_um, double wavelength_pm, double distance_m);

/// Direct propagation of a unit plane wave incident at `tilt_rad` through
/// G1 -> l1 -> G2 -> l2_eff. Returns |u|^2 normalised to unit mean.
IntensityProfile propagate_coherent(const GratingSpec& g1, const GratingSpec& g2, const InterferometerGeometry& geom,
                                    double wavelength_pm, double l2_eff_m, double tilt_rad, const Grid& grid);

/// The same pattern computed on axis: G2 shifted laterally by -tilt*l1 and the
/// output shifted by tilt*(l1 + l2_eff). The G2 shift must be a whole number
/// of grid steps; see quantize_tilt.
IntensityProfile propagate_shifted(const GratingSpec& g1, const GratingSpec& g2, const InterferometerGeometry& geom,
                                   double wavelength_pm, double l2_eff_m, double tilt_rad, const Grid& grid);

/// Nearest tilt whose lateral walk over l1 is a whole number of grid steps.
double quantize_tilt(double tilt_rad, double l1_m, const Grid& grid);

/// Stratified illumination tilts across [-half_angle, +half_angle], quantised.
std::vector<double> illumination_tilts(double half_angle_rad, std::size_t n, double l1_m, const Grid& grid);

/// Energies and weights for the incoherent energy-spread average (normal quantile midpoints).
std::vector<double> energy_nodes(double energy_kev, double sigma_rel, std::size_t n);

struct QuantumOptions {
  bool check_convergence = false;
};

struct QuantumIntensity {
  IntensityProfile profile;
  double visibility = 0.0;
  bool converged = true;
  double visibility_doubled_angles = 0.0;  // set when convergence was checked
};

/// Incoherent average of the coherent pattern over the illumination tilts
/// (and energy nodes) at a single plane.
QuantumIntensity quantum_intensity(const SimulationConfig& config, double energy_kev, double l2_eff_m,
                                   const QuantumOptions& options = {});

/// Several planes sharing the per-tilt field behind G2.
std::vector<IntensityProfile> quantum_intensity_planes(const SimulationConfig& config, double energy_kev,
                                                       std::span<const double> l2_eff_m);

/// Straight-ray shadow of both gratings averaged over the illumination tilts.
/// There is no wavelength: the result depends on geometry and gratings only.
IntensityProfile classical_intensity(const SimulationConfig& config, double l2_eff_m);
std::vector<IntensityProfile> classical_intensity_planes(const SimulationConfig& config,
                                                         std::span<const double> l2_eff_m);

/// First-harmonic visibility V = 2|c1|/c0 at the given period.
/// Throws ResolutionError if period <= 2 grid steps or the profile spans fewer than 8 periods.
double profile_visibility(const IntensityProfile& profile, double period_um);

}  // namespace tlsim
