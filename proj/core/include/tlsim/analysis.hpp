#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tlsim/config.hpp"
#include "tlsim/montecarlo.hpp"

namespace tlsim {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Complex phase sum over events folded at `period` along the direction
/// rotated by `rotation_mrad`: sum_j exp(2 pi i (u cos r + s sin r) / period).
std::complex<double> rayleigh_sum(std::span<const Event> events, double period_um, double rotation_mrad);

/// R = (2/n) |rayleigh_sum|. A pure comb gives 2; a sinusoid of contrast C gives about C.
double rayleigh_power(std::span<const Event> events, double period_um, double rotation_mrad);

struct CorrectedContrast {
  double contrast = 0.0;
  double sigma = 0.0;
};

/// Removes the 4/n noise floor from R^2. sigma is the small-signal sqrt(2/n),
/// optimistic above C ~ 0.5.
CorrectedContrast corrected_contrast(double rayleigh_power, std::size_t n);

struct FitFlags {
  bool boundary = false;          // optimum on the edge of the search range
  bool low_significance = false;  // grid max/mean < 3
  bool merged = false;            // longitudinal bin merged with a neighbour

  bool any() const { return boundary || low_significance || merged; }
  std::string to_string() const;  // comma-separated, or "none"
};

struct FringeFitResult {
  double period_um = 0.0;
  double rotation_mrad = 0.0;
  double phase_rad = 0.0;
  double contrast = 0.0;
  double contrast_sigma = 0.0;
  std::size_t n_events = 0;
  double rayleigh_power = 0.0;
  double grid_max_over_mean = 0.0;
  FitFlags flags;
};

/// Grid search on R over (period, rotation) with phase drift < pi/4 per step
/// across the event span, then Nelder-Mead to 1e-4 um / 1e-2 mrad.
/// Ties go to the lowest period, then the lowest rotation.
FringeFitResult fit_fringes(std::span<const Event> events, Interval period_um, Interval rotation_mrad,
                            unsigned workers = 0);

struct ContrastCurve {
  std::vector<double> abscissa;  // keV for energy scans, mm for longitudinal scans
  std::vector<double> contrast;
  std::vector<double> sigma;
  std::string label;  // "energy-scan" or "longitudinal-scan"
};

struct FitSettings {
  double period_half_width_rel = 0.025;  // period search is seed * (1 +- this)
  double rotation_half_width_mrad = 2.0;
  std::size_t min_events_per_bin = 1000;
};

struct LongitudinalScan {
  ContrastCurve curve;
  std::vector<double> period_seed_um;  // d3 at the mapped plane of each (merged) bin
  std::vector<FringeFitResult> fits;
};

/// Bins events by s over the emulsion extent, merges bins with fewer than
/// min_events_per_bin events into a neighbour, and fits each bin around
/// d3(l2_eff) of its centre.
LongitudinalScan contrast_vs_longitudinal(std::span<const Event> events, std::size_t n_bins,
                                          const SimulationConfig& config, const FitSettings& settings = {});

struct EnergyScan {
  ContrastCurve measured;
  ContrastCurve model;  // noise-free engine visibility at s = 0
  std::vector<FringeFitResult> fits;
};

/// One exposure per energy (same seed), fitted on the central |s| <= extent/8 slice.
EnergyScan contrast_vs_energy(const SimulationConfig& config, std::span<const double> energies_kev, ModelKind kind,
                              std::size_t n_per_exposure, std::uint64_t seed, const FitSettings& settings = {});

/// Period search window used by the scans and the CLI: d3 at the nominal plane.
Interval default_period_range(const SimulationConfig& config, double half_width_rel);
/// Rotation window centred on the configured fringe rotation.
Interval default_rotation_range(const SimulationConfig& config, double half_width_mrad);

}  // namespace tlsim
