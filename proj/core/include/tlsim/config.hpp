#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tlsim/physics.hpp"

namespace tlsim {

/// Sampling of the periodic propagation window.
struct SimulationResolution {
  std::size_t n_points = 131072;
  double window_um = 0.0;  // 0 = auto: commensurate window closest to 1536 um
  std::size_t n_angles = 512;
  std::size_t n_energy_samples = 1;
};

struct DetectorSpec {
  double position_sigma_um = 1.0;
  double rotation_misalignment_mrad = 0.0;
  double half_extent_u_mm = 1.0;
  double half_extent_s_mm = 10.0;
  double background_fraction = 0.0;
  std::size_t n_strata = 16;  // longitudinal planes evaluated across the emulsion

  void validate() const;
};

struct RunSettings {
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0 = hardware concurrency
  double exposure_hours = 100.0;
  double scale_factor = 1000.0;  // physical event count is divided by this
  std::size_t n_events = 0;      // 0 = flux * exposure / scale_factor
};

struct SimulationConfig {
  BeamSpec beam;
  GratingSpec g1{.period_um = 1.2};
  GratingSpec g2{.period_um = 1.0};
  InterferometerGeometry geometry;
  /// Propagate with the G1 period that satisfies l1/l2 = d1/d2 - 1 exactly;
  /// g1.period_um is then the nominal value only.
  bool lock_g1_to_resonance = true;
  DetectorSpec detector;
  SimulationResolution resolution;
  RunSettings run;

  void validate() const;
  std::size_t default_event_count() const;
};

/// Quantities derived from a validated config that the engines work with.
struct EffectiveSetup {
  GratingSpec g1;
  GratingSpec g2;
  double window_um;
  std::size_t n_points;
  double grid_spacing_um;
  double fringe_period_um;  // first harmonic of the two-grating pattern
};

EffectiveSetup resolve_setup(const SimulationConfig& config);

/// Commensurate window for two periods closest to `target_um`; throws ConfigError if none.
double auto_window_um(double d1_um, double d2_um, double target_um = 1536.0);
bool commensurate(double window_um, double period_um);

/// Parses the sectioned key=value format. Both `[section]` headers with bare
/// keys and fully-qualified `section.key = value` lines are accepted.
SimulationConfig parse_config(std::string_view text);
SimulationConfig load_config(const std::filesystem::path& path);

/// Canonical key=value dump (one line per key, fixed order, full precision).
std::string serialize_config(const SimulationConfig& config);
std::uint64_t config_hash(const SimulationConfig& config);

}  // namespace tlsim
