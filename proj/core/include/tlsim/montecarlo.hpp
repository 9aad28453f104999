#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tlsim/config.hpp"
#include "tlsim/propagation.hpp"

namespace tlsim {

enum class ModelKind { quantum, classical };

std::string_view model_name(ModelKind kind);
/// Throws ConfigError("model", ...) for anything but "quantum" or "classical".
ModelKind parse_model(std::string_view name);

/// Hit position on the emulsion: u across the fringes, s along the tilt.
struct Event {
  double u_um = 0.0;
  double s_um = 0.0;

  bool operator==(const Event&) const = default;
};

struct GenerationTruth {
  std::string model;
  double energy_kev = 0.0;
  std::vector<double> stratum_s_mm;  // stratum centres
  std::vector<double> contrast;      // noise-free visibility per stratum
  std::vector<double> period_um;     // fringe period per stratum
  double rotation_mrad = 0.0;
  double sigma_um = 0.0;
  double background_fraction = 0.0;
  std::size_t n_events = 0;
  std::uint64_t seed = 0;
  double scale_factor = 1.0;
};

struct EventList {
  std::vector<Event> events;
  std::uint64_t seed = 0;
  std::optional<GenerationTruth> truth;
};

/// Fringe intensity over one band of the emulsion. The profile is periodic
/// over its window and is evaluated at x = u cos(theta) + s sin(theta).
struct IntensityStratum {
  double s_lo_um = 0.0;
  double s_hi_um = 0.0;
  IntensityProfile profile;
};

struct IntensityModel {
  std::string tag;
  std::vector<IntensityStratum> strata;  // ordered, contiguous in s
};

IntensityModel uniform_model(const DetectorSpec& det);
/// I = 1 + contrast cos(2 pi x / period + phase) over the whole emulsion.
IntensityModel sinusoid_model(double period_um, double contrast, const DetectorSpec& det, double phase_rad = 0.0);
/// Engine intensity on det.n_strata bands, each evaluated at the mapped plane
/// of its centre. Also fills the per-band contrast and period maps.
IntensityModel engine_model(const SimulationConfig& config, double energy_kev, ModelKind kind,
                            GenerationTruth* truth = nullptr);

/// Exactly n events, split evenly over the strata. Each stratum draws from its
/// own substream, so output does not depend on worker count. Events are drawn
/// so that rotating them by det.rotation_misalignment_mrad lands inside the
/// emulsion; with zero rotation they are already emulsion coordinates.
EventList sample_events(const IntensityModel& model, std::size_t n, std::uint64_t seed, const DetectorSpec& det,
                        unsigned workers = 0);

/// Rotation by det.rotation_misalignment_mrad, Gaussian smearing (redrawn
/// until the hit falls inside the emulsion), then uniform background
/// replacing a background_fraction share of hits.
EventList apply_detector_effects(const EventList& ev, const DetectorSpec& det, std::uint64_t seed,
                                 unsigned workers = 0);

/// Full exposure: engine model on the strata, sampling, detector effects.
/// n = 0 uses the config's scaled exposure count.
EventList generate_exposure(const SimulationConfig& config, double energy_kev, ModelKind kind, std::size_t n,
                            std::uint64_t seed);

}  // namespace tlsim
