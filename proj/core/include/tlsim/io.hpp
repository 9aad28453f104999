#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "tlsim/analysis.hpp"
#include "tlsim/config.hpp"
#include "tlsim/montecarlo.hpp"
#include "tlsim/propagation.hpp"

namespace tlsim {

std::string_view version();

/// Provenance written as `#` comment lines at the top of every output.
struct RunManifest {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string command;
  double scale_factor = 1.0;
  std::optional<std::string> timestamp;  // only when explicitly requested
};

RunManifest make_manifest(const SimulationConfig& config, std::string command);
std::string manifest_header(const RunManifest& m);

std::string profile_csv(const RunManifest& m, const IntensityProfile& p);
std::string events_csv(const RunManifest& m, const EventList& ev);
std::string truth_text(const RunManifest& m, const GenerationTruth& t);
std::string fit_report(const RunManifest& m, const FringeFitResult& fit);
std::string curve_csv(const RunManifest& m, const ContrastCurve& c, const std::vector<std::string>& extra_comments = {});

struct ModelComparison {
  EnergyScan quantum;
  EnergyScan classical;
  bool quantum_varies = false;
  bool classical_flat = false;

  std::string verdict() const;
};

/// quantum_varies: spread of fitted contrast beyond 3 max sigma.
/// classical_flat: spread within 3 max sigma.
ModelComparison compare(EnergyScan quantum, EnergyScan classical);
std::string comparison_csv(const RunManifest& m, const ModelComparison& c);

/// Events CSV reader. `#` lines are skipped anywhere; the `u_um,s_um` header
/// is mandatory. Throws IoError carrying the 1-based line number.
EventList parse_events(std::istream& in);
EventList read_events(const std::filesystem::path& path);

/// Writes the whole buffer and closes the file. Throws IoError on failure.
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace tlsim
