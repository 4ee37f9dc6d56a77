#pragma once

// Experiment orchestration: a JSON-serialisable run configuration, the
// pipelines behind each CLI subcommand, and a manifest with checksums of
// every artifact written.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace anderson {

inline constexpr const char* kVersion = ANDERSON_VERSION;

struct RunConfig {
  std::string command;
  std::size_t n = 32;
  std::uint64_t seed = 0;
  /// "white" samples xi from the seed, "zero" uses xi = 0.
  std::string noise = "white";
  std::optional<int> cutoff;
  bool renormalize = false;
  std::string potential = "builtin:const:0";
  std::string nonlinearity = "pow3";
  std::string kernel = "builtin:negconst:1";
  double p = 2.0;
  double q = 3.0;
  std::string init = "one";
  double tol = 1e-6;
  std::size_t max_iter = 5000;
  std::size_t count = 6;
  /// kato-check: resolvent lambda values; diagnose-heat: times.
  std::vector<double> sweep;
  std::string out;

  nlohmann::json to_json() const;
  /// Validates field types and names; errors carry the offending field path.
  static RunConfig from_json(const nlohmann::json& j);
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct ArtifactRecord {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
  /// CSV header columns, empty for other formats.
  std::vector<std::string> columns;
};

struct RunManifest {
  RunConfig config;
  std::string version = kVersion;
  std::string rng_algorithm;
  std::string wall_clock;
  std::vector<std::pair<std::string, double>> timings;
  std::vector<ArtifactRecord> artifacts;
  /// Subcommand specific summary values.
  nlohmann::json summary;

  nlohmann::json to_json() const;
};

/// Output directory for a config: `out` if set, else $ANDERSON_OUT_ROOT (or
/// ./runs) joined with "<command>-n<n>-s<seed>".
std::filesystem::path resolve_output_dir(const RunConfig& config);

/// Executes the configured pipeline, writes artifacts plus manifest.json.
RunManifest run(const RunConfig& config);

/// True when every artifact in the manifest exists and matches its checksum.
bool verify_manifest(const RunManifest& manifest, const std::filesystem::path& dir);

/// Writes a CSV series with 17 significant digits. Throws DomainError (and
/// writes nothing) for an empty series or ragged rows.
void emit_plotdata(const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& rows, const std::filesystem::path& path);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace anderson
