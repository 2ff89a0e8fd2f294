#pragma once

#include "epifield/amcmc.hpp"
#include "epifield/config.hpp"
#include "epifield/posterior.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace epifield {

/// Data and posterior rebuilt from a config; shared by every command.
struct Problem {
  std::vector<CaseSeries> raw;      // as loaded, one per region
  std::vector<CaseSeries> observed; // smoothed when the config asks for it
  std::optional<Adjacency> adjacency;
  Posterior posterior;

  /// Observed counts (persons/day) of region r on [from, from + n).
  std::vector<double> observed_counts(std::size_t r, Day from, std::size_t n) const;
};

Problem build_problem(const RunConfig& config);

/// Per-parameter posterior summary written by `fit`.
struct ParamSummary {
  std::string name;
  double median = 0, q05 = 0, q95 = 0, ess = 0;
};

struct FitResult {
  Chain chain;
  std::vector<ParamSummary> summary;
};

/// Samples the posterior and writes chain.{bin,json}, summary.json and the
/// manifest into the output directory. NumericalError when the initial
/// posterior is not finite.
FitResult cmd_fit(const RunConfig& config);

/// forecast_band.csv, infection_band.csv and crps.csv.
void cmd_forecast(const RunConfig& config, const std::filesystem::path& chain_stem);

/// detection.json plus boundary_<region>.csv. The GLR detector does not read the chain.
void cmd_detect(const RunConfig& config, const std::filesystem::path& chain_stem, DetectorId detector);

/// moran.csv and dcor_{individual,grouped}[_rounded].csv.
void cmd_diagnose(const RunConfig& config, const std::filesystem::path& chain_stem);

std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(const std::string& text);

/// Adds a run record under `runs.<command>` in <output_dir>/manifest.json.
void write_manifest(const RunConfig& config, const std::string& command,
                    const std::vector<std::filesystem::path>& extra_inputs,
                    const std::vector<std::string>& outputs);

/// Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 data error.
int exit_code_for(const std::exception& e);
int run_guarded(const std::function<void()>& body);

} // namespace epifield
