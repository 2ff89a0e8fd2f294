#pragma once

#include "epifield/amcmc.hpp"
#include "epifield/data.hpp"
#include "epifield/detect.hpp"
#include "epifield/glr.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace epifield {

/// Everything a command needs, read from an INI file:
///
///   [data]     cases, populations, adjacency, distances, residuals, regions
///   [window]   calibration_start, calibration_end, horizon, smoothing
///   [model]    single_region_spatial, incubation_draws, tau_prior
///   [mcmc]     n_steps, burn_in, thin, adapt_start, seed, paper_scale, refresh_current
///   [forecast] n_draws, include_noise
///   [detect]   detector, percentile, run_length, c_gamma, glr_alternative, glr_test_days
///   [output]   dir
///
/// Relative paths are resolved against the directory of the config file.
struct RunConfig {
  std::filesystem::path cases, populations, adjacency;
  std::optional<std::filesystem::path> distances, residuals;
  std::vector<std::string> regions;

  StudyWindow window;
  bool smoothing = true;

  bool single_region_spatial = false;
  int incubation_draws = 1;
  std::string tau_prior = "neg_log_tau2";

  AmcmcConfig mcmc;
  bool paper_scale = false;

  std::size_t n_draws = 100;
  bool include_noise = true;

  DetectorId detector = DetectorId::infection_rate;
  double percentile = 99;
  int run_length = 3;
  double c_gamma = 3;
  GlrAlternative glr_alternative = GlrAlternative::intercept_shift;
  int glr_test_days = 15;

  std::filesystem::path output_dir = "out";

  /// Raw text of the file the config came from; hashed into manifests.
  std::string source_text;
  std::filesystem::path source_path;

  /// Throws ConfigError on inconsistent values, NotFoundError on missing files.
  void validate() const;
};

/// Throws ConfigError for malformed files, bad values and unknown keys.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);

} // namespace epifield
