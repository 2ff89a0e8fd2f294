#pragma once

#include "epifield/data.hpp"
#include "epifield/forecast.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace epifield {

enum class DetectorId { infection_rate, glr_poisson };

const char* to_string(DetectorId id);
DetectorId detector_from_string(const std::string& s);

/// Outcome of running a detector over one region's test window.
///
/// `boundary[i]` and `observed[i]` refer to day `start + i`. Alarms are the
/// third and later days of every run of at least `run_length` outlier days.
struct DetectionReport {
  DetectorId detector = DetectorId::infection_rate;
  std::string region;
  Day start{};
  int run_length = 3;
  std::vector<double> observed;
  std::vector<double> boundary;
  std::vector<Day> outlier_days;
  std::vector<Day> alarm_days;
  /// Detector-specific extra series (GLR statistic, Poisson 99% quantile).
  std::vector<std::pair<std::string, std::vector<double>>> extra;

  nlohmann::json to_json(const std::string& boundary_file = {}) const;
  /// `date,region,observed,boundary,outlier,alarm[,extra...]`
  void write_boundary_csv(const std::filesystem::path& path) const;
};

/// Pointwise percentile (type 7) of the retained predictive samples over the
/// forecast horizon. Warns when there are fewer than 100 draws.
std::vector<double> outlier_boundary(const ForecastBand& band, double percentile = 99);

/// Day i is an outlier when observed[i] > boundary[i]. The observed segment
/// must start at `boundary_start` and match the boundary length.
DetectionReport detect_alarms(const CaseSeries& observed, Day boundary_start,
                              const std::vector<double>& boundary, int run_length = 3,
                              DetectorId detector = DetectorId::infection_rate);

/// Outliers from a flag vector; alarms from the run rule.
void mark_runs(DetectionReport& report, const std::vector<bool>& outlier);

/// Recomputes outliers from observed > boundary and alarms from the run rule
/// independently of the producer; returns a description of the first
/// mismatch, or an empty string.
std::string verify_report(const DetectionReport& report);

} // namespace epifield
