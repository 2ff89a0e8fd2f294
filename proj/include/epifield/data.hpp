#pragma once

#include "epifield/dates.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace epifield {

/// Daily case counts for one areal unit on a dense, gap-free day grid.
///
/// Dates are implied by `start` and the position in `counts`, which keeps the
/// one-day-step invariant by construction.
struct CaseSeries {
  std::string region_id;
  std::int64_t population = 0;
  Day start{};
  std::vector<double> counts;

  std::size_t size() const noexcept { return counts.size(); }
  Day date(std::size_t i) const { return add_days(start, static_cast<long>(i)); }
  Day end() const { return date(counts.size() - 1); }
  std::vector<Day> dates() const;

  /// Closed date range [from, to]; both ends must lie inside the series.
  CaseSeries slice(Day from, Day to) const;
  void validate() const;
};

struct MissingDay {
  std::string region_id;
  Day date;
};

struct CaseLoad {
  std::vector<CaseSeries> series;
  std::vector<MissingDay> filled; // days absent from the file, densified to 0
  std::size_t warning_count() const noexcept { return filled.size(); }
};

using PopulationTable = std::map<std::string, std::int64_t>;

/// Region topology: binary neighbour matrix and neighbour counts.
struct Adjacency {
  std::vector<std::string> region_ids;
  Eigen::MatrixXd W;
  Eigen::VectorXd g;

  std::size_t size() const noexcept { return region_ids.size(); }
  void validate() const;
};

struct StudyWindow {
  Day calibration_start{};
  Day calibration_end{};
  int forecast_horizon = 14;

  static constexpr int max_horizon = 14;

  std::size_t calibration_days() const {
    return static_cast<std::size_t>(days_between(calibration_start, calibration_end) + 1);
  }
  void validate() const;
};

/// Reads a `date,region,count` CSV. Regions come back in `regions` order (or
/// sorted, when `regions` is empty), all on the union date range of the
/// requested regions.
CaseLoad load_cases(const std::filesystem::path& path, const std::vector<std::string>& regions,
                    const PopulationTable& populations);

void write_cases(const std::filesystem::path& path, const std::vector<CaseSeries>& series);

PopulationTable read_populations(const std::filesystem::path& path);

/// Undirected `region_a,region_b` edge list restricted to `regions`.
Adjacency read_adjacency(const std::filesystem::path& path, const std::vector<std::string>& regions);
Adjacency make_adjacency(const std::vector<std::string>& regions,
                         const std::vector<std::pair<std::string, std::string>>& edges);

/// `region_a,region_b,distance` table; pairs not listed stay at 0.
Eigen::MatrixXd read_distances(const std::filesystem::path& path,
                               const std::vector<std::string>& regions);

/// Trailing 7-day running mean; the first six days average the available prefix.
CaseSeries smooth_7day(const CaseSeries& series);

/// Counts per person. Used only by the likelihood; model N stays in persons.
std::vector<double> normalize(const CaseSeries& series);

} // namespace epifield
