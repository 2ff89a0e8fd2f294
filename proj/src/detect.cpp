#include "epifield/detect.hpp"

#include "epifield/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace epifield {

const char* to_string(DetectorId id) {
  return id == DetectorId::infection_rate ? "infection_rate" : "glr_poisson";
}

DetectorId detector_from_string(const std::string& s) {
  if (s == "infection_rate") return DetectorId::infection_rate;
  if (s == "glr_poisson") return DetectorId::glr_poisson;
  throw InvalidInput("unknown detector '" + s + "' (expected infection_rate or glr_poisson)");
}

std::vector<double> outlier_boundary(const ForecastBand& band, double percentile) {
  if (!(percentile > 0 && percentile < 100)) throw InvalidInput("outlier percentile must lie in (0, 100)");
  if (band.n_draws() == 0) throw InvalidInput("outlier_boundary: band keeps no samples");
  if (band.n_draws() < 100)
    spdlog::warn("outlier boundary from {} draws; the {}th percentile is poorly resolved", band.n_draws(),
                 percentile);
  std::vector<double> out, col(band.n_draws());
  for (std::size_t i = band.n_calibration_days; i < band.size(); ++i) {
    for (std::size_t s = 0; s < col.size(); ++s)
      col[s] = band.samples(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i));
    out.push_back(quantile(col, percentile / 100));
  }
  return out;
}

void mark_runs(DetectionReport& report, const std::vector<bool>& outlier) {
  report.outlier_days.clear();
  report.alarm_days.clear();
  int run = 0;
  for (std::size_t i = 0; i < outlier.size(); ++i) {
    run = outlier[i] ? run + 1 : 0;
    const Day d = add_days(report.start, static_cast<long>(i));
    if (outlier[i]) report.outlier_days.push_back(d);
    if (run >= report.run_length) report.alarm_days.push_back(d);
  }
}

DetectionReport detect_alarms(const CaseSeries& observed, Day boundary_start,
                              const std::vector<double>& boundary, int run_length, DetectorId detector) {
  if (run_length < 1) throw InvalidInput("run_length must be positive");
  if (observed.start != boundary_start || observed.size() != boundary.size())
    throw InvalidInput("detect_alarms: observed " + format_date(observed.start) + " + " +
                       std::to_string(observed.size()) + " days is not aligned with boundary " +
                       format_date(boundary_start) + " + " + std::to_string(boundary.size()) + " days");
  DetectionReport r;
  r.detector = detector;
  r.region = observed.region_id;
  r.start = boundary_start;
  r.run_length = run_length;
  r.observed = observed.counts;
  r.boundary = boundary;
  std::vector<bool> flag(boundary.size());
  for (std::size_t i = 0; i < boundary.size(); ++i) flag[i] = observed.counts[i] > boundary[i];
  mark_runs(r, flag);
  return r;
}

std::string verify_report(const DetectionReport& r) {
  if (r.observed.size() != r.boundary.size()) return "observed and boundary lengths differ";
  std::vector<Day> outliers, alarms;
  int run = 0;
  for (std::size_t i = 0; i < r.boundary.size(); ++i) {
    const Day d = add_days(r.start, static_cast<long>(i));
    const bool o = r.observed[i] > r.boundary[i];
    run = o ? run + 1 : 0;
    if (o) outliers.push_back(d);
    if (run >= r.run_length) alarms.push_back(d);
  }
  if (outliers != r.outlier_days) return "outlier days differ from observed > boundary";
  if (alarms != r.alarm_days) return "alarm days differ from the run rule";
  for (const Day& a : r.alarm_days)
    if (!std::binary_search(r.outlier_days.begin(), r.outlier_days.end(), a))
      return "alarm " + format_date(a) + " is not an outlier";
  return {};
}

nlohmann::json DetectionReport::to_json(const std::string& boundary_file) const {
  auto dates = [](const std::vector<Day>& v) {
    std::vector<std::string> s;
    for (const auto& d : v) s.push_back(format_date(d));
    return s;
  };
  nlohmann::json j = {
      {"detector", epifield::to_string(detector)},
      {"region", region},
      {"start", format_date(start)},
      {"days", boundary.size()},
      {"run_length", run_length},
      {"outlier_days", dates(outlier_days)},
      {"alarm_days", dates(alarm_days)},
  };
  if (!boundary_file.empty()) j["boundary_file"] = boundary_file;
  return j;
}

void DetectionReport::write_boundary_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw NotFoundError("cannot write " + path.string());
  out << "date,region,observed,boundary,outlier,alarm";
  for (const auto& [name, _] : extra) out << ',' << name;
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    const Day d = add_days(start, static_cast<long>(i));
    const bool o = std::binary_search(outlier_days.begin(), outlier_days.end(), d);
    const bool a = std::binary_search(alarm_days.begin(), alarm_days.end(), d);
    out << format_date(d) << ',' << region;
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g", observed[i], boundary[i]);
    out << buf << ',' << o << ',' << a;
    for (const auto& [_, v] : extra) {
      std::snprintf(buf, sizeof buf, ",%.17g", v[i]);
      out << buf;
    }
    out << '\n';
  }
}

} // namespace epifield
