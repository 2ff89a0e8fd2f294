#include "epifield/data.hpp"

#include "csv.hpp"
#include "epifield/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>

namespace epifield {

using detail::CsvReader;

std::vector<Day> CaseSeries::dates() const {
  std::vector<Day> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = date(i);
  return out;
}

CaseSeries CaseSeries::slice(Day from, Day to) const {
  if (counts.empty() || from < start || to > end() || to < from)
    throw InvalidInput("slice [" + format_date(from) + ", " + format_date(to) +
                       "] outside series for " + region_id);
  CaseSeries out{region_id, population, from, {}};
  const auto a = static_cast<std::size_t>(days_between(start, from));
  const auto b = static_cast<std::size_t>(days_between(start, to));
  out.counts.assign(counts.begin() + a, counts.begin() + b + 1);
  return out;
}

void CaseSeries::validate() const {
  if (population <= 0) throw InvalidInput("population must be positive for " + region_id);
  for (double c : counts)
    if (!(c >= 0) || !std::isfinite(c)) throw InvalidInput("negative or non-finite count in " + region_id);
}

void Adjacency::validate() const {
  const auto n = static_cast<Eigen::Index>(region_ids.size());
  if (W.rows() != n || W.cols() != n || g.size() != n)
    throw InvalidInput("adjacency dimensions do not match region list");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (W(i, i) != 0) throw InvalidInput("adjacency has a self-loop at " + region_ids[i]);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (W(i, j) != W(j, i)) throw InvalidInput("adjacency is not symmetric");
      if (W(i, j) != 0 && W(i, j) != 1) throw InvalidInput("adjacency entries must be 0/1");
    }
    if (g(i) != W.row(i).sum()) throw InvalidInput("neighbour count mismatch at " + region_ids[i]);
    if (n > 1 && g(i) < 1) throw InvalidInput("region " + region_ids[i] + " has no neighbours");
  }
}

void StudyWindow::validate() const {
  if (calibration_end <= calibration_start)
    throw InvalidInput("calibration_end must be after calibration_start");
  if (forecast_horizon < 1 || forecast_horizon > max_horizon)
    throw InvalidInput("forecast horizon must be in [1, 14] days");
}

CaseLoad load_cases(const std::filesystem::path& path, const std::vector<std::string>& regions,
                    const PopulationTable& populations) {
  CsvReader reader(path, {"date", "region", "count"});
  std::map<std::string, std::map<Day, double>> rows;
  std::vector<std::string_view> row;
  while (reader.next(row)) {
    Day day;
    try {
      day = parse_date(row[0]);
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": " + e.what(), reader.line());
    }
    const double count = detail::to_double(row[2], reader.line());
    if (count < 0) throw ParseError(path.string() + ": negative count", reader.line());
    auto& per_region = rows[std::string(row[1])];
    if (!per_region.emplace(day, count).second)
      throw ParseError(path.string() + ": duplicate row for " + std::string(row[1]) + " on " +
                           std::string(row[0]),
                       reader.line());
  }

  std::vector<std::string> wanted = regions;
  if (wanted.empty())
    for (const auto& [id, _] : rows) wanted.push_back(id);
  for (const auto& id : wanted)
    if (!rows.count(id)) throw NotFoundError("region '" + id + "' not present in " + path.string());

  Day first = rows.at(wanted.front()).begin()->first;
  Day last = rows.at(wanted.front()).rbegin()->first;
  for (const auto& id : wanted) {
    first = std::min(first, rows.at(id).begin()->first);
    last = std::max(last, rows.at(id).rbegin()->first);
  }
  const auto n_days = static_cast<std::size_t>(days_between(first, last) + 1);

  CaseLoad out;
  for (const auto& id : wanted) {
    const auto pop = populations.find(id);
    if (pop == populations.end()) throw NotFoundError("no population for region '" + id + "'");
    CaseSeries s{id, pop->second, first, std::vector<double>(n_days, 0.0)};
    const auto& have = rows.at(id);
    for (std::size_t i = 0; i < n_days; ++i) {
      const auto it = have.find(s.date(i));
      if (it != have.end()) {
        s.counts[i] = it->second;
      } else {
        out.filled.push_back({id, s.date(i)});
        spdlog::warn("{}: no row for {} on {}, filled with 0", path.string(), id,
                     format_date(s.date(i)));
      }
    }
    s.validate();
    out.series.push_back(std::move(s));
  }
  return out;
}

void write_cases(const std::filesystem::path& path, const std::vector<CaseSeries>& series) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw NotFoundError("cannot write " + path.string());
  std::fputs("date,region,count\n", f);
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.size(); ++i)
      std::fprintf(f, "%s,%s,%.17g\n", format_date(s.date(i)).c_str(), s.region_id.c_str(),
                   s.counts[i]);
  std::fclose(f);
}

PopulationTable read_populations(const std::filesystem::path& path) {
  CsvReader reader(path, {"region", "population"});
  PopulationTable out;
  std::vector<std::string_view> row;
  while (reader.next(row)) {
    const double p = detail::to_double(row[1], reader.line());
    if (p <= 0 || p != std::floor(p))
      throw ParseError(path.string() + ": population must be a positive integer", reader.line());
    out[std::string(row[0])] = static_cast<std::int64_t>(p);
  }
  return out;
}

Adjacency make_adjacency(const std::vector<std::string>& regions,
                         const std::vector<std::pair<std::string, std::string>>& edges) {
  const auto n = static_cast<Eigen::Index>(regions.size());
  std::unordered_map<std::string, Eigen::Index> index;
  for (Eigen::Index i = 0; i < n; ++i) index[regions[i]] = i;
  Adjacency adj{regions, Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  for (const auto& [a, b] : edges) {
    const auto ia = index.find(a), ib = index.find(b);
    if (ia == index.end() || ib == index.end()) continue;
    if (ia->second == ib->second) throw InvalidInput("self-adjacent region " + a);
    adj.W(ia->second, ib->second) = 1;
    adj.W(ib->second, ia->second) = 1;
  }
  adj.g = adj.W.rowwise().sum();
  adj.validate();
  return adj;
}

Adjacency read_adjacency(const std::filesystem::path& path, const std::vector<std::string>& regions) {
  CsvReader reader(path, {"region_a", "region_b"});
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::string_view> row;
  while (reader.next(row)) edges.emplace_back(std::string(row[0]), std::string(row[1]));
  return make_adjacency(regions, edges);
}

Eigen::MatrixXd read_distances(const std::filesystem::path& path,
                               const std::vector<std::string>& regions) {
  CsvReader reader(path, {"region_a", "region_b", "distance"});
  const auto n = static_cast<Eigen::Index>(regions.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  auto find = [&](std::string_view id) -> Eigen::Index {
    const auto it = std::find(regions.begin(), regions.end(), id);
    return it == regions.end() ? -1 : static_cast<Eigen::Index>(it - regions.begin());
  };
  std::vector<std::string_view> row;
  while (reader.next(row)) {
    const auto a = find(row[0]), b = find(row[1]);
    const double dist = detail::to_double(row[2], reader.line());
    if (dist <= 0) throw ParseError(path.string() + ": distance must be positive", reader.line());
    if (a < 0 || b < 0) continue;
    d(a, b) = d(b, a) = dist;
  }
  return d;
}

CaseSeries smooth_7day(const CaseSeries& series) {
  if (series.size() < 7)
    throw InvalidInput("smoothing needs at least 7 days, got " + std::to_string(series.size()));
  CaseSeries out = series;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::size_t first = i >= 6 ? i - 6 : 0;
    double sum = 0;
    for (std::size_t j = first; j <= i; ++j) sum += series.counts[j];
    out.counts[i] = std::max(0.0, sum / static_cast<double>(i - first + 1));
  }
  return out;
}

std::vector<double> normalize(const CaseSeries& series) {
  if (series.population <= 0) throw InvalidInput("population must be positive");
  std::vector<double> out(series.size());
  const double p = static_cast<double>(series.population);
  for (std::size_t i = 0; i < series.size(); ++i) out[i] = series.counts[i] / p;
  return out;
}

} // namespace epifield
