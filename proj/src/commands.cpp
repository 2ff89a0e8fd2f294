#include "epifield/commands.hpp"

#include "epifield/analysis.hpp"
#include "epifield/chain_io.hpp"
#include "epifield/detect.hpp"
#include "epifield/errors.hpp"
#include "epifield/ess.hpp"
#include "epifield/forecast.hpp"
#include "epifield/glr.hpp"
#include "epifield/spatial.hpp"

#include "csv.hpp"

#include <boost/version.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

namespace epifield {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* version = "0.1.0";

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw NotFoundError("cannot create output directory " + dir.string() + ": " + ec.message());
}

json problem_record(const RunConfig& c, const Posterior& post) {
  return {
      {"regions", post.data().region_ids},
      {"populations", post.data().populations},
      {"calibration_start", format_date(c.window.calibration_start)},
      {"calibration_end", format_date(c.window.calibration_end)},
      {"smoothing", c.smoothing},
      {"spatial", post.layout().spatial},
      {"single_region_spatial", c.single_region_spatial},
      {"incubation_draws", c.incubation_draws},
      {"tau_prior", c.tau_prior},
  };
}

StoredChain load_matching_chain(const fs::path& stem, const RunConfig& c, const Posterior& post) {
  StoredChain s = read_chain(stem);
  const json expect = problem_record(c, post);
  const json& got = s.extra.contains("problem") ? s.extra["problem"] : json::object();
  for (const auto& key : {"regions", "calibration_start", "calibration_end", "smoothing", "spatial"})
    if (got.value(key, json()) != expect[key])
      throw InvalidInput("chain " + stem.string() + " was fitted with a different " + key +
                         " than the current config");
  if (s.chain.names != post.layout().names()) throw InvalidInput("chain parameter names do not match the model");
  return s;
}

std::vector<std::pair<std::string, double>> read_residuals(const fs::path& path) {
  detail::CsvReader reader(path, {"region", "value"});
  std::vector<std::pair<std::string, double>> out;
  std::vector<std::string_view> row;
  while (reader.next(row)) out.emplace_back(std::string(row[0]), detail::to_double(row[1], reader.line()));
  return out;
}

double column_quantile(const Eigen::MatrixXd& m, Eigen::Index c, double p) {
  std::vector<double> v(m.col(c).data(), m.col(c).data() + m.rows());
  return quantile(v, p);
}

} // namespace

std::vector<double> Problem::observed_counts(std::size_t r, Day from, std::size_t n) const {
  const CaseSeries& s = observed.at(r);
  if (from < s.start || add_days(from, static_cast<long>(n) - 1) > s.end())
    throw InvalidInput("observed counts for " + s.region_id + " do not cover " + format_date(from) + " + " +
                       std::to_string(n) + " days");
  const auto off = static_cast<std::size_t>(days_between(s.start, from));
  return {s.counts.begin() + static_cast<long>(off), s.counts.begin() + static_cast<long>(off + n)};
}

Problem build_problem(const RunConfig& c) {
  const PopulationTable pops = read_populations(c.populations);
  CaseLoad load = load_cases(c.cases, c.regions, pops);
  std::vector<CaseSeries> observed;
  for (const auto& s : load.series) observed.push_back(c.smoothing ? smooth_7day(s) : s);
  std::optional<Adjacency> adj;
  if (!c.adjacency.empty()) adj = read_adjacency(c.adjacency, c.regions);
  CalibrationData data = CalibrationData::from_series(observed, c.window.calibration_start, c.window.calibration_end,
                                                      observed.size() > 1 ? adj : std::nullopt);
  PriorSpec prior = PriorSpec::for_populations(data.populations);
  prior.tau_prior = c.tau_prior == "tau" ? SpatialScalePrior::tau : SpatialScalePrior::neg_log_tau2;
  LikelihoodOptions opts;
  opts.single_region_spatial = c.single_region_spatial;
  opts.incubation_draws = c.incubation_draws;
  return Problem{std::move(load.series), std::move(observed), std::move(adj),
                 Posterior(std::move(data), std::move(prior), opts)};
}

FitResult cmd_fit(const RunConfig& c) {
  c.validate();
  Problem prob = build_problem(c);
  const Posterior& post = prob.posterior;
  ensure_dir(c.output_dir);

  const ParamVector init = post.initial_point();
  const Eigen::VectorXd x0 = init.pack(post.layout());
  Rng probe(c.mcmc.seed ^ 0x9e3779b97f4a7c15ULL);
  const double lp0 = post.log_posterior_estimate(x0, probe);
  if (!std::isfinite(lp0)) throw NumericalError("initial log posterior is not finite (" + std::to_string(lp0) + ")");

  AmcmcConfig mc = c.mcmc;
  mc.initial_sd = post.initial_proposal_sd(init);
  spdlog::info("fit: {} parameters, {} steps, seed {}", post.layout().dim(), mc.n_steps, mc.seed);
  const LogTarget target = [&post](const Eigen::VectorXd& x, Rng& rng) { return post.log_posterior_estimate(x, rng); };
  FitResult res;
  try {
    res.chain = amcmc_run(target, x0, mc, post.layout().names());
  } catch (const InvalidInput& e) {
    throw NumericalError(std::string("sampler could not start: ") + e.what());
  }

  const fs::path stem = c.output_dir / "chain";
  write_chain(stem, res.chain, {{"problem", problem_record(c, post)}});

  json params = json::array();
  for (std::size_t j = 0; j < res.chain.dim(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    ParamSummary s;
    s.name = res.chain.names[j];
    s.median = column_quantile(res.chain.samples, col, 0.5);
    s.q05 = column_quantile(res.chain.samples, col, 0.05);
    s.q95 = column_quantile(res.chain.samples, col, 0.95);
    if (res.chain.n_kept() >= 100) {
      const Eigen::VectorXd v = res.chain.samples.col(col);
      s.ess = ess({v.data(), static_cast<std::size_t>(v.size())});
    }
    params.push_back({{"name", s.name}, {"median", s.median}, {"q05", s.q05}, {"q95", s.q95}, {"ess", s.ess}});
    res.summary.push_back(s);
  }
  const json summary = {
      {"n_parameters", res.chain.dim()},
      {"n_kept", res.chain.n_kept()},
      {"acceptance_rate", res.chain.acceptance_rate},
      {"adapted_acceptance_rate", res.chain.adapted_acceptance_rate},
      {"seed", res.chain.seed},
      {"parameters", params},
  };
  std::ofstream(c.output_dir / "summary.json") << summary.dump(2) << '\n';
  write_manifest(c, "fit", {}, {"chain.bin", "chain.json", "summary.json"});
  return res;
}

void cmd_forecast(const RunConfig& c, const fs::path& chain_stem) {
  c.validate();
  Problem prob = build_problem(c);
  const Posterior& post = prob.posterior;
  const StoredChain stored = load_matching_chain(chain_stem, c, post);
  ensure_dir(c.output_dir);

  PredictiveOptions po;
  po.n_draws = c.n_draws;
  po.horizon = c.window.forecast_horizon;
  po.include_noise = c.include_noise;
  po.seed = c.mcmc.seed;
  const auto bands = posterior_predictive(stored.chain, post, c.window.calibration_start, po);
  write_bands(c.output_dir / "forecast_band.csv", bands);

  PredictiveOptions latent = po;
  latent.quantity = PredictiveQuantity::infections;
  latent.include_noise = false;
  write_bands(c.output_dir / "infection_band.csv",
              posterior_predictive(stored.chain, post, c.window.calibration_start, latent));

  std::ofstream out(c.output_dir / "crps.csv", std::ios::trunc);
  out << "region,average_crps,n_days\n";
  char buf[128];
  for (std::size_t r = 0; r < bands.size(); ++r) {
    const auto y = prob.observed_counts(r, c.window.calibration_start, bands[r].n_calibration_days);
    const double score = average_crps(bands[r], y);
    std::snprintf(buf, sizeof buf, ",%.17g,%zu\n", score, y.size());
    out << bands[r].region_id << buf;
    spdlog::info("forecast: {} average CRPS {:.3f}", bands[r].region_id, score);
  }
  write_manifest(c, "forecast", {fs::path(chain_stem) += ".bin"},
                 {"forecast_band.csv", "infection_band.csv", "crps.csv"});
}

void cmd_detect(const RunConfig& c, const fs::path& chain_stem, DetectorId detector) {
  c.validate();
  Problem prob = build_problem(c);
  const Posterior& post = prob.posterior;
  ensure_dir(c.output_dir);
  const Day test_start = add_days(c.window.calibration_end, 1);

  std::vector<DetectionReport> reports;
  std::vector<fs::path> inputs;
  if (detector == DetectorId::infection_rate) {
    const StoredChain stored = load_matching_chain(chain_stem, c, post);
    inputs.push_back(fs::path(chain_stem) += ".bin");
    PredictiveOptions po;
    po.n_draws = c.n_draws;
    po.horizon = c.window.forecast_horizon;
    po.include_noise = true;
    po.seed = c.mcmc.seed;
    const auto bands = posterior_predictive(stored.chain, post, c.window.calibration_start, po);
    for (std::size_t r = 0; r < bands.size(); ++r) {
      auto boundary = outlier_boundary(bands[r], c.percentile);
      const CaseSeries& s = prob.observed[r];
      const auto avail = std::max<long>(0, days_between(test_start, s.end()) + 1);
      if (avail == 0) throw InvalidInput("no observed data after the calibration window for " + s.region_id);
      if (static_cast<std::size_t>(avail) < boundary.size()) {
        spdlog::warn("detect: {} has only {} observed test days", s.region_id, avail);
        boundary.resize(static_cast<std::size_t>(avail));
      }
      const CaseSeries seg = s.slice(test_start, add_days(test_start, static_cast<long>(boundary.size()) - 1));
      reports.push_back(detect_alarms(seg, test_start, boundary, c.run_length, detector));
    }
  } else {
    GlrDetectOptions go;
    go.c_gamma = c.c_gamma;
    go.alternative = c.glr_alternative;
    go.run_length = c.run_length;
    for (const CaseSeries& s : prob.raw) {
      const GlrModel base = glr_fit(s.slice(c.window.calibration_start, c.window.calibration_end));
      const auto avail = std::min<long>(c.glr_test_days, days_between(test_start, s.end()) + 1);
      if (avail <= 0) throw InvalidInput("no observed data after the calibration window for " + s.region_id);
      reports.push_back(glr_detect(s.slice(test_start, add_days(test_start, avail - 1)), base, go));
      spdlog::info("detect: {} GLR base beta = [{:.4g}, {:.4g}, {:.4g}, {:.4g}]", s.region_id, base.beta[0],
                   base.beta[1], base.beta[2], base.beta[3]);
    }
  }

  json all = json::array();
  std::vector<std::string> outputs{"detection.json"};
  for (const auto& r : reports) {
    if (detector == DetectorId::infection_rate || c.glr_alternative == GlrAlternative::intercept_shift)
      if (const auto err = verify_report(r); !err.empty())
        throw std::logic_error("detection report for " + r.region + " failed verification: " + err);
    const std::string file = "boundary_" + r.region + ".csv";
    r.write_boundary_csv(c.output_dir / file);
    all.push_back(r.to_json(file));
    outputs.push_back(file);
    spdlog::info("detect: {} {} outlier days, {} alarm days", r.region, r.outlier_days.size(), r.alarm_days.size());
  }
  std::ofstream(c.output_dir / "detection.json") << all.dump(2) << '\n';
  write_manifest(c, std::string("detect_") + to_string(detector), inputs, outputs);
}

void cmd_diagnose(const RunConfig& c, const fs::path& chain_stem) {
  c.validate();
  Problem prob = build_problem(c);
  const Posterior& post = prob.posterior;
  const StoredChain stored = load_matching_chain(chain_stem, c, post);
  ensure_dir(c.output_dir);
  std::vector<fs::path> inputs{fs::path(chain_stem) += ".bin"};
  std::vector<std::string> outputs;

  // Residual vector: supplied file, or per-region mean calibration residual
  // at the posterior median with the central incubation parameters.
  std::vector<std::string> ids;
  std::vector<double> resid;
  Adjacency adj;
  if (c.residuals) {
    for (const auto& [id, v] : read_residuals(*c.residuals)) {
      ids.push_back(id);
      resid.push_back(v);
    }
    if (c.adjacency.empty()) throw InvalidInput("Moran's I on a residual file needs data.adjacency");
    adj = read_adjacency(c.adjacency, ids);
  } else if (prob.adjacency) {
    Eigen::VectorXd med(static_cast<Eigen::Index>(stored.chain.dim()));
    for (Eigen::Index j = 0; j < med.size(); ++j) med[j] = column_quantile(stored.chain.samples, j, 0.5);
    const ParamVector p = ParamVector::unpack(post.layout(), med);
    const auto& data = post.data();
    const Eigen::MatrixXd pred = predict_normalized(p, data, IncubationDraw{}, data.n_days());
    ids = data.region_ids;
    for (Eigen::Index r = 0; r < pred.cols(); ++r) resid.push_back((data.observed.col(r) - pred.col(r)).mean());
    adj = *prob.adjacency;
  }

  if (ids.size() >= 3) {
    std::optional<Eigen::MatrixXd> dist;
    if (c.distances) {
      dist = read_distances(*c.distances, adj.region_ids);
      inputs.push_back(*c.distances);
    }
    if (c.residuals) inputs.push_back(*c.residuals);
    std::ofstream out(c.output_dir / "moran.csv", std::ios::trunc);
    out << "weighting,I,expected,variance,z,method,n\n";
    MoranOptions mo;
    mo.seed = c.mcmc.seed;
    char buf[256];
    for (auto w : {MoranWeighting::binary, MoranWeighting::binary_modified, MoranWeighting::row_standardised}) {
      if (w == MoranWeighting::binary_modified && !dist) {
        spdlog::info("diagnose: no distance file, skipping the binary-modified weighting");
        continue;
      }
      const MoranResult m = morans_i(resid, adj, w, dist, mo);
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%.17g,%s,%zu\n", m.I, m.expected, m.variance, m.z,
                    m.permutation ? "permutation" : "analytic", ids.size());
      out << to_string(w) << buf;
    }
    outputs.push_back("moran.csv");
  } else {
    spdlog::info("diagnose: Moran's I needs at least 3 areal units, skipped");
  }

  DcorTableOptions dopt;
  dopt.seed = c.mcmc.seed;
  for (auto g : {DcorGrouping::individual, DcorGrouping::by_component}) {
    dopt.grouping = g;
    const DcorMatrix m = dcor_table(stored.chain, post.layout(), dopt);
    const std::string base = g == DcorGrouping::individual ? "dcor_individual" : "dcor_grouped";
    m.write_csv(c.output_dir / (base + ".csv"));
    m.write_csv(c.output_dir / (base + "_rounded.csv"), 1);
    outputs.push_back(base + ".csv");
    outputs.push_back(base + "_rounded.csv");
  }
  write_manifest(c, "diagnose", inputs, outputs);
}

std::string sha256_text(const std::string& text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::string hex;
  char b[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(b, sizeof b, "%02x", md[i]);
    hex += b;
  }
  return hex;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path.string());
  const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_text(body);
}

void write_manifest(const RunConfig& c, const std::string& command, const std::vector<fs::path>& extra_inputs,
                    const std::vector<std::string>& outputs) {
  const fs::path path = c.output_dir / "manifest.json";
  json m = json::object();
  if (fs::exists(path)) {
    std::ifstream in(path);
    try {
      in >> m;
    } catch (const json::exception&) {
      spdlog::warn("manifest {} unreadable, rewriting", path.string());
      m = json::object();
    }
  }
  json inputs = json::object();
  std::vector<fs::path> files{c.cases, c.populations};
  if (!c.adjacency.empty()) files.push_back(c.adjacency);
  files.insert(files.end(), extra_inputs.begin(), extra_inputs.end());
  for (const auto& f : files) inputs[f.string()] = sha256_file(f);
  char compiler[64];
  std::snprintf(compiler, sizeof compiler, "gcc %d.%d.%d", __GNUC__, __GNUC_MINOR__, __GNUC_PATCHLEVEL__);
  m["runs"][command] = {
      {"config_path", c.source_path.string()},
      {"config_sha256", sha256_text(c.source_text)},
      {"seed", c.mcmc.seed},
      {"effective",
       {{"regions", c.regions},
        {"n_steps", c.mcmc.n_steps},
        {"burn_in", c.mcmc.burn_in},
        {"thin", c.mcmc.thin},
        {"paper_scale", c.paper_scale},
        {"output_dir", c.output_dir.string()}}},
      {"versions",
       {{"epifield", version},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"boost", BOOST_LIB_VERSION},
        {"compiler", compiler}}},
      {"inputs", inputs},
      {"outputs", outputs},
  };
  std::ofstream(path, std::ios::trunc) << m.dump(2) << '\n';
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 1;
  if (dynamic_cast<const NumericalError*>(&e)) return 2;
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const NotFoundError*>(&e) ||
      dynamic_cast<const InvalidInput*>(&e))
    return 3;
  return 2;
}

int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    spdlog::error("{}", e.what());
    return code;
  }
}

} // namespace epifield
