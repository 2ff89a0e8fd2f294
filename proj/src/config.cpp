#include "epifield/config.hpp"

#include "epifield/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace epifield {

namespace pt = boost::property_tree;

namespace {

const std::set<std::string> known_keys = {
    "data.cases", "data.populations", "data.adjacency", "data.distances", "data.residuals", "data.regions",
    "window.calibration_start", "window.calibration_end", "window.horizon", "window.smoothing",
    "model.single_region_spatial", "model.incubation_draws", "model.tau_prior",
    "mcmc.n_steps", "mcmc.burn_in", "mcmc.thin", "mcmc.adapt_start", "mcmc.seed", "mcmc.paper_scale",
    "mcmc.refresh_current",
    "forecast.n_draws", "forecast.include_noise",
    "detect.detector", "detect.percentile", "detect.run_length", "detect.c_gamma", "detect.glr_alternative",
    "detect.glr_test_days",
    "output.dir",
};

template <class T> T value(const pt::ptree& tree, const std::string& key, T fallback) {
  const auto node = tree.get_child_optional(pt::ptree::path_type(key, '.'));
  if (!node) return fallback;
  try {
    return node->get_value<T>();
  } catch (const pt::ptree_bad_data&) {
    throw ConfigError("config: bad value '" + node->data() + "' for " + key);
  }
}

bool flag(const pt::ptree& tree, const std::string& key, bool fallback) {
  const auto s = value<std::string>(tree, key, fallback ? "true" : "false");
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config: " + key + " must be a boolean, got '" + s + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

} // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, _] : body)
      if (!known_keys.contains(section + "." + key)) throw ConfigError("config: unknown key " + section + "." + key);
  }

  RunConfig c;
  c.source_text = text;
  const auto req = [&](const std::string& key) {
    const auto v = value<std::string>(tree, key, "");
    if (v.empty()) throw ConfigError("config: missing " + key);
    return v;
  };
  c.cases = resolve(base_dir, req("data.cases"));
  c.populations = resolve(base_dir, req("data.populations"));
  if (const auto a = value<std::string>(tree, "data.adjacency", ""); !a.empty()) c.adjacency = resolve(base_dir, a);
  if (const auto d = value<std::string>(tree, "data.distances", ""); !d.empty()) c.distances = resolve(base_dir, d);
  if (const auto r = value<std::string>(tree, "data.residuals", ""); !r.empty()) c.residuals = resolve(base_dir, r);
  c.regions = split_list(value<std::string>(tree, "data.regions", ""));

  c.window.calibration_start = parse_date(req("window.calibration_start"));
  c.window.calibration_end = parse_date(req("window.calibration_end"));
  c.window.forecast_horizon = value(tree, "window.horizon", 14);
  c.smoothing = flag(tree, "window.smoothing", true);

  c.single_region_spatial = flag(tree, "model.single_region_spatial", false);
  c.incubation_draws = value(tree, "model.incubation_draws", 1);
  c.tau_prior = value<std::string>(tree, "model.tau_prior", "neg_log_tau2");

  c.paper_scale = flag(tree, "mcmc.paper_scale", false);
  if (c.paper_scale) c.mcmc = AmcmcConfig::paper_scale();
  c.mcmc.n_steps = value(tree, "mcmc.n_steps", c.mcmc.n_steps);
  c.mcmc.burn_in = value(tree, "mcmc.burn_in", c.mcmc.burn_in);
  c.mcmc.thin = value(tree, "mcmc.thin", c.mcmc.thin);
  c.mcmc.adapt_start = value(tree, "mcmc.adapt_start", c.mcmc.adapt_start);
  c.mcmc.seed = value(tree, "mcmc.seed", c.mcmc.seed);
  c.mcmc.refresh_current = flag(tree, "mcmc.refresh_current", false);

  c.n_draws = value(tree, "forecast.n_draws", c.n_draws);
  c.include_noise = flag(tree, "forecast.include_noise", true);

  c.detector = detector_from_string(value<std::string>(tree, "detect.detector", "infection_rate"));
  c.percentile = value(tree, "detect.percentile", c.percentile);
  c.run_length = value(tree, "detect.run_length", c.run_length);
  c.c_gamma = value(tree, "detect.c_gamma", c.c_gamma);
  const auto alt = value<std::string>(tree, "detect.glr_alternative", "intercept_shift");
  if (alt == "intercept_shift") c.glr_alternative = GlrAlternative::intercept_shift;
  else if (alt == "full_refit") c.glr_alternative = GlrAlternative::full_refit;
  else throw ConfigError("config: detect.glr_alternative must be intercept_shift or full_refit");
  c.glr_test_days = value(tree, "detect.glr_test_days", c.glr_test_days);

  c.output_dir = resolve(base_dir, value<std::string>(tree, "output.dir", "out"));
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c = parse_config(ss.str(), path.parent_path());
  c.source_path = path;
  return c;
}

void RunConfig::validate() const {
  try {
    window.validate();
    mcmc.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (regions.empty()) throw ConfigError("config: data.regions must list at least one region");
  if (regions.size() > 1 && adjacency.empty())
    throw ConfigError("config: several regions need data.adjacency");
  if (incubation_draws < 1) throw ConfigError("config: incubation_draws must be >= 1");
  if (tau_prior != "neg_log_tau2" && tau_prior != "tau")
    throw ConfigError("config: model.tau_prior must be neg_log_tau2 or tau");
  if (n_draws == 0) throw ConfigError("config: forecast.n_draws must be positive");
  if (!(percentile > 0 && percentile < 100)) throw ConfigError("config: detect.percentile must lie in (0, 100)");
  if (run_length < 1) throw ConfigError("config: detect.run_length must be positive");
  if (glr_test_days < 1 || glr_test_days > 31) throw ConfigError("config: detect.glr_test_days must be in 1..31");
  for (const auto& p : {cases, populations})
    if (!std::filesystem::exists(p)) throw NotFoundError("missing input " + p.string());
  if (!adjacency.empty() && !std::filesystem::exists(adjacency))
    throw NotFoundError("missing input " + adjacency.string());
  for (const auto& p : {distances, residuals})
    if (p && !std::filesystem::exists(*p)) throw NotFoundError("missing input " + p->string());
}

} // namespace epifield
