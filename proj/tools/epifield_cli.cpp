#include "epifield/commands.hpp"
#include "epifield/config.hpp"
#include "epifield/errors.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <sstream>

using namespace epifield;

namespace {

struct Flags {
  std::string config;
  std::string regions;
  std::optional<std::uint64_t> seed;
  bool paper_scale = false;
  std::string detector;
  std::string output;
  std::string chain;
  bool quiet = false;
};

RunConfig resolve(const Flags& f) {
  RunConfig c = load_config(f.config);
  if (!f.regions.empty()) {
    c.regions.clear();
    std::stringstream ss(f.regions);
    for (std::string r; std::getline(ss, r, ',');)
      if (!r.empty()) c.regions.push_back(r);
  }
  if (f.paper_scale) {
    const auto seed = c.mcmc.seed;
    c.mcmc = AmcmcConfig::paper_scale();
    c.mcmc.seed = seed;
    c.paper_scale = true;
  }
  if (f.seed) c.mcmc.seed = *f.seed;
  if (!f.detector.empty()) c.detector = detector_from_string(f.detector);
  if (!f.output.empty()) c.output_dir = f.output;
  return c;
}

std::filesystem::path chain_stem(const Flags& f, const RunConfig& c) {
  return f.chain.empty() ? c.output_dir / "chain" : std::filesystem::path(f.chain);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatiotemporal infection-rate estimation, forecasting and wave detection"};
  app.require_subcommand(1);
  Flags f;
  auto common = [&f](CLI::App* sub) {
    sub->add_option("--config", f.config, "INI run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--regions", f.regions, "comma-separated region ids (overrides the config)");
    sub->add_option("--seed", f.seed, "random seed (overrides the config)");
    sub->add_flag("--paper-scale", f.paper_scale, "2e6 steps, 5e5 burn-in, thin 100");
    sub->add_option("--output", f.output, "output directory (overrides the config)");
    sub->add_flag("--quiet", f.quiet, "only warnings and errors");
  };
  auto* fit = app.add_subcommand("fit", "sample the posterior and write the chain");
  auto* forecast = app.add_subcommand("forecast", "posterior-predictive bands and CRPS");
  auto* detect = app.add_subcommand("detect", "wave-arrival detection");
  auto* diagnose = app.add_subcommand("diagnose", "Moran's I and distance-correlation tables");
  for (auto* s : {fit, forecast, detect, diagnose}) common(s);
  for (auto* s : {forecast, detect, diagnose})
    s->add_option("--chain", f.chain, "chain file stem (default <output>/chain)");
  detect->add_option("--detector", f.detector, "infection_rate or glr_poisson")
      ->check(CLI::IsMember({"infection_rate", "glr_poisson"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  if (f.quiet) spdlog::set_level(spdlog::level::warn);

  return run_guarded([&] {
    const RunConfig c = resolve(f);
    if (fit->parsed()) cmd_fit(c);
    else if (forecast->parsed()) cmd_forecast(c, chain_stem(f, c));
    else if (detect->parsed()) cmd_detect(c, chain_stem(f, c), c.detector);
    else if (diagnose->parsed()) cmd_diagnose(c, chain_stem(f, c));
  });
}
