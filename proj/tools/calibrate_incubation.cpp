// Solves the incubation hyper-distribution constants so that the central 95%
// intervals of mu and sigma hit the target endpoints.
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/tools/roots.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>

int main(int argc, char** argv) {
  double mu_lo = 1.48, mu_hi = 1.76, sigma_lo = 0.320, sigma_hi = 0.515;
  CLI::App app{"Calibrate the incubation hyper-distribution"};
  app.add_option("--mu-lo", mu_lo);
  app.add_option("--mu-hi", mu_hi);
  app.add_option("--sigma-lo", sigma_lo);
  app.add_option("--sigma-hi", sigma_hi);
  CLI11_PARSE(app, argc, argv);

  // sigma = s * sqrt(X2(nu) / nu): the ratio of the endpoints fixes nu.
  const double target = sigma_hi / sigma_lo;
  auto ratio_gap = [&](double nu) {
    boost::math::chi_squared_distribution<> chi(nu);
    return std::sqrt(boost::math::quantile(chi, 0.975) / boost::math::quantile(chi, 0.025)) - target;
  };
  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::bisect(ratio_gap, 1.0, 1e4, tol, iters);
  const double nu = 0.5 * (a + b);
  boost::math::chi_squared_distribution<> chi(nu);
  const double sigma_scale = sigma_lo / std::sqrt(boost::math::quantile(chi, 0.025) / nu);

  // mu = c + s T(nu), sharing nu with sigma.
  boost::math::students_t_distribution<> t(nu);
  const double mu_center = 0.5 * (mu_lo + mu_hi);
  const double mu_scale = (mu_hi - mu_center) / boost::math::quantile(t, 0.975);

  std::printf("mu_center   = %.17g\nmu_scale    = %.17g\nmu_df       = %.17g\n", mu_center, mu_scale, nu);
  std::printf("sigma_df    = %.17g\nsigma_scale = %.17g\n", nu, sigma_scale);
  return 0;
}
