#include "epifield/analysis.hpp"
#include "epifield/errors.hpp"

#include "synthetic.hpp"

#include <doctest.h>

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

using namespace epifield;

namespace {

Eigen::MatrixXd normal(std::size_t n, std::size_t p, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

// Textbook version with full double-centred matrices.
double dcor_reference(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  const Eigen::Index n = X.rows();
  auto centred = [n](const Eigen::MatrixXd& Z) {
    Eigen::MatrixXd D(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) D(i, j) = (Z.row(i) - Z.row(j)).norm();
    const Eigen::VectorXd r = D.rowwise().mean();
    const double g = D.mean();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) D(i, j) += g - r[i] - r[j];
    return D;
  };
  const Eigen::MatrixXd A = centred(X), B = centred(Y);
  const double xy = (A.array() * B.array()).mean(), xx = A.array().square().mean(), yy = B.array().square().mean();
  return std::sqrt(std::clamp(xy / std::sqrt(xx * yy), 0.0, 1.0));
}

} // namespace

TEST_CASE("dcor agrees with the full-matrix formula") {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd X = normal(60, 2, rng);
  Eigen::MatrixXd Y = normal(60, 3, rng);
  Y.col(0) += X.col(0).array().square().matrix();
  CHECK(dcor(X, Y) == doctest::Approx(dcor_reference(X, Y)).epsilon(1e-12));
}

TEST_CASE("dcor basic values") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd X = normal(500, 1, rng);
  CHECK(dcor(X, X) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dcor(X, Eigen::MatrixXd(-3.0 * X.array() + 7.0)) == doctest::Approx(1.0).epsilon(1e-10));

  const Eigen::MatrixXd Z = normal(2000, 1, rng), W = normal(2000, 1, rng);
  CHECK(dcor(Z, W) < 0.1);

  // Nonlinear dependence that Pearson misses.
  const Eigen::MatrixXd sq = Z.array().square();
  const Eigen::ArrayXd zc = Z.col(0).array() - Z.mean(), qc = sq.col(0).array() - sq.mean();
  const double pearson = (zc * qc).sum() / std::sqrt(zc.square().sum() * qc.square().sum());
  CHECK(std::abs(pearson) < 0.1);
  CHECK(dcor(Z, sq) > 0.4);
}

TEST_CASE("dcor symmetry and invariances") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd X = normal(200, 3, rng);
  Eigen::MatrixXd Y = normal(200, 2, rng);
  Y.col(1) += X.col(2).array().sin().matrix();
  const double d = dcor(X, Y);
  CHECK(dcor(Y, X) == d);
  const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(normal(3, 3, rng)).householderQ();
  CHECK(std::abs(dcor(X * Q.transpose(), Y) - d) < 1e-8);
  CHECK(std::abs(dcor(X * 4.5, Y * 0.01) - d) < 1e-8);
  CHECK(std::abs(dcor(X.rowwise() + Eigen::RowVector3d(1, -2, 5), Y) - d) < 1e-8);
}

TEST_CASE("dcor edge cases") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd X = normal(20, 1, rng);
  CHECK(std::isnan(dcor(X, Eigen::MatrixXd::Constant(20, 1, 2.0))));
  CHECK_THROWS_AS(dcor(normal(9, 1, rng), normal(9, 1, rng)), InvalidInput);
  CHECK_THROWS_AS(dcor(normal(20, 1, rng), normal(21, 1, rng)), InvalidInput);
  Eigen::MatrixXd bad = X;
  bad(3, 0) = std::nan("");
  CHECK_THROWS_AS(dcor(bad, X), InvalidInput);
}

TEST_CASE("dcor table over an IID chain") {
  ParamLayout layout;
  layout.region_ids = {"a", "b"};
  layout.spatial = true;
  std::mt19937_64 rng(5);
  Chain c;
  c.names = layout.names();
  c.samples = normal(3000, layout.dim(), rng);
  c.samples.col(0) *= 5;
  c.samples.col(1) = c.samples.col(1).array().abs() + 1;
  c.samples.col(2) = c.samples.col(2).array().abs() + 1;
  c.samples.col(3) = c.samples.col(3).array().abs() + 10;
  c.samples.col(4) = c.samples.col(0) * 2.0; // t0 of b tied to t0 of a
  c.samples.col(5) = c.samples.col(5).array().abs() + 1;
  c.samples.col(6) = c.samples.col(6).array().abs() + 1;
  c.samples.col(7) = c.samples.col(7).array().abs() + 10;
  c.samples.col(8) = c.samples.col(8).array() * 0.3 - 10;
  c.samples.col(9) = c.samples.col(9).array() * 0.3 - 3;
  c.samples.col(10) = c.samples.col(10).array() * 0.3 - 20;
  c.samples.col(11) = c.samples.col(11).array().abs() * 0.1 + 0.2;
  c.log_post.assign(3000, 0);

  const auto m = dcor_table(c, layout);
  REQUIRE(m.labels.size() == 12);
  CHECK(m.labels[8] == "sigma_a");
  CHECK(m.labels[10] == "tau2");
  const Eigen::MatrixXd r = m.rounded();
  for (Eigen::Index i = 0; i < 12; ++i) {
    CHECK(r(i, i) == 1.0);
    for (Eigen::Index j = 0; j < 12; ++j) {
      if (i == j || (i == 0 && j == 4) || (i == 4 && j == 0)) continue;
      CHECK(r(i, j) <= 0.1);
    }
  }
  CHECK(r(0, 4) == 1.0);

  DcorTableOptions g;
  g.grouping = DcorGrouping::by_component;
  const auto gm = dcor_table(c, layout, g);
  CHECK(gm.labels == std::vector<std::string>{"a", "b", "SpC", "ErrM"});
  CHECK(gm.values(0, 1) > 0.2);
  CHECK(gm.rounded()(2, 3) <= 0.1);
}

TEST_CASE("constant chain column is reported as degenerate") {
  ParamLayout layout;
  layout.region_ids = {"a"};
  layout.spatial = false;
  std::mt19937_64 rng(6);
  Chain c;
  c.names = layout.names();
  c.samples = normal(100, layout.dim(), rng);
  c.samples.col(1) = c.samples.col(1).array().abs() + 1;
  c.samples.col(2) = c.samples.col(2).array().abs() + 1;
  c.samples.col(3).setConstant(500);
  c.log_post.assign(100, 0);
  const auto m = dcor_table(c, layout);
  CHECK(m.degenerate == std::vector<std::string>{"a.N"});
  CHECK(std::isnan(m.values(3, 0)));
  const auto dir = epifield::testing::scratch_dir("dcor");
  m.write_csv(dir / "d.csv", 1);
  std::ifstream in(dir / "d.csv");
  std::string head;
  std::getline(in, head);
  CHECK(head == "label,a.t0,a.k,a.theta,a.N,sigma_a,sigma_m");
}
