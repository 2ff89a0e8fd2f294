#include "epifield/analysis.hpp"

#include "epifield/errors.hpp"
#include "epifield/epimodel.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

namespace epifield {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

/// Pairwise Euclidean distances of the rows, never stored as a matrix; only
/// the row means and grand mean needed for double centring are kept.
class Centred {
public:
  explicit Centred(Eigen::MatrixXd x) : x_(std::move(x)), row_(x_.rows()) {
    const Eigen::Index n = x_.rows();
    row_.setZero();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double d = dist(i, j);
        row_[i] += d;
        row_[j] += d;
      }
    row_ /= static_cast<double>(n);
    grand_ = row_.mean();
  }

  double dist(Eigen::Index i, Eigen::Index j) const {
    if (x_.cols() == 1) return std::abs(x_(i, 0) - x_(j, 0));
    return (x_.row(i) - x_.row(j)).norm();
  }
  double a(Eigen::Index i, Eigen::Index j) const { return dist(i, j) - row_[i] - row_[j] + grand_; }
  Eigen::Index n() const { return x_.rows(); }

private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd row_;
  double grand_ = 0;
};

/// (1/n^2) sum_ij A_ij B_ij using symmetry.
double dcov2(const Centred& A, const Centred& B) {
  const Eigen::Index n = A.n();
  double off = 0, diag = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    diag += A.a(i, i) * B.a(i, i);
    for (Eigen::Index j = i + 1; j < n; ++j) off += A.a(i, j) * B.a(i, j);
  }
  return (2 * off + diag) / (static_cast<double>(n) * static_cast<double>(n));
}

double dcor_from(const Centred& A, const Centred& B, double vA, double vB) {
  if (!(vA > 0) || !(vB > 0)) return nan;
  const double r2 = dcov2(A, B) / std::sqrt(vA * vB);
  return std::sqrt(std::clamp(r2, 0.0, 1.0));
}

void check_sample(const Eigen::MatrixXd& X, const char* what) {
  if (X.rows() < 10) throw InvalidInput(std::string("dcor: ") + what + " has fewer than 10 rows");
  if (!X.allFinite()) throw InvalidInput(std::string("dcor: ") + what + " has non-finite entries");
}

bool constant(const Eigen::VectorXd& c) { return c.maxCoeff() == c.minCoeff(); }

} // namespace

double dcor(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  if (X.rows() != Y.rows()) throw InvalidInput("dcor: samples have different sizes");
  check_sample(X, "X");
  check_sample(Y, "Y");
  const Centred A(X), B(Y);
  return dcor_from(A, B, dcov2(A, A), dcov2(B, B));
}

Eigen::MatrixXd DcorMatrix::rounded() const {
  return values.unaryExpr([](double v) { return std::isnan(v) ? v : std::round(v * 10) / 10; });
}

void DcorMatrix::write_csv(const std::filesystem::path& path, int decimals) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw NotFoundError("cannot write " + path.string());
  const Eigen::MatrixXd v = decimals == 1 ? rounded() : values;
  out << "label";
  for (const auto& l : labels) out << ',' << l;
  out << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    out << labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      if (std::isnan(v(i, j))) out << ",nan";
      else {
        if (decimals >= 0) std::snprintf(buf, sizeof buf, ",%.*f", decimals, v(i, j));
        else std::snprintf(buf, sizeof buf, ",%.17g", v(i, j));
        out << buf;
      }
    }
    out << '\n';
  }
}

DcorMatrix dcor_table(const Chain& chain, const ParamLayout& layout, const DcorTableOptions& options) {
  if (chain.dim() != layout.dim()) throw InvalidInput("dcor_table: chain does not match the layout");
  const auto n_all = static_cast<Eigen::Index>(chain.n_kept());
  if (n_all < 10) throw InvalidInput("dcor_table: chain has fewer than 10 rows");

  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n_all));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  if (rows.size() > options.max_rows) {
    Rng rng(options.seed);
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(options.max_rows);
    std::sort(rows.begin(), rows.end());
  }
  const auto n = static_cast<Eigen::Index>(rows.size());

  // Natural-scale columns and labels.
  Eigen::MatrixXd nat(n, static_cast<Eigen::Index>(layout.dim()));
  for (Eigen::Index i = 0; i < n; ++i) nat.row(i) = chain.samples.row(rows[static_cast<std::size_t>(i)]);
  std::vector<std::string> names = layout.names();
  auto exp_col = [&](std::size_t idx, const char* label) {
    nat.col(static_cast<Eigen::Index>(idx)) = nat.col(static_cast<Eigen::Index>(idx)).array().exp().matrix();
    names[idx] = label;
  };
  exp_col(layout.log_sigma_a_index(), "sigma_a");
  exp_col(layout.log_sigma_m_index(), "sigma_m");
  if (layout.spatial) exp_col(layout.log_tau2_index(), "tau2");

  std::vector<bool> degenerate(names.size());
  DcorMatrix out;
  for (std::size_t c = 0; c < names.size(); ++c)
    if (constant(nat.col(static_cast<Eigen::Index>(c)))) {
      degenerate[c] = true;
      out.degenerate.push_back(names[c]);
      spdlog::warn("dcor_table: column {} is constant", names[c]);
    }

  std::vector<std::vector<std::size_t>> groups;
  if (options.grouping == DcorGrouping::individual) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      groups.push_back({c});
      out.labels.push_back(names[c]);
    }
  } else {
    for (std::size_t r = 0; r < layout.n_regions(); ++r) {
      groups.push_back({4 * r, 4 * r + 1, 4 * r + 2, 4 * r + 3});
      out.labels.push_back(layout.region_ids[r]);
    }
    if (layout.spatial) {
      groups.push_back({layout.log_tau2_index(), layout.lambda_index()});
      out.labels.push_back("SpC");
    }
    groups.push_back({layout.log_sigma_a_index(), layout.log_sigma_m_index()});
    out.labels.push_back("ErrM");
    for (auto& g : groups) std::erase_if(g, [&](std::size_t c) { return degenerate[c]; });
  }

  std::vector<Centred> centred;
  std::vector<double> var;
  centred.reserve(groups.size());
  for (const auto& g : groups) {
    Eigen::MatrixXd block(n, static_cast<Eigen::Index>(g.size()));
    for (std::size_t k = 0; k < g.size(); ++k) block.col(static_cast<Eigen::Index>(k)) = nat.col(static_cast<Eigen::Index>(g[k]));
    centred.emplace_back(std::move(block));
    var.push_back(g.empty() ? 0.0 : dcov2(centred.back(), centred.back()));
  }

  const auto G = static_cast<Eigen::Index>(groups.size());
  out.values = Eigen::MatrixXd::Constant(G, G, nan);
  for (Eigen::Index i = 0; i < G; ++i) {
    if (var[static_cast<std::size_t>(i)] > 0) out.values(i, i) = 1;
    for (Eigen::Index j = i + 1; j < G; ++j) {
      const double v = dcor_from(centred[static_cast<std::size_t>(i)], centred[static_cast<std::size_t>(j)],
                                 var[static_cast<std::size_t>(i)], var[static_cast<std::size_t>(j)]);
      out.values(i, j) = out.values(j, i) = v;
    }
  }
  return out;
}

} // namespace epifield
