#include "epifield/params.hpp"

#include "epifield/errors.hpp"

#include <cmath>

namespace epifield {

std::vector<std::string> ParamLayout::names() const {
  std::vector<std::string> out;
  out.reserve(dim());
  for (const auto& id : region_ids)
    for (const char* p : {"t0", "k", "theta", "N"}) out.push_back(id + "." + p);
  out.emplace_back("log_sigma_a");
  out.emplace_back("log_sigma_m");
  if (spatial) {
    out.emplace_back("log_tau2");
    out.emplace_back("lambda");
  }
  return out;
}

GlobalParams ParamVector::global() const {
  return {std::exp(log_sigma_a), std::exp(log_sigma_m), std::exp(log_tau2), lambda};
}

Eigen::VectorXd ParamVector::pack(const ParamLayout& layout) const {
  if (regions.size() != layout.n_regions()) throw InvalidInput("ParamVector: region count mismatch");
  Eigen::VectorXd x(static_cast<Eigen::Index>(layout.dim()));
  Eigen::Index i = 0;
  for (const auto& r : regions) {
    x(i++) = r.t0;
    x(i++) = r.k;
    x(i++) = r.theta;
    x(i++) = r.N;
  }
  x(i++) = log_sigma_a;
  x(i++) = log_sigma_m;
  if (layout.spatial) {
    x(i++) = log_tau2;
    x(i++) = lambda;
  }
  return x;
}

ParamVector ParamVector::unpack(const ParamLayout& layout, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != layout.dim())
    throw InvalidInput("ParamVector: coordinate vector has wrong dimension");
  ParamVector p;
  p.regions.resize(layout.n_regions());
  Eigen::Index i = 0;
  for (auto& r : p.regions) {
    r.t0 = x(i++);
    r.k = x(i++);
    r.theta = x(i++);
    r.N = x(i++);
  }
  p.log_sigma_a = x(i++);
  p.log_sigma_m = x(i++);
  if (layout.spatial) {
    p.log_tau2 = x(i++);
    p.lambda = x(i++);
  } else {
    p.log_tau2 = 0;
    p.lambda = 0;
  }
  return p;
}

} // namespace epifield
