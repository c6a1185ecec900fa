#include "srcid/numgrad/optim.hpp"

#include <cmath>
#include <map>

#include "srcid/error.hpp"
#include "srcid/io/binary.hpp"

namespace srcid::numgrad {

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd|adam)");
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::kSgd ? "sgd" : "adam"; }

void Optimizer::step(ParamStore& params) {
  ++params.step;
  if (kind_ == OptimizerKind::kSgd) {
    if (lr_ == 0.0) return;
    for (auto& e : params) e->value.axpy(-lr_, e->grad);
    return;
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (auto& e : params) {
    auto& mo = moments_[e->name];
    if (mo.m.empty()) {
      mo.m = Tensor(e->value.rows(), e->value.cols());
      mo.v = Tensor(e->value.rows(), e->value.cols());
    }
    for (std::size_t i = 0; i < e->value.size(); ++i) {
      const double g = e->grad[i];
      mo.m[i] = beta1 * mo.m[i] + (1.0 - beta1) * g;
      mo.v[i] = beta2 * mo.v[i] + (1.0 - beta2) * g * g;
      if (lr_ != 0.0) e->value[i] -= lr_ * (mo.m[i] / bc1) / (std::sqrt(mo.v[i] / bc2) + eps);
    }
  }
}

void Optimizer::save(std::ostream& os) const {
  io::write_u32(os, kind_ == OptimizerKind::kSgd ? 0u : 1u);
  io::write_f64(os, lr_);
  io::write_f64(os, beta1);
  io::write_f64(os, beta2);
  io::write_f64(os, eps);
  io::write_u64(os, t_);
  // Sorted for a byte-stable file.
  std::map<std::string, const Moments*> sorted;
  for (const auto& [k, v] : moments_) sorted.emplace(k, &v);
  io::write_u32(os, static_cast<std::uint32_t>(sorted.size()));
  for (const auto& [k, v] : sorted) {
    io::write_string(os, k);
    io::write_tensor(os, v->m);
    io::write_tensor(os, v->v);
  }
}

Optimizer Optimizer::load(std::istream& is) {
  Optimizer o;
  const auto kind = io::read_u32(is);
  if (kind > 1) throw FormatError("bad optimizer kind");
  o.kind_ = kind == 0 ? OptimizerKind::kSgd : OptimizerKind::kAdam;
  o.lr_ = io::read_f64(is);
  o.beta1 = io::read_f64(is);
  o.beta2 = io::read_f64(is);
  o.eps = io::read_f64(is);
  o.t_ = io::read_u64(is);
  const auto n = io::read_u32(is);
  for (std::uint32_t i = 0; i < n; ++i) {
    auto name = io::read_string(is);
    Moments mo;
    mo.m = io::read_tensor(is);
    mo.v = io::read_tensor(is);
    o.moments_.emplace(std::move(name), std::move(mo));
  }
  return o;
}

}  // namespace srcid::numgrad
