#pragma once

#include <iosfwd>
#include <string>
#include <unordered_map>

#include "srcid/numgrad/param_store.hpp"

namespace srcid::numgrad {

enum class OptimizerKind { kSgd, kAdam };

OptimizerKind parse_optimizer(const std::string& name);
std::string to_string(OptimizerKind k);

// Applies accumulated gradients of a ParamStore. Adam keeps first/second
// moment estimates keyed by parameter name.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(OptimizerKind kind, double lr) : kind_(kind), lr_(lr) {}

  // One update from the current gradients; does not clear them.
  void step(ParamStore& params);

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  OptimizerKind kind() const { return kind_; }

  void save(std::ostream& os) const;
  static Optimizer load(std::istream& is);

  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

 private:
  struct Moments {
    Tensor m;
    Tensor v;
  };
  OptimizerKind kind_ = OptimizerKind::kSgd;
  double lr_ = 1e-2;
  std::uint64_t t_ = 0;
  std::unordered_map<std::string, Moments> moments_;
};

}  // namespace srcid::numgrad
