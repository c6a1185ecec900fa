#include "srcid/numgrad/nn.hpp"

#include <cmath>

namespace srcid::numgrad {

Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-a, a);
  Tensor t(fan_in, fan_out);
  for (double& v : t.values()) v = u(rng);
  return t;
}

Tensor normal(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  std::normal_distribution<double> n(0.0, stddev);
  Tensor t(rows, cols);
  for (double& v : t.values()) v = n(rng);
  return t;
}

void Linear::init(ParamStore& ps, Rng& rng) const {
  ps.add(prefix + ".w", glorot(in, out, rng));
  ps.add(prefix + ".b", Tensor(1, out));
}

Var Linear::forward(Tape& tape, ParamStore& ps, Var x) const {
  return add_row(matmul(x, tape.param(ps, prefix + ".w")), tape.param(ps, prefix + ".b"));
}

Mlp::Mlp(const std::string& prefix, std::size_t in, std::size_t width, std::size_t out)
    : hidden{prefix + ".l1", in, width}, output{prefix + ".l2", width, out} {}

void Mlp::init(ParamStore& ps, Rng& rng) const {
  hidden.init(ps, rng);
  output.init(ps, rng);
}

Var Mlp::forward(Tape& tape, ParamStore& ps, Var x) const {
  return output.forward(tape, ps, tanh(hidden.forward(tape, ps, x)));
}

}  // namespace srcid::numgrad
