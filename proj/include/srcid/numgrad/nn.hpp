#pragma once

#include <random>
#include <string>

#include "srcid/numgrad/tape.hpp"

namespace srcid::numgrad {

using Rng = std::mt19937_64;

// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng);
Tensor normal(std::size_t rows, std::size_t cols, double stddev, Rng& rng);

// x -> x W + b. Parameters "<prefix>.w" (in x out) and "<prefix>.b" (1 x out).
struct Linear {
  std::string prefix;
  std::size_t in = 0;
  std::size_t out = 0;

  void init(ParamStore& ps, Rng& rng) const;
  Var forward(Tape& tape, ParamStore& ps, Var x) const;
};

// Two-layer tanh perceptron: x -> tanh(x W1 + b1) W2 + b2, applied row-wise.
struct Mlp {
  Linear hidden;
  Linear output;

  Mlp() = default;
  Mlp(const std::string& prefix, std::size_t in, std::size_t width, std::size_t out);
  void init(ParamStore& ps, Rng& rng) const;
  Var forward(Tape& tape, ParamStore& ps, Var x) const;
  std::size_t in() const { return hidden.in; }
  std::size_t out() const { return output.out; }
};

}  // namespace srcid::numgrad
