#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "srcid/numgrad/tape.hpp"

namespace srcid::numgrad {

// A graph description builds a scalar-or-tensor output on a fresh tape from
// constant inputs and the parameters in `params`. It must be deterministic.
using Graph = std::function<Var(Tape&, std::span<const Var> inputs, ParamStore& params)>;

Tensor forward_eval(const Graph& graph, std::span<const Tensor> inputs, ParamStore& params);

// Runs forward + backward and adds d(output)/d(param) into params' grads.
// Returns the output value. Throws ShapeError when the output is not 1x1.
double backward(const Graph& graph, std::span<const Tensor> inputs, ParamStore& params);

struct FdReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coords_checked = 0;
};

// Central differences against the analytic gradient. Relative error is
// |a - n| / max(|a|, |n|, 1e-6). Stop-gradient constants are frozen to their
// unperturbed values, so the check differentiates the sg surrogate.
// `max_coords_per_param` == 0 checks every coordinate; otherwise that many
// evenly strided coordinates per parameter tensor (always including the first).
FdReport finite_diff_check(const Graph& graph, std::span<const Tensor> inputs,
                           ParamStore& params, double epsilon = 1e-5,
                           std::size_t max_coords_per_param = 0);

}  // namespace srcid::numgrad
