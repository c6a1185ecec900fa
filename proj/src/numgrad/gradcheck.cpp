#include "srcid/numgrad/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "srcid/error.hpp"

namespace srcid::numgrad {
namespace {

std::vector<Var> bind_inputs(Tape& tape, std::span<const Tensor> inputs) {
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  return vars;
}

double eval_frozen(const Graph& graph, std::span<const Tensor> inputs, ParamStore& params,
                   const std::vector<Tensor>& sg) {
  Tape tape;
  tape.freeze_stop_gradients(sg);
  auto in = bind_inputs(tape, inputs);
  return graph(tape, in, params).value().item();
}

}  // namespace

Tensor forward_eval(const Graph& graph, std::span<const Tensor> inputs, ParamStore& params) {
  Tape tape;
  auto in = bind_inputs(tape, inputs);
  return graph(tape, in, params).value();
}

double backward(const Graph& graph, std::span<const Tensor> inputs, ParamStore& params) {
  Tape tape;
  auto in = bind_inputs(tape, inputs);
  Var out = graph(tape, in, params);
  tape.backward(out);
  return out.value().item();
}

FdReport finite_diff_check(const Graph& graph, std::span<const Tensor> inputs,
                           ParamStore& params, double epsilon,
                           std::size_t max_coords_per_param) {
  if (!(epsilon > 0.0)) throw ConfigError("finite_diff_check: epsilon must be > 0");
  params.zero_grads();
  std::vector<Tensor> sg;
  {
    Tape tape;
    auto in = bind_inputs(tape, inputs);
    Var out = graph(tape, in, params);
    tape.backward(out);
    sg = tape.stop_gradient_record();
  }
  FdReport report;
  for (auto& e : params) {
    const std::size_t n = e->value.size();
    std::vector<std::size_t> coords;
    if (max_coords_per_param == 0 || max_coords_per_param >= n) {
      for (std::size_t i = 0; i < n; ++i) coords.push_back(i);
    } else {
      const double stride = static_cast<double>(n) / static_cast<double>(max_coords_per_param);
      for (std::size_t k = 0; k < max_coords_per_param; ++k)
        coords.push_back(static_cast<std::size_t>(static_cast<double>(k) * stride));
    }
    for (std::size_t i : coords) {
      const double orig = e->value[i];
      e->value[i] = orig + epsilon;
      const double fp = eval_frozen(graph, inputs, params, sg);
      e->value[i] = orig - epsilon;
      const double fm = eval_frozen(graph, inputs, params, sg);
      e->value[i] = orig;
      const double numeric = (fp - fm) / (2.0 * epsilon);
      const double analytic = e->grad[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.coords_checked;
      if (rel > report.max_rel_error || report.worst_param.empty()) {
        if (rel >= report.max_rel_error) {
          report.max_rel_error = rel;
          report.worst_param = e->name;
          report.worst_index = i;
          report.worst_analytic = analytic;
          report.worst_numeric = numeric;
        }
      }
    }
  }
  return report;
}

}  // namespace srcid::numgrad
