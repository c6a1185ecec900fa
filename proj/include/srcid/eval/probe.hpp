#pragma once

#include <span>
#include <vector>

#include "srcid/numgrad/tensor.hpp"

namespace srcid::eval {

using numgrad::Tensor;

struct ProbeOptions {
  std::size_t iterations = 300;
  double learning_rate = 0.05;  // Adam, full batch
  double l2 = 1e-4;
};

// Multinomial logistic regression on standardized features. Identical
// (row, label) pairs are merged into one weighted row before fitting, which
// keeps probes on quantized embeddings cheap.
class LogisticProbe {
 public:
  void fit(const Tensor& x, std::span<const int> labels, std::size_t num_classes,
           const ProbeOptions& opt = {});
  // Argmax class per row, ties to the lowest index.
  std::vector<int> predict(const Tensor& x) const;
  double accuracy(const Tensor& x, std::span<const int> labels) const;

  std::size_t fitted_rows() const { return fitted_rows_; }

 private:
  Tensor standardize(const Tensor& x) const;

  std::vector<double> mean_, scale_;
  Tensor w_;  // D x C
  Tensor b_;  // 1 x C
  std::size_t fitted_rows_ = 0;
};

double accuracy(std::span<const int> predicted, std::span<const int> labels);

}  // namespace srcid::eval
