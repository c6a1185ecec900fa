#pragma once

#include <vector>

#include "srcid/numgrad/tensor.hpp"

// Data-parallel inner loops. Every kernel has a serial reference in
// `kernels::serial` with the same per-element accumulation order, so the
// OpenMP versions are bit-identical to it regardless of thread count.
namespace srcid::kernels {

using numgrad::Tensor;

// a * b
Tensor matmul(const Tensor& a, const Tensor& b);
// a^T * b
Tensor matmul_tn(const Tensor& a, const Tensor& b);
// a * b^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);

// Index of the nearest row of `entries` (squared L2) for every row of
// `queries`; ties resolve to the lowest index.
std::vector<int> nearest_rows(const Tensor& queries, const Tensor& entries);

// Cosine similarity between every row of a and every row of b. Zero rows have
// similarity 0 to everything.
Tensor cosine_similarity(const Tensor& a, const Tensor& b);

namespace serial {
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);
std::vector<int> nearest_rows(const Tensor& queries, const Tensor& entries);
Tensor cosine_similarity(const Tensor& a, const Tensor& b);
}  // namespace serial

int max_threads();

}  // namespace srcid::kernels
