#pragma once

#include <vector>

#include "srcid/quantize/codebook.hpp"

namespace srcid::quant {

struct KmeansOptions {
  std::size_t iterations = 25;
  // Pin entry 0 to the zero vector; it never moves.
  bool include_zero = false;
};

// Lloyd iterations from a random-sample initialization. Clusters that end an
// iteration empty are reseeded to the point currently farthest from its
// centroid.
Codebook kmeans_codebook(const Tensor& data, std::size_t L, int layer, Rng& rng,
                         const KmeansOptions& opt = {});

// Greedy residual training: stage s is k-means on the residual left by stages
// 0..s-1.
std::vector<Codebook> train_rvq_stages(const Tensor& data, std::size_t stages, std::size_t L,
                                       Rng& rng, const KmeansOptions& opt = {});

}  // namespace srcid::quant
