#pragma once

#include <span>
#include <vector>

#include "srcid/quantize/codebook.hpp"

namespace srcid::quant {

// Row r of `vectors` is assigned to code codes[r].
struct Assignment {
  std::vector<int> codes;
  Tensor vectors;
};

// Exponential-moving-average codebook step with Laplace smoothing:
//   n_l     = number of vectors assigned to l
//   counts_l <- g * counts_l + (1 - g) * n_l
//   sums_l   <- g * sums_l   + (1 - g) * sum of vectors assigned to l
//   N        = sum_l counts_l
//   smoothed_l = (counts_l + eps) / (N + L * eps) * N
//   entries_l  = sums_l / smoothed_l
// A decay of exactly 1 freezes the statistics and leaves entries untouched.
void ema_update(Codebook& cb, const Assignment& assigned);

// Weighted pooling of several modalities' assignment statistics into one
// shared codebook: n_l and the vector sums are the weight-scaled sums over
// modalities, then the ema_update formulas apply. Weights must be >= 0 and
// sum to 1 within 1e-9.
void mmema_update(Codebook& cb, std::span<const Assignment> per_modality,
                  std::span<const double> weights);

// Codes whose EMA count fell below `threshold` get a random candidate row as
// their new entry (count 1, sum = entry). Returns the number reseeded.
std::size_t reseed_dead_codes(Codebook& cb, const Tensor& candidates, Rng& rng,
                              double threshold = kDeadCodeThreshold);

}  // namespace srcid::quant
