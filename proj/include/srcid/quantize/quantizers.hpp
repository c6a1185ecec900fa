#pragma once

#include <span>
#include <vector>

#include "srcid/numgrad/tape.hpp"
#include "srcid/quantize/codebook.hpp"

namespace srcid::quant {

inline constexpr double kCommitmentBeta = 0.25;

struct QuantizationResult {
  std::vector<std::vector<int>> codes;  // [stage][t]
  Tensor quantized;                     // T x D
  Tensor residual;                      // T x D, input minus quantized for VQ/RVQ
  double commitment_loss = 0.0;         // beta * quantization_mse
  double quantization_mse = 0.0;        // mean over elements of (z - quantized)^2
};

// Nearest entry per row, ties to the lowest index.
QuantizationResult vq_quantize(const Tensor& z, const Codebook& cb,
                               double beta = kCommitmentBeta);

// Greedy residual quantization across `stages` codebooks.
QuantizationResult rvq_quantize(const Tensor& z, std::span<const Codebook> stages,
                                double beta = kCommitmentBeta);

// Finite scalar quantization levels, one odd level count >= 3 per dimension.
struct FsqSpec {
  std::vector<int> levels;

  void validate() const;
  std::size_t codebook_size() const;
  std::size_t dim() const { return levels.size(); }
};

// Per dimension d with h = floor(levels[d] / 2): q = round(h * tanh(z)),
// quantized = q / h, and the code is the mixed-radix integer of (q + h) with
// dimension 0 least significant. Idempotent on its own outputs for levels
// 3 and 5; for larger level counts h*tanh(q/h) can round below q.
QuantizationResult fsq_quantize(const Tensor& z, const FsqSpec& spec);

// Inverse of the FSQ code packing: normalized grid values of `code`.
std::vector<double> fsq_decode(std::size_t code, const FsqSpec& spec);

// beta * mean ||z - sg[quantized]||^2; gradient reaches z only.
numgrad::Var commitment_loss(numgrad::Var z, const Tensor& quantized,
                             double beta = kCommitmentBeta);
double commitment_loss(const Tensor& z, const Tensor& quantized, double beta = kCommitmentBeta);

// exp(entropy) of the empirical code histogram, in [1, L].
double codebook_perplexity(std::span<const int> codes, std::size_t L);
std::vector<double> code_histogram(std::span<const int> codes, std::size_t L);

}  // namespace srcid::quant
