#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "srcid/numgrad/nn.hpp"
#include "srcid/numgrad/tensor.hpp"

namespace srcid::quant {

using numgrad::Rng;
using numgrad::Tensor;

inline constexpr double kDefaultDecay = 0.99;
inline constexpr double kDefaultLaplace = 1e-5;
inline constexpr double kDeadCodeThreshold = 1e-3;

// One codebook layer (L entries of dimension D) with its EMA statistics.
// After every EMA step entries[l] = ema_sums[l] / smoothed_count(l), see
// ema.hpp for the smoothing formula.
struct Codebook {
  Tensor entries;                   // L x D
  int layer = 1;                    // k
  std::vector<double> ema_counts;   // L
  Tensor ema_sums;                  // L x D
  double decay = kDefaultDecay;     // gamma
  double laplace = kDefaultLaplace; // epsilon

  std::size_t size() const { return entries.rows(); }
  std::size_t dim() const { return entries.cols(); }

  // Entries ~ N(0, stddev^2); counts 1 and sums equal to the entries.
  static Codebook random(std::size_t L, std::size_t D, int layer, double stddev, Rng& rng);
  // Takes over the given entries with unit counts.
  static Codebook from_entries(Tensor entries, int layer);

  void validate() const;
};

// Binary codebook file, little-endian:
//   "SRCB" u32 version(=1)
//   u32 L, u32 D, i32 layer, f64 decay, f64 laplace
//   L*D f64 entries (row-major), L f64 ema_counts, L*D f64 ema_sums
void save_codebook(std::ostream& os, const Codebook& cb);
Codebook load_codebook(std::istream& is);
bool operator==(const Codebook& a, const Codebook& b);

}  // namespace srcid::quant
