#include "srcid/quantize/ema.hpp"

#include <cmath>
#include <string>

#include "srcid/error.hpp"

namespace srcid::quant {
namespace {

struct Stats {
  std::vector<double> counts;
  Tensor sums;
};

Stats collect(const Codebook& cb, const Assignment& a) {
  if (a.codes.size() != a.vectors.rows())
    throw ShapeError("assignment: " + std::to_string(a.codes.size()) + " codes for vectors " +
                     a.vectors.shape_str());
  if (!a.codes.empty() && a.vectors.cols() != cb.dim())
    throw ShapeError("assignment: vectors " + a.vectors.shape_str() + " vs codebook " +
                     cb.entries.shape_str());
  Stats s{std::vector<double>(cb.size(), 0.0), Tensor(cb.size(), cb.dim())};
  for (std::size_t r = 0; r < a.codes.size(); ++r) {
    const int c = a.codes[r];
    if (c < 0 || static_cast<std::size_t>(c) >= cb.size())
      throw ShapeError("assignment: code " + std::to_string(c) + " out of range");
    const auto l = static_cast<std::size_t>(c);
    s.counts[l] += 1.0;
    auto dst = s.sums.row(l);
    const auto src = a.vectors.row(r);
    for (std::size_t d = 0; d < cb.dim(); ++d) dst[d] += src[d];
  }
  return s;
}

void apply(Codebook& cb, const Stats& s) {
  const double g = cb.decay;
  if (g == 1.0) return;
  const std::size_t L = cb.size();
  for (std::size_t l = 0; l < L; ++l) {
    cb.ema_counts[l] = g * cb.ema_counts[l] + (1.0 - g) * s.counts[l];
    auto sum = cb.ema_sums.row(l);
    const auto add = s.sums.row(l);
    for (std::size_t d = 0; d < cb.dim(); ++d) sum[d] = g * sum[d] + (1.0 - g) * add[d];
  }
  double total = 0.0;
  for (double c : cb.ema_counts) total += c;
  const double eps = cb.laplace;
  for (std::size_t l = 0; l < L; ++l) {
    const double smoothed =
        (cb.ema_counts[l] + eps) / (total + static_cast<double>(L) * eps) * total;
    const auto sum = cb.ema_sums.row(l);
    auto e = cb.entries.row(l);
    for (std::size_t d = 0; d < cb.dim(); ++d) e[d] = sum[d] / smoothed;
  }
}

}  // namespace

void ema_update(Codebook& cb, const Assignment& assigned) { apply(cb, collect(cb, assigned)); }

void mmema_update(Codebook& cb, std::span<const Assignment> per_modality,
                  std::span<const double> weights) {
  if (per_modality.size() != weights.size())
    throw ConfigError("mmema_update: " + std::to_string(weights.size()) + " weights for " +
                      std::to_string(per_modality.size()) + " modalities");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("mmema_update: weights must be nonnegative");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9)
    throw ConfigError("mmema_update: weights sum to " + std::to_string(wsum) + ", expected 1");
  Stats pooled{std::vector<double>(cb.size(), 0.0), Tensor(cb.size(), cb.dim())};
  for (std::size_t m = 0; m < per_modality.size(); ++m) {
    const Stats s = collect(cb, per_modality[m]);
    const double w = weights[m];
    for (std::size_t l = 0; l < cb.size(); ++l) pooled.counts[l] += w * s.counts[l];
    for (std::size_t i = 0; i < pooled.sums.size(); ++i) pooled.sums[i] += w * s.sums[i];
  }
  apply(cb, pooled);
}

std::size_t reseed_dead_codes(Codebook& cb, const Tensor& candidates, Rng& rng, double threshold) {
  if (candidates.rows() == 0) return 0;
  if (candidates.cols() != cb.dim())
    throw ShapeError("reseed: candidates " + candidates.shape_str() + " vs codebook " +
                     cb.entries.shape_str());
  std::uniform_int_distribution<std::size_t> pick(0, candidates.rows() - 1);
  std::size_t n = 0;
  for (std::size_t l = 0; l < cb.size(); ++l) {
    if (cb.ema_counts[l] >= threshold) continue;
    const auto src = candidates.row(pick(rng));
    std::copy(src.begin(), src.end(), cb.entries.row(l).begin());
    std::copy(src.begin(), src.end(), cb.ema_sums.row(l).begin());
    cb.ema_counts[l] = 1.0;
    ++n;
  }
  return n;
}

}  // namespace srcid::quant
