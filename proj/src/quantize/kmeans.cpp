#include "srcid/quantize/kmeans.hpp"

#include <algorithm>
#include <numeric>

#include "srcid/error.hpp"
#include "srcid/numgrad/kernels.hpp"
#include "srcid/quantize/quantizers.hpp"

namespace srcid::quant {

Codebook kmeans_codebook(const Tensor& data, std::size_t L, int layer, Rng& rng,
                         const KmeansOptions& opt) {
  if (data.rows() == 0 || L == 0) throw ShapeError("kmeans: need data and L >= 1");
  const std::size_t n = data.rows(), D = data.cols();
  Tensor centers(L, D);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t first = opt.include_zero ? 1 : 0;
  for (std::size_t l = first; l < L; ++l) {
    const auto src = data.row(order[(l - first) % n]);
    std::copy(src.begin(), src.end(), centers.row(l).begin());
  }
  for (std::size_t it = 0; it < opt.iterations; ++it) {
    const auto codes = kernels::nearest_rows(data, centers);
    Tensor sums(L, D);
    std::vector<double> counts(L, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(codes[i]);
      counts[c] += 1.0;
      auto s = sums.row(c);
      const auto x = data.row(i);
      for (std::size_t d = 0; d < D; ++d) s[d] += x[d];
    }
    for (std::size_t l = first; l < L; ++l) {
      if (counts[l] == 0.0) {
        std::size_t far = 0;
        double far_dist = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const auto x = data.row(i);
          const auto c = centers.row(static_cast<std::size_t>(codes[i]));
          double dist = 0.0;
          for (std::size_t d = 0; d < D; ++d) dist += (x[d] - c[d]) * (x[d] - c[d]);
          if (dist > far_dist) {
            far_dist = dist;
            far = i;
          }
        }
        const auto src = data.row(far);
        std::copy(src.begin(), src.end(), centers.row(l).begin());
        continue;
      }
      auto c = centers.row(l);
      const auto s = sums.row(l);
      for (std::size_t d = 0; d < D; ++d) c[d] = s[d] / counts[l];
    }
  }
  return Codebook::from_entries(std::move(centers), layer);
}

std::vector<Codebook> train_rvq_stages(const Tensor& data, std::size_t stages, std::size_t L,
                                       Rng& rng, const KmeansOptions& opt) {
  std::vector<Codebook> out;
  Tensor residual = data;
  for (std::size_t s = 0; s < stages; ++s) {
    out.push_back(kmeans_codebook(residual, L, static_cast<int>(s + 1), rng, opt));
    residual = vq_quantize(residual, out.back()).residual;
  }
  return out;
}

}  // namespace srcid::quant
