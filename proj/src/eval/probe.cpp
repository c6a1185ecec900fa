#include "srcid/eval/probe.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "srcid/error.hpp"
#include "srcid/numgrad/kernels.hpp"

namespace srcid::eval {

namespace {

void softmax_rows(Tensor& s) {
  for (std::size_t r = 0; r < s.rows(); ++r) {
    auto row = s.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double& v : row) z += (v = std::exp(v - mx));
    for (double& v : row) v /= z;
  }
}

Tensor scores(const Tensor& x, const Tensor& w, const Tensor& b) {
  Tensor s = kernels::matmul(x, w);
  for (std::size_t r = 0; r < s.rows(); ++r)
    for (std::size_t c = 0; c < s.cols(); ++c) s(r, c) += b[c];
  return s;
}

}  // namespace

Tensor LogisticProbe::standardize(const Tensor& x) const {
  if (x.cols() != mean_.size()) throw ShapeError("probe: feature width mismatch");
  Tensor out = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = (x(r, c) - mean_[c]) / scale_[c];
  return out;
}

void LogisticProbe::fit(const Tensor& x, std::span<const int> labels, std::size_t num_classes,
                        const ProbeOptions& opt) {
  if (x.rows() != labels.size() || x.rows() == 0) throw ShapeError("probe: rows/labels mismatch");
  if (num_classes < 1) throw ConfigError("probe: num_classes must be >= 1");
  for (int l : labels)
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes) throw ConfigError("probe: label out of range");
  const std::size_t D = x.cols(), C = num_classes;

  // Merge duplicates.
  std::map<std::pair<std::vector<double>, int>, double> groups;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    groups[{std::vector<double>(row.begin(), row.end()), labels[r]}] += 1.0;
  }
  const std::size_t N = groups.size();
  fitted_rows_ = N;
  Tensor xs(N, D);
  std::vector<int> ys(N);
  std::vector<double> wt(N);
  {
    std::size_t i = 0;
    for (const auto& [key, count] : groups) {
      std::copy(key.first.begin(), key.first.end(), xs.row(i).begin());
      ys[i] = key.second;
      wt[i] = count / static_cast<double>(x.rows());
      ++i;
    }
  }
  mean_.assign(D, 0.0);
  scale_.assign(D, 0.0);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t c = 0; c < D; ++c) mean_[c] += wt[i] * xs(i, c);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t c = 0; c < D; ++c) scale_[c] += wt[i] * (xs(i, c) - mean_[c]) * (xs(i, c) - mean_[c]);
  for (double& s : scale_) s = s > 1e-24 ? std::sqrt(s) : 1.0;
  xs = standardize(xs);

  w_ = Tensor(D, C);
  b_ = Tensor(1, C);
  Tensor mw(D, C), vw(D, C), mb(1, C), vb(1, C);
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (std::size_t it = 1; it <= opt.iterations; ++it) {
    Tensor g = scores(xs, w_, b_);
    softmax_rows(g);
    for (std::size_t i = 0; i < N; ++i) {
      g(i, static_cast<std::size_t>(ys[i])) -= 1.0;
      for (std::size_t c = 0; c < C; ++c) g(i, c) *= wt[i];
    }
    Tensor gw = kernels::matmul_tn(xs, g);
    gw.axpy(opt.l2, w_);
    Tensor gb(1, C);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t c = 0; c < C; ++c) gb[c] += g(i, c);
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(it));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(it));
    auto adam = [&](Tensor& p, Tensor& m, Tensor& v, const Tensor& gr) {
      for (std::size_t k = 0; k < p.size(); ++k) {
        m[k] = b1 * m[k] + (1 - b1) * gr[k];
        v[k] = b2 * v[k] + (1 - b2) * gr[k] * gr[k];
        p[k] -= opt.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
      }
    };
    adam(w_, mw, vw, gw);
    adam(b_, mb, vb, gb);
  }
}

std::vector<int> LogisticProbe::predict(const Tensor& x) const {
  if (w_.empty()) throw ConfigError("probe: predict before fit");
  const Tensor s = scores(standardize(x), w_, b_);
  std::vector<int> out(s.rows());
  for (std::size_t r = 0; r < s.rows(); ++r) {
    auto row = s.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double LogisticProbe::accuracy(const Tensor& x, std::span<const int> labels) const {
  const auto p = predict(x);
  return eval::accuracy(p, labels);
}

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
  if (predicted.size() != labels.size()) throw ShapeError("accuracy: length mismatch");
  if (labels.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += predicted[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

}  // namespace srcid::eval
