#include "srcid/quantize/quantizers.hpp"

#include <cmath>
#include <string>

#include "srcid/error.hpp"
#include "srcid/numgrad/kernels.hpp"

namespace srcid::quant {
namespace {

void check_dims(const Tensor& z, const Codebook& cb) {
  if (cb.size() == 0) throw ShapeError("quantize: empty codebook");
  if (z.cols() != cb.dim())
    throw ShapeError("quantize: input " + z.shape_str() + " vs codebook " + cb.entries.shape_str());
}

void finish(QuantizationResult& r, const Tensor& z, double beta) {
  r.residual = z;
  r.residual.axpy(-1.0, r.quantized);
  r.quantization_mse = numgrad::mean_squared_error(z, r.quantized);
  r.commitment_loss = beta * r.quantization_mse;
}

}  // namespace

QuantizationResult vq_quantize(const Tensor& z, const Codebook& cb, double beta) {
  check_dims(z, cb);
  QuantizationResult r;
  r.codes.push_back(kernels::nearest_rows(z, cb.entries));
  r.quantized = Tensor(z.rows(), z.cols());
  for (std::size_t t = 0; t < z.rows(); ++t) {
    const auto src = cb.entries.row(static_cast<std::size_t>(r.codes[0][t]));
    std::copy(src.begin(), src.end(), r.quantized.row(t).begin());
  }
  finish(r, z, beta);
  return r;
}

QuantizationResult rvq_quantize(const Tensor& z, std::span<const Codebook> stages, double beta) {
  if (stages.empty()) throw ShapeError("rvq_quantize: at least one stage required");
  for (const auto& cb : stages) check_dims(z, cb);
  QuantizationResult r;
  r.quantized = Tensor(z.rows(), z.cols());
  Tensor residual = z;
  for (const auto& cb : stages) {
    auto codes = kernels::nearest_rows(residual, cb.entries);
    for (std::size_t t = 0; t < z.rows(); ++t) {
      const auto e = cb.entries.row(static_cast<std::size_t>(codes[t]));
      auto q = r.quantized.row(t);
      auto res = residual.row(t);
      for (std::size_t d = 0; d < z.cols(); ++d) {
        q[d] += e[d];
        res[d] -= e[d];
      }
    }
    r.codes.push_back(std::move(codes));
  }
  r.quantization_mse = numgrad::mean_squared_error(z, r.quantized);
  r.commitment_loss = beta * r.quantization_mse;
  r.residual = std::move(residual);
  return r;
}

void FsqSpec::validate() const {
  if (levels.empty()) throw ConfigError("fsq: at least one level required");
  for (int l : levels)
    if (l < 3 || l % 2 == 0)
      throw ConfigError("fsq: level count " + std::to_string(l) + " must be odd and >= 3");
}

std::size_t FsqSpec::codebook_size() const {
  std::size_t n = 1;
  for (int l : levels) n *= static_cast<std::size_t>(l);
  return n;
}

QuantizationResult fsq_quantize(const Tensor& z, const FsqSpec& spec) {
  spec.validate();
  if (z.cols() != spec.dim())
    throw ShapeError("fsq_quantize: input " + z.shape_str() + " vs " +
                     std::to_string(spec.dim()) + " levels");
  QuantizationResult r;
  r.codes.emplace_back(z.rows());
  r.quantized = Tensor(z.rows(), z.cols());
  for (std::size_t t = 0; t < z.rows(); ++t) {
    std::size_t code = 0, radix = 1;
    for (std::size_t d = 0; d < z.cols(); ++d) {
      const int h = spec.levels[d] / 2;
      const double q = std::round(h * std::tanh(z(t, d)));
      r.quantized(t, d) = q / h;
      code += static_cast<std::size_t>(q + h) * radix;
      radix *= static_cast<std::size_t>(spec.levels[d]);
    }
    r.codes[0][t] = static_cast<int>(code);
  }
  finish(r, z, 0.0);
  return r;
}

std::vector<double> fsq_decode(std::size_t code, const FsqSpec& spec) {
  spec.validate();
  std::vector<double> v(spec.dim());
  for (std::size_t d = 0; d < spec.dim(); ++d) {
    const auto l = static_cast<std::size_t>(spec.levels[d]);
    const int h = spec.levels[d] / 2;
    v[d] = static_cast<double>(static_cast<int>(code % l) - h) / h;
    code /= l;
  }
  return v;
}

numgrad::Var commitment_loss(numgrad::Var z, const Tensor& quantized, double beta) {
  numgrad::Var q = numgrad::stop_gradient(z.tape->constant(quantized));
  return numgrad::scale(numgrad::mean(numgrad::square(z - q)), beta);
}

double commitment_loss(const Tensor& z, const Tensor& quantized, double beta) {
  return beta * numgrad::mean_squared_error(z, quantized);
}

std::vector<double> code_histogram(std::span<const int> codes, std::size_t L) {
  std::vector<double> h(L, 0.0);
  for (int c : codes) {
    if (c < 0 || static_cast<std::size_t>(c) >= L)
      throw ShapeError("code " + std::to_string(c) + " outside [0, " + std::to_string(L) + ")");
    h[static_cast<std::size_t>(c)] += 1.0;
  }
  for (double& v : h) v /= static_cast<double>(codes.size());
  return h;
}

double codebook_perplexity(std::span<const int> codes, std::size_t L) {
  if (codes.empty()) throw ShapeError("codebook_perplexity: no codes");
  double entropy = 0.0;
  for (double p : code_histogram(codes, L))
    if (p > 0.0) entropy -= p * std::log(p);
  return std::exp(entropy);
}

}  // namespace srcid::quant
