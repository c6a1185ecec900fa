#include "srcid/numgrad/tensor.hpp"

#include <cmath>
#include <sstream>

#include "srcid/error.hpp"

namespace srcid::numgrad {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    std::ostringstream os;
    os << "tensor data length " << data_.size() << " does not match shape [" << rows << "x" << cols
       << "]";
    throw ShapeError(os.str());
  }
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

std::string Tensor::shape_str() const {
  return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

double Tensor::item() const {
  if (rows_ != 1 || cols_ != 1) throw ShapeError("item() on non-scalar tensor " + shape_str());
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

void Tensor::axpy(double alpha, const Tensor& o) {
  require_same_shape(*this, o, "axpy");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += alpha * o.data_[i];
}

Tensor slice_rows(const Tensor& t, std::size_t begin, std::size_t count) {
  if (begin + count > t.rows())
    throw ShapeError("slice_rows [" + std::to_string(begin) + ", +" + std::to_string(count) +
                     ") out of range for " + t.shape_str());
  std::vector<double> d(t.data() + begin * t.cols(), t.data() + (begin + count) * t.cols());
  return Tensor(count, t.cols(), std::move(d));
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) return {};
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != parts[0].cols())
      throw ShapeError("concat_rows: " + parts[0].shape_str() + " vs " + p.shape_str());
    rows += p.rows();
  }
  std::vector<double> d;
  d.reserve(rows * parts[0].cols());
  for (const auto& p : parts) d.insert(d.end(), p.values().begin(), p.values().end());
  return Tensor(rows, parts[0].cols(), std::move(d));
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) return {};
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != parts[0].rows())
      throw ShapeError("concat_cols: " + parts[0].shape_str() + " vs " + p.shape_str());
    cols += p.cols();
  }
  Tensor out(parts[0].rows(), cols);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      for (std::size_t c = 0; c < p.cols(); ++c) out(r, off + c) = p(r, c);
      off += p.cols();
    }
  }
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double mean_squared_error(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mean_squared_error");
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch between lhs " + a.shape_str() +
                     " and rhs " + b.shape_str());
}

}  // namespace srcid::numgrad
