#include "srcid/numgrad/kernels.hpp"

#include <cmath>
#include <limits>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "srcid/error.hpp"

namespace srcid::kernels {
namespace {

void check_inner(std::size_t lhs, std::size_t rhs, const char* op, const Tensor& a,
                 const Tensor& b) {
  if (lhs != rhs)
    throw ShapeError(std::string(op) + ": inner dimensions differ, lhs " + a.shape_str() +
                     " rhs " + b.shape_str());
}

// One output row of a*b.
inline void matmul_row(const Tensor& a, const Tensor& b, Tensor& c, std::size_t i) {
  const std::size_t k_dim = a.cols(), n = b.cols();
  double* ci = c.data() + i * n;
  const double* ai = a.data() + i * k_dim;
  for (std::size_t k = 0; k < k_dim; ++k) {
    const double aik = ai[k];
    const double* bk = b.data() + k * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
  }
}

inline void matmul_tn_row(const Tensor& a, const Tensor& b, Tensor& c, std::size_t i) {
  const std::size_t rows = a.rows(), p = a.cols(), n = b.cols();
  double* ci = c.data() + i * n;
  for (std::size_t k = 0; k < rows; ++k) {
    const double aki = a.data()[k * p + i];
    const double* bk = b.data() + k * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
  }
}

inline void matmul_nt_row(const Tensor& a, const Tensor& b, Tensor& c, std::size_t i) {
  const std::size_t k_dim = a.cols(), n = b.rows();
  const double* ai = a.data() + i * k_dim;
  double* ci = c.data() + i * n;
  for (std::size_t j = 0; j < n; ++j) {
    const double* bj = b.data() + j * k_dim;
    double s = 0.0;
    for (std::size_t k = 0; k < k_dim; ++k) s += ai[k] * bj[k];
    ci[j] = s;
  }
}

inline int nearest_one(const Tensor& q, const Tensor& e, std::size_t i) {
  const std::size_t d = q.cols();
  const double* qi = q.data() + i * d;
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < e.rows(); ++j) {
    const double* ej = e.data() + j * d;
    double dist = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = qi[k] - ej[k];
      dist += diff * diff;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<int>(j);
    }
  }
  return best;
}

std::vector<double> row_norms(const Tensor& t) {
  std::vector<double> n(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) {
    double s = 0.0;
    for (double v : t.row(i)) s += v * v;
    n[i] = std::sqrt(s);
  }
  return n;
}

inline void cosine_row(const Tensor& a, const Tensor& b, const std::vector<double>& na,
                       const std::vector<double>& nb, Tensor& out, std::size_t i) {
  const std::size_t d = a.cols();
  for (std::size_t j = 0; j < b.rows(); ++j) {
    double dot = 0.0;
    for (std::size_t k = 0; k < d; ++k) dot += a(i, k) * b(j, k);
    const double denom = na[i] * nb[j];
    out(i, j) = denom > 0.0 ? dot / denom : 0.0;
  }
}

void check_nearest(const Tensor& queries, const Tensor& entries) {
  if (entries.rows() == 0) throw ShapeError("nearest_rows: empty codebook");
  check_inner(queries.cols(), entries.cols(), "nearest_rows", queries, entries);
}

}  // namespace

namespace serial {

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_inner(a.cols(), b.rows(), "matmul", a, b);
  Tensor c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) matmul_row(a, b, c, i);
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  check_inner(a.rows(), b.rows(), "matmul_tn", a, b);
  Tensor c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) matmul_tn_row(a, b, c, i);
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check_inner(a.cols(), b.cols(), "matmul_nt", a, b);
  Tensor c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) matmul_nt_row(a, b, c, i);
  return c;
}

std::vector<int> nearest_rows(const Tensor& queries, const Tensor& entries) {
  check_nearest(queries, entries);
  std::vector<int> out(queries.rows());
  for (std::size_t i = 0; i < queries.rows(); ++i) out[i] = nearest_one(queries, entries, i);
  return out;
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  check_inner(a.cols(), b.cols(), "cosine_similarity", a, b);
  const auto na = row_norms(a), nb = row_norms(b);
  Tensor out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) cosine_row(a, b, na, nb, out, i);
  return out;
}

}  // namespace serial

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_inner(a.cols(), b.rows(), "matmul", a, b);
  Tensor c(a.rows(), b.cols());
  const auto n = static_cast<long>(a.rows());
#pragma omp parallel for schedule(static) if (n * static_cast<long>(a.cols() * b.cols()) > 32768)
  for (long i = 0; i < n; ++i) matmul_row(a, b, c, static_cast<std::size_t>(i));
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  check_inner(a.rows(), b.rows(), "matmul_tn", a, b);
  Tensor c(a.cols(), b.cols());
  const auto n = static_cast<long>(a.cols());
#pragma omp parallel for schedule(static) if (n * static_cast<long>(a.rows() * b.cols()) > 32768)
  for (long i = 0; i < n; ++i) matmul_tn_row(a, b, c, static_cast<std::size_t>(i));
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check_inner(a.cols(), b.cols(), "matmul_nt", a, b);
  Tensor c(a.rows(), b.rows());
  const auto n = static_cast<long>(a.rows());
#pragma omp parallel for schedule(static) if (n * static_cast<long>(a.cols() * b.rows()) > 32768)
  for (long i = 0; i < n; ++i) matmul_nt_row(a, b, c, static_cast<std::size_t>(i));
  return c;
}

std::vector<int> nearest_rows(const Tensor& queries, const Tensor& entries) {
  check_nearest(queries, entries);
  std::vector<int> out(queries.rows());
  const auto n = static_cast<long>(queries.rows());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = nearest_one(queries, entries, static_cast<std::size_t>(i));
  return out;
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  check_inner(a.cols(), b.cols(), "cosine_similarity", a, b);
  const auto na = row_norms(a), nb = row_norms(b);
  Tensor out(a.rows(), b.rows());
  const auto n = static_cast<long>(a.rows());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) cosine_row(a, b, na, nb, out, static_cast<std::size_t>(i));
  return out;
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace srcid::kernels
