#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "srcid/error.hpp"
#include "srcid/numgrad/gradcheck.hpp"
#include "srcid/quantize/ema.hpp"
#include "srcid/quantize/kmeans.hpp"
#include "srcid/quantize/quantizers.hpp"

using namespace srcid;
using namespace srcid::quant;
using numgrad::Tensor;

namespace {

Tensor mat(std::size_t r, std::size_t c, std::vector<double> v) { return Tensor(r, c, std::move(v)); }

// Exhaustive nearest-neighbor search, written independently of the kernels.
std::vector<int> brute_force_codes(const Tensor& z, const Tensor& entries) {
  std::vector<int> out;
  for (std::size_t t = 0; t < z.rows(); ++t) {
    std::vector<double> dist;
    for (std::size_t j = 0; j < entries.rows(); ++j) {
      double s = 0;
      for (std::size_t d = 0; d < z.cols(); ++d) s += std::pow(z(t, d) - entries(j, d), 2);
      dist.push_back(s);
    }
    out.push_back(static_cast<int>(std::min_element(dist.begin(), dist.end()) - dist.begin()));
  }
  return out;
}

// Straight-line EMA reference over an explicit code -> vectors map.
Codebook ema_reference(Codebook cb, const std::map<int, std::vector<std::vector<double>>>& assigned,
                       double count_scale = 1.0) {
  const double g = cb.decay, eps = cb.laplace;
  const std::size_t L = cb.size(), D = cb.dim();
  for (std::size_t l = 0; l < L; ++l) {
    double n = 0;
    std::vector<double> s(D, 0.0);
    auto it = assigned.find(static_cast<int>(l));
    if (it != assigned.end()) {
      n = static_cast<double>(it->second.size()) * count_scale;
      for (const auto& v : it->second)
        for (std::size_t d = 0; d < D; ++d) s[d] += v[d] * count_scale;
    }
    cb.ema_counts[l] = g * cb.ema_counts[l] + (1 - g) * n;
    for (std::size_t d = 0; d < D; ++d) cb.ema_sums(l, d) = g * cb.ema_sums(l, d) + (1 - g) * s[d];
  }
  double N = 0;
  for (double c : cb.ema_counts) N += c;
  for (std::size_t l = 0; l < L; ++l) {
    const double sm = (cb.ema_counts[l] + eps) / (N + L * eps) * N;
    for (std::size_t d = 0; d < D; ++d) cb.entries(l, d) = cb.ema_sums(l, d) / sm;
  }
  return cb;
}

Assignment random_assignment(std::size_t n, std::size_t L, std::size_t D, Rng& rng) {
  Assignment a;
  std::uniform_int_distribution<int> code(0, static_cast<int>(L) - 1);
  for (std::size_t i = 0; i < n; ++i) a.codes.push_back(code(rng));
  a.vectors = numgrad::normal(n, D, 1.0, rng);
  return a;
}

std::map<int, std::vector<std::vector<double>>> as_map(const Assignment& a) {
  std::map<int, std::vector<std::vector<double>>> m;
  for (std::size_t r = 0; r < a.codes.size(); ++r) {
    const auto row = a.vectors.row(r);
    m[a.codes[r]].emplace_back(row.begin(), row.end());
  }
  return m;
}

}  // namespace

TEST(Vq, ObviousNearestNeighbor) {
  auto cb = Codebook::from_entries(mat(2, 2, {1, 0, 0, 1}), 1);
  auto r = vq_quantize(mat(1, 2, {0.9, 0.1}), cb);
  EXPECT_EQ(r.codes[0][0], 0);
  EXPECT_EQ(r.quantized, mat(1, 2, {1, 0}));
}

TEST(Vq, ExactEntryHasZeroError) {
  Rng rng(1);
  auto cb = Codebook::random(10, 3, 1, 1.0, rng);
  const Tensor z = slice_rows(cb.entries, 7, 1);
  auto r = vq_quantize(z, cb);
  EXPECT_EQ(r.codes[0][0], 7);
  EXPECT_EQ(r.quantization_mse, 0.0);
  EXPECT_EQ(r.commitment_loss, 0.0);
}

TEST(Vq, MatchesExhaustiveSearchOracle) {
  Rng rng(2);
  auto cb = Codebook::random(400, 16, 1, 1.0, rng);
  const Tensor z = numgrad::normal(64, 16, 1.0, rng);
  auto r = vq_quantize(z, cb);
  EXPECT_EQ(r.codes[0], brute_force_codes(z, cb.entries));
  for (std::size_t t = 0; t < 64; ++t)
    for (std::size_t d = 0; d < 16; ++d)
      EXPECT_EQ(r.quantized(t, d), cb.entries(static_cast<std::size_t>(r.codes[0][t]), d));
  EXPECT_DOUBLE_EQ(r.quantization_mse, numgrad::mean_squared_error(z, r.quantized));
}

TEST(Vq, Errors) {
  Rng rng(3);
  auto cb = Codebook::random(4, 3, 1, 1.0, rng);
  EXPECT_THROW(vq_quantize(Tensor(2, 4), cb), ShapeError);
  Codebook empty;
  EXPECT_THROW(vq_quantize(Tensor(2, 4), empty), ShapeError);
}

TEST(Rvq, TwoStageExampleMatchesJointBruteForce) {
  std::vector<Codebook> stages{Codebook::from_entries(mat(2, 2, {1, 0, 0, 1}), 1),
                               Codebook::from_entries(mat(2, 2, {-0.1, 0.1, 0, 0}), 2)};
  const Tensor z = mat(1, 2, {0.9, 0.1});
  auto r = rvq_quantize(z, stages);
  EXPECT_EQ(r.codes[0][0], 0);
  EXPECT_EQ(r.codes[1][0], 0);
  EXPECT_NEAR(r.quantized(0, 0), 0.9, 1e-15);
  EXPECT_NEAR(r.quantized(0, 1), 0.1, 1e-15);
  EXPECT_NEAR(r.residual(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(r.residual(0, 1), 0.0, 1e-15);
  // Joint search over every (code1, code2) pair finds the same pair.
  double best = 1e300;
  std::pair<int, int> arg{-1, -1};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double s = 0;
      for (std::size_t d = 0; d < 2; ++d) {
        const double q = stages[0].entries(static_cast<std::size_t>(a), d) +
                         stages[1].entries(static_cast<std::size_t>(b), d);
        s += (z(0, d) - q) * (z(0, d) - q);
      }
      if (s < best) best = s, arg = {a, b};
    }
  EXPECT_EQ(arg, std::make_pair(0, 0));
}

TEST(Rvq, SingleStageEqualsVq) {
  Rng rng(4);
  auto cb = Codebook::random(32, 5, 1, 1.0, rng);
  const Tensor z = numgrad::normal(40, 5, 1.0, rng);
  auto a = rvq_quantize(z, std::span(&cb, 1));
  auto b = vq_quantize(z, cb);
  EXPECT_EQ(a.codes, b.codes);
  EXPECT_EQ(a.quantized, b.quantized);
  EXPECT_EQ(a.residual, b.residual);
  EXPECT_EQ(a.quantization_mse, b.quantization_mse);
}

TEST(Rvq, ErrorNonincreasingWithZeroContainingStages) {
  Rng rng(5);
  const Tensor z = numgrad::normal(200, 6, 1.0, rng);
  auto stages = train_rvq_stages(z, 4, 16, rng, {.iterations = 10, .include_zero = true});
  double prev = 1e300;
  for (std::size_t k = 1; k <= 4; ++k) {
    const double mse = rvq_quantize(z, std::span(stages.data(), k)).quantization_mse;
    EXPECT_LE(mse, prev + 1e-9);
    prev = mse;
  }
  for (const auto& s : stages)
    for (std::size_t d = 0; d < 6; ++d) EXPECT_EQ(s.entries(0, d), 0.0);
}

TEST(Fsq, CenterCode) {
  FsqSpec spec{{5}};
  auto r = fsq_quantize(Tensor(1, 1, 0.0), spec);
  EXPECT_EQ(r.quantized(0, 0), 0.0);
  EXPECT_EQ(r.codes[0][0], 2);
}

TEST(Fsq, ImplicitCodebookSize) {
  EXPECT_EQ((FsqSpec{{5, 3}}).codebook_size(), 15u);
  EXPECT_EQ((FsqSpec{{5, 5, 5, 5}}).codebook_size(), 625u);
}

TEST(Fsq, IdempotentAndBounded) {
  Rng rng(6);
  FsqSpec spec{{5, 3, 5, 3}};
  const Tensor z = numgrad::normal(500, 4, 2.0, rng);
  auto once = fsq_quantize(z, spec);
  auto twice = fsq_quantize(once.quantized, spec);
  EXPECT_EQ(once.quantized, twice.quantized);
  EXPECT_EQ(once.codes, twice.codes);
  for (double v : once.quantized.values()) EXPECT_LE(std::abs(v), 1.0);
  for (std::size_t t = 0; t < 500; ++t) {
    auto dec = fsq_decode(static_cast<std::size_t>(once.codes[0][t]), spec);
    for (std::size_t d = 0; d < 4; ++d) EXPECT_EQ(dec[d], once.quantized(t, d));
  }
}

TEST(Fsq, RejectsEvenOrSmallLevels) {
  EXPECT_THROW(fsq_quantize(Tensor(1, 1), FsqSpec{{4}}), ConfigError);
  EXPECT_THROW(fsq_quantize(Tensor(1, 1), FsqSpec{{1}}), ConfigError);
  EXPECT_THROW(fsq_quantize(Tensor(1, 2), FsqSpec{{5}}), ShapeError);
}

TEST(Ema, HandArithmetic) {
  auto cb = Codebook::from_entries(mat(1, 2, {0, 0}), 1);
  cb.decay = 0.99;
  ema_update(cb, Assignment{{0, 0}, mat(2, 2, {1, 0, 1, 2})});
  EXPECT_NEAR(cb.ema_counts[0], 1.01, 1e-15);
  EXPECT_NEAR(cb.ema_sums(0, 0), 0.02, 1e-15);
  EXPECT_NEAR(cb.ema_sums(0, 1), 0.02, 1e-15);
}

TEST(Ema, EmptyAssignmentOnlyRenormalizes) {
  Rng rng(7);
  auto cb = Codebook::random(8, 3, 1, 1.0, rng);
  const Tensor before = cb.entries;
  ema_update(cb, Assignment{{}, Tensor(0, 3)});
  // Counts and sums decay together, so only the smoothing factor moves entries.
  EXPECT_LT(numgrad::max_abs_diff(before, cb.entries), 1e-4);
}

TEST(Ema, MatchesStraightLineReference) {
  Rng rng(8);
  auto cb = Codebook::random(12, 4, 1, 1.0, rng);
  for (int batch = 0; batch < 20; ++batch) {
    auto a = random_assignment(30, 12, 4, rng);
    const Codebook expected = ema_reference(cb, as_map(a));
    ema_update(cb, a);
    EXPECT_LT(numgrad::max_abs_diff(cb.entries, expected.entries), 1e-12);
    EXPECT_LT(numgrad::max_abs_diff(cb.ema_sums, expected.ema_sums), 1e-12);
  }
}

TEST(Ema, DecayOneFreezes) {
  Rng rng(9);
  auto cb = Codebook::random(6, 2, 1, 1.0, rng);
  cb.decay = 1.0;
  const Codebook before = cb;
  ema_update(cb, random_assignment(10, 6, 2, rng));
  EXPECT_TRUE(cb == before);
}

TEST(Mmema, SingleModalityIsBitIdenticalToEma) {
  Rng rng(10);
  auto a = Codebook::random(16, 4, 1, 1.0, rng);
  auto b = a;
  const auto asg = random_assignment(50, 16, 4, rng);
  ema_update(a, asg);
  const double w = 1.0;
  mmema_update(b, std::span(&asg, 1), std::span(&w, 1));
  EXPECT_TRUE(a == b);
}

TEST(Mmema, DuplicatedModalitiesEqualSingle) {
  Rng rng(11);
  auto a = Codebook::random(16, 4, 1, 1.0, rng);
  auto b = a;
  const auto asg = random_assignment(50, 16, 4, rng);
  ema_update(a, asg);
  std::vector<Assignment> two{asg, asg};
  std::vector<double> w{0.5, 0.5};
  mmema_update(b, two, w);
  EXPECT_LT(numgrad::max_abs_diff(a.entries, b.entries), 1e-12);
}

TEST(Mmema, ThreeModalitiesMatchWeightedUnionOracle) {
  Rng rng(12);
  auto cb = Codebook::random(10, 3, 1, 1.0, rng);
  std::vector<Assignment> mods;
  for (int m = 0; m < 3; ++m) mods.push_back(random_assignment(25, 10, 3, rng));
  const std::vector<double> w(3, 1.0 / 3.0);
  // Weighted union: every vector counts with its modality weight.
  Codebook expected = cb;
  {
    const double g = cb.decay, eps = cb.laplace;
    std::vector<double> n(10, 0.0);
    Tensor s(10, 3);
    for (int m = 0; m < 3; ++m)
      for (std::size_t r = 0; r < 25; ++r) {
        const auto l = static_cast<std::size_t>(mods[m].codes[r]);
        n[l] += w[m];
        for (std::size_t d = 0; d < 3; ++d) s(l, d) += w[m] * mods[m].vectors(r, d);
      }
    double N = 0;
    for (std::size_t l = 0; l < 10; ++l) {
      expected.ema_counts[l] = g * expected.ema_counts[l] + (1 - g) * n[l];
      N += expected.ema_counts[l];
      for (std::size_t d = 0; d < 3; ++d)
        expected.ema_sums(l, d) = g * expected.ema_sums(l, d) + (1 - g) * s(l, d);
    }
    for (std::size_t l = 0; l < 10; ++l)
      for (std::size_t d = 0; d < 3; ++d)
        expected.entries(l, d) =
            expected.ema_sums(l, d) / ((expected.ema_counts[l] + eps) / (N + 10 * eps) * N);
  }
  mmema_update(cb, mods, w);
  EXPECT_LT(numgrad::max_abs_diff(cb.entries, expected.entries), 1e-12);
}

TEST(Mmema, WeightSumMustBeOne) {
  Rng rng(13);
  auto cb = Codebook::random(4, 2, 1, 1.0, rng);
  std::vector<Assignment> mods{random_assignment(3, 4, 2, rng), random_assignment(3, 4, 2, rng)};
  std::vector<double> bad{0.5, 0.6};
  EXPECT_THROW(mmema_update(cb, mods, bad), ConfigError);
}

TEST(Commitment, Values) {
  const Tensor z = mat(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(commitment_loss(z, z), 0.0);
  Tensor q = z;
  for (double& v : q.values()) v -= 1.0;
  EXPECT_DOUBLE_EQ(commitment_loss(z, q), 0.25);
  Rng rng(14);
  const Tensor a = numgrad::normal(5, 4, 1.0, rng), b = numgrad::normal(5, 4, 1.0, rng);
  double manual = 0;
  for (std::size_t i = 0; i < a.size(); ++i) manual += (a[i] - b[i]) * (a[i] - b[i]);
  EXPECT_NEAR(commitment_loss(a, b), 0.25 * manual / 20.0, 1e-14);
}

TEST(Commitment, GradientReachesZOnlyAndMatchesFiniteDifferences) {
  Rng rng(15);
  numgrad::ParamStore ps;
  ps.add("z", numgrad::normal(4, 3, 1.0, rng));
  auto cb = Codebook::random(6, 3, 1, 1.0, rng);
  numgrad::Graph g = [&cb](numgrad::Tape& t, std::span<const numgrad::Var>,
                           numgrad::ParamStore& p) {
    numgrad::Var z = t.param(p, "z");
    auto r = vq_quantize(z.value(), cb);
    numgrad::Var zq = numgrad::straight_through(z, r.quantized);
    return numgrad::mean(numgrad::square(zq)) + commitment_loss(z, r.quantized);
  };
  auto rep = numgrad::finite_diff_check(g, {}, ps);
  EXPECT_LT(rep.max_rel_error, 1e-4);
}

TEST(Perplexity, Values) {
  std::vector<int> same(10, 3);
  EXPECT_DOUBLE_EQ(codebook_perplexity(same, 8), 1.0);
  std::vector<int> uniform(400);
  for (int i = 0; i < 400; ++i) uniform[static_cast<std::size_t>(i)] = i;
  EXPECT_NEAR(codebook_perplexity(uniform, 400), 400.0, 1e-9);
  std::vector<int> h{0, 0, 1, 2};
  EXPECT_NEAR(codebook_perplexity(h, 3), std::exp(1.5 * std::log(2.0)), 1e-12);
  EXPECT_THROW(codebook_perplexity(std::vector<int>{}, 3), ShapeError);
}

TEST(Codebook, FileRoundTrip) {
  Rng rng(16);
  auto cb = Codebook::random(7, 3, 2, 1.0, rng);
  ema_update(cb, random_assignment(20, 7, 3, rng));
  std::stringstream ss;
  save_codebook(ss, cb);
  EXPECT_TRUE(load_codebook(ss) == cb);
  std::stringstream bad("XXXX");
  EXPECT_THROW(load_codebook(bad), FormatError);
}

TEST(Codebook, DeadCodeReseed) {
  Rng rng(17);
  auto cb = Codebook::random(5, 2, 1, 1.0, rng);
  cb.ema_counts[3] = 1e-4;
  const Tensor cand = mat(1, 2, {7, 8});
  EXPECT_EQ(reseed_dead_codes(cb, cand, rng), 1u);
  EXPECT_EQ(cb.entries(3, 0), 7.0);
  EXPECT_EQ(cb.ema_counts[3], 1.0);
}
