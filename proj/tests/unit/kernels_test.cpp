#include <gtest/gtest.h>

#include <random>

#include "srcid/error.hpp"
#include "srcid/numgrad/kernels.hpp"
#include "srcid/numgrad/nn.hpp"

using namespace srcid;
using numgrad::Tensor;

namespace {

Tensor random(std::size_t r, std::size_t c, std::uint64_t seed) {
  numgrad::Rng rng(seed);
  return numgrad::normal(r, c, 1.0, rng);
}

}  // namespace

TEST(Kernels, ParallelMatmulMatchesSerialBitExactly) {
  const Tensor a = random(97, 41, 1), b = random(41, 33, 2), c = random(97, 33, 3);
  EXPECT_EQ(kernels::matmul(a, b), kernels::serial::matmul(a, b));
  EXPECT_EQ(kernels::matmul_tn(a, c), kernels::serial::matmul_tn(a, c));
  EXPECT_EQ(kernels::matmul_nt(a, random(13, 41, 4)),
            kernels::serial::matmul_nt(a, random(13, 41, 4)));
}

TEST(Kernels, MatmulAgainstNaiveTripleLoop) {
  const Tensor a = random(5, 4, 5), b = random(4, 3, 6);
  const Tensor c = kernels::matmul(a, b);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
      EXPECT_NEAR(c(i, j), s, 1e-12);
    }
}

TEST(Kernels, MatmulShapeErrorNamesBothOperands) {
  try {
    kernels::matmul(Tensor(2, 3), Tensor(4, 2));
    FAIL();
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos);
    EXPECT_NE(msg.find("[4x2]"), std::string::npos);
  }
}

TEST(Kernels, NearestRowsParallelMatchesSerial) {
  const Tensor q = random(300, 8, 7), e = random(64, 8, 8);
  EXPECT_EQ(kernels::nearest_rows(q, e), kernels::serial::nearest_rows(q, e));
}

TEST(Kernels, NearestRowsTieBreaksToLowestIndex) {
  Tensor e(3, 1, std::vector<double>{1.0, -1.0, 1.0});
  Tensor q(1, 1, std::vector<double>{0.0});
  EXPECT_EQ(kernels::nearest_rows(q, e)[0], 0);
}

TEST(Kernels, CosineSimilarityParallelMatchesSerial) {
  const Tensor a = random(50, 6, 9), b = random(70, 6, 10);
  EXPECT_EQ(kernels::cosine_similarity(a, b), kernels::serial::cosine_similarity(a, b));
  const Tensor self = kernels::cosine_similarity(a, a);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_NEAR(self(i, i), 1.0, 1e-12);
}
