#include <gtest/gtest.h>

#include <cmath>

#include "srcid/error.hpp"
#include "srcid/numgrad/gradcheck.hpp"
#include "srcid/numgrad/nn.hpp"
#include "srcid/numgrad/optim.hpp"

using namespace srcid;
using namespace srcid::numgrad;

namespace {

Tensor vec(std::vector<double> v) {
  const auto n = v.size();
  return Tensor(1, n, std::move(v));
}

}  // namespace

TEST(ForwardEval, IdentityGraph) {
  ParamStore ps;
  const Tensor v = vec({1.0, -2.0, 3.5});
  Graph g = [](Tape&, std::span<const Var> in, ParamStore&) { return in[0]; };
  EXPECT_EQ(forward_eval(g, std::span(&v, 1), ps), v);
}

TEST(ForwardEval, MatmulIdentity) {
  ParamStore ps;
  std::vector<Tensor> in{Tensor::identity(3), Tensor(3, 1, std::vector<double>{4, 5, 6})};
  Graph g = [](Tape&, std::span<const Var> x, ParamStore&) { return matmul(x[0], x[1]); };
  EXPECT_EQ(forward_eval(g, in, ps), in[1]);
}

TEST(ForwardEval, TanhOfZero) {
  ParamStore ps;
  const Tensor z(2, 3);
  Graph g = [](Tape&, std::span<const Var> x, ParamStore&) { return tanh(x[0]); };
  EXPECT_EQ(forward_eval(g, std::span(&z, 1), ps), z);
}

TEST(ForwardEval, ShapeMismatchNamesOperands) {
  ParamStore ps;
  std::vector<Tensor> in{Tensor(2, 2), Tensor(3, 2)};
  Graph g = [](Tape&, std::span<const Var> x, ParamStore&) { return add(x[0], x[1]); };
  try {
    forward_eval(g, in, ps);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("[2x2]"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("[3x2]"), std::string::npos);
  }
}

TEST(Backward, SquareGradient) {
  ParamStore ps;
  ps.add("w", Tensor::scalar(3.0));
  Graph g = [](Tape& t, std::span<const Var>, ParamStore& p) { return square(t.param(p, "w")); };
  EXPECT_DOUBLE_EQ(backward(g, {}, ps), 9.0);
  EXPECT_DOUBLE_EQ(ps.grad("w").item(), 6.0);
}

TEST(Backward, StopGradientBlocksOneFactor) {
  ParamStore ps;
  ps.add("w", Tensor::scalar(3.0));
  Graph g = [](Tape& t, std::span<const Var>, ParamStore& p) {
    Var w = t.param(p, "w");
    return mul(stop_gradient(w), w);
  };
  EXPECT_DOUBLE_EQ(backward(g, {}, ps), 9.0);
  EXPECT_DOUBLE_EQ(ps.grad("w").item(), 3.0);
}

TEST(Backward, NonScalarLossIsAnError) {
  ParamStore ps;
  ps.add("w", Tensor(2, 2, 1.0));
  Graph g = [](Tape& t, std::span<const Var>, ParamStore& p) { return t.param(p, "w"); };
  EXPECT_THROW(backward(g, {}, ps), ShapeError);
}

TEST(Backward, StraightThroughPassesGradientUnchanged) {
  ParamStore ps;
  ps.add("z", Tensor(1, 2, std::vector<double>{0.3, -0.7}));
  const Tensor q(1, 2, std::vector<double>{1.0, -1.0});
  Graph g = [&q](Tape& t, std::span<const Var>, ParamStore& p) {
    Var zq = straight_through(t.param(p, "z"), q);
    return sum(mul(zq, zq));
  };
  backward(g, {}, ps);
  // d/dz sum(zq^2) = 2 zq (identity through the quantizer)
  EXPECT_DOUBLE_EQ(ps.grad("z")[0], 2.0);
  EXPECT_DOUBLE_EQ(ps.grad("z")[1], -2.0);
  auto rep = finite_diff_check(g, {}, ps);
  EXPECT_LT(rep.max_rel_error, 1e-6);
}

TEST(Backward, StraightThroughForwardValueIsExact) {
  Tape t;
  Var z = t.constant(Tensor(1, 1, 0.1));
  const Tensor q(1, 1, 0.7);
  EXPECT_EQ(straight_through(z, q).value(), q);
}

TEST(FiniteDiff, LinearGraphIsExact) {
  Rng rng(11);
  ParamStore ps;
  ps.add("w", normal(4, 3, 1.0, rng));
  const Tensor x = normal(5, 4, 1.0, rng);
  Graph g = [](Tape& t, std::span<const Var> in, ParamStore& p) {
    return sum(matmul(in[0], t.param(p, "w")));
  };
  auto rep = finite_diff_check(g, std::span(&x, 1), ps);
  EXPECT_EQ(rep.coords_checked, 12u);
  EXPECT_LT(rep.max_rel_error, 1e-8);
}

TEST(FiniteDiff, TanhMlp) {
  Rng rng(12);
  ParamStore ps;
  Mlp mlp("m", 4, 6, 3);
  mlp.init(ps, rng);
  const Tensor x = normal(7, 4, 1.0, rng);
  Graph g = [&mlp](Tape& t, std::span<const Var> in, ParamStore& p) {
    return mean(square(mlp.forward(t, p, in[0])));
  };
  auto rep = finite_diff_check(g, std::span(&x, 1), ps);
  EXPECT_LT(rep.max_rel_error, 1e-4) << rep.worst_param << "[" << rep.worst_index << "]";
}

TEST(FiniteDiff, StopGradientSurrogate) {
  Rng rng(13);
  ParamStore ps;
  ps.add("w", normal(3, 3, 1.0, rng));
  const Tensor x = normal(4, 3, 1.0, rng);
  Graph g = [](Tape& t, std::span<const Var> in, ParamStore& p) {
    Var y = matmul(in[0], t.param(p, "w"));
    return mean(square(y - stop_gradient(tanh(y))));
  };
  auto rep = finite_diff_check(g, std::span(&x, 1), ps);
  EXPECT_LT(rep.max_rel_error, 1e-4);
}

TEST(FiniteDiff, EveryOpComposite) {
  Rng rng(14);
  ParamStore ps;
  ps.add("a", normal(6, 4, 0.5, rng));
  ps.add("b", normal(4, 5, 0.5, rng));
  ps.add("r", normal(1, 5, 0.5, rng));
  ps.add("c", normal(6, 5, 0.5, rng));
  Graph g = [](Tape& t, std::span<const Var>, ParamStore& p) {
    Var a = t.param(p, "a"), b = t.param(p, "b"), r = t.param(p, "r"), c = t.param(p, "c");
    Var h = add_row(matmul(a, b), r);
    Var s = sigmoid(h) * exp(scale(c, 0.3)) + relu(h + add_scalar(c, 0.1));
    Var lg = log(add_scalar(square(s), 1.0));
    Var cat = concat_cols(std::vector<Var>{slice_cols(lg, 1, 3), slice_cols(s, 0, 2)});
    Var bm = block_mean(cat, 3);
    Var logits = matmul_nt(slice_rows(bm - cat, 0, 4), slice_rows(tanh(cat), 2, 4));
    std::vector<int> labels{0, 1, 2, 3};
    return add(softmax_xent(logits, labels), mean(row_sum(sub(bm, -cat))));
  };
  auto rep = finite_diff_check(g, {}, ps);
  EXPECT_LT(rep.max_rel_error, 1e-4) << rep.worst_param << "[" << rep.worst_index << "] "
                                     << rep.worst_analytic << " vs " << rep.worst_numeric;
}

TEST(FiniteDiff, SampledCoordinates) {
  Rng rng(15);
  ParamStore ps;
  ps.add("w", normal(20, 20, 1.0, rng));
  Graph g = [](Tape& t, std::span<const Var>, ParamStore& p) {
    return sum(square(t.param(p, "w")));
  };
  auto rep = finite_diff_check(g, {}, ps, 1e-5, 16);
  EXPECT_EQ(rep.coords_checked, 16u);
  EXPECT_THROW(finite_diff_check(g, {}, ps, 0.0), ConfigError);
}

TEST(Determinism, RepeatedRunsAreBitIdentical) {
  auto run = [] {
    Rng rng(99);
    ParamStore ps;
    Mlp mlp("m", 3, 5, 2);
    mlp.init(ps, rng);
    const Tensor x = normal(4, 3, 1.0, rng);
    Graph g = [&mlp](Tape& t, std::span<const Var> in, ParamStore& p) {
      return mean(square(mlp.forward(t, p, in[0])));
    };
    backward(g, std::span(&x, 1), ps);
    return ps;
  };
  ParamStore a = run(), b = run();
  for (auto ea = a.begin(), eb = b.begin(); ea != a.end(); ++ea, ++eb)
    EXPECT_EQ((*ea)->grad, (*eb)->grad);
}

TEST(ParamStore, ZeroGrads) {
  ParamStore ps;
  ps.add("w", Tensor(2, 2, 1.0));
  ps.entry("w").grad.fill(5.0);
  ps.zero_grads();
  EXPECT_EQ(ps.grad("w"), Tensor(2, 2, 0.0));
  EXPECT_THROW(ps.add("w", Tensor(1, 1)), ConfigError);
}

TEST(Optimizer, ZeroLearningRateLeavesParamsUnchanged) {
  for (auto kind : {OptimizerKind::kSgd, OptimizerKind::kAdam}) {
    ParamStore ps;
    ps.add("w", Tensor(2, 2, 1.5));
    ps.entry("w").grad.fill(0.3);
    Optimizer opt(kind, 0.0);
    opt.step(ps);
    EXPECT_EQ(ps.value("w"), Tensor(2, 2, 1.5));
  }
}

TEST(Optimizer, SgdStep) {
  ParamStore ps;
  ps.add("w", Tensor::scalar(1.0));
  ps.entry("w").grad.fill(2.0);
  Optimizer opt(OptimizerKind::kSgd, 0.1);
  opt.step(ps);
  EXPECT_DOUBLE_EQ(ps.value("w").item(), 0.8);
}
