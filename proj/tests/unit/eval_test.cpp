#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "srcid/error.hpp"
#include "srcid/eval/harness.hpp"
#include "srcid/model/trainer.hpp"

using namespace srcid;
using namespace srcid::eval;
using model::CodeMode;
using model::Config;
using model::SrcidModel;

namespace {

synth::Dataset make_dataset(const Config& c) {
  auto ds = synth::generate(c.data.spec, c.data.samples);
  synth::split(ds, c.data.fractions, c.data.spec.seed);
  return ds;
}

Config small_config() {
  Config c;
  c.data.samples = 400;
  c.model.hidden = 16;
  c.model.context = 8;
  c.train.batch = 16;
  c.train.epochs = 2;
  return c;
}

Tensor random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Tensor t(r, c);
  for (auto& v : t.values()) v = n(rng);
  return t;
}

}  // namespace

TEST(Retrieval, GalleryOfOne) {
  const Tensor s(1, 1, 0.3);
  const auto ranks = pair_ranks(s);
  ASSERT_EQ(ranks.size(), 1u);
  EXPECT_EQ(ranks[0], 1u);
  EXPECT_EQ(recall_at_k(ranks, {1})[0], 1.0);
  EXPECT_THROW(recall_at_k(ranks, {2}), ConfigError);
}

TEST(Retrieval, TiesRankAgainstTheQuery) {
  const Tensor s(4, 4, 1.0);
  const auto ranks = pair_ranks(s);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(ranks[i], i + 1);
}

TEST(Retrieval, RandomGalleryMatchesPermutationChance) {
  // Under exchangeable scores the true pair's rank is uniform on 1..N, so
  // R@k has mean k/N per query; 20 galleries of 500 give 10^4 queries.
  std::mt19937_64 rng(11);
  const std::size_t N = 500, trials = 20;
  std::vector<double> hits(3, 0.0);
  const std::vector<int> ks{1, 5, 10};
  for (std::size_t t = 0; t < trials; ++t) {
    const auto r = recall_at_k(pair_ranks(random_matrix(N, N, rng)), ks);
    for (std::size_t j = 0; j < 3; ++j) hits[j] += r[j] * N;
  }
  const double q = static_cast<double>(N * trials);
  for (std::size_t j = 0; j < 3; ++j) {
    const double p = ks[j] / static_cast<double>(N);
    const double sd = std::sqrt(q * p * (1 - p));
    EXPECT_NEAR(hits[j], q * p, 4.5 * sd) << "k=" << ks[j];
  }
}

TEST(Retrieval, RecallIsMonotoneAndCompleteAtGallerySize) {
  std::mt19937_64 rng(3);
  const std::size_t N = 40;
  std::vector<int> ks;
  for (int k = 1; k <= static_cast<int>(N); ++k) ks.push_back(k);
  const auto r = recall_at_k(pair_ranks(random_matrix(N, N, rng)), ks);
  for (std::size_t j = 1; j < r.size(); ++j) EXPECT_GE(r[j], r[j - 1]);
  EXPECT_EQ(r.back(), 1.0);
}

TEST(Retrieval, BothDirectionsAndMean) {
  auto c = small_config();
  c.data.samples = 200;
  SrcidModel m(c);
  const auto ds = make_dataset(c);
  const auto reps = retrieval_eval(m, ds, 0, 2, {1, 5, 10}, CodeMode::kOnly1);
  ASSERT_EQ(reps.size(), 9u);
  std::size_t found = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& fwd = reps[3 * i];
    const auto& bwd = reps[3 * i + 1];
    const auto& mean = reps[3 * i + 2];
    EXPECT_EQ(fwd.direction, "a->c");
    EXPECT_EQ(bwd.direction, "c->a");
    EXPECT_EQ(mean.direction, "a<->c");
    EXPECT_DOUBLE_EQ(mean.value, 0.5 * (fwd.value + bwd.value));
    EXPECT_TRUE(fwd.untrained);
    found += fwd.metric == "recall@" + std::to_string(std::vector<int>{1, 5, 10}[i]);
  }
  EXPECT_EQ(found, 3u);
  EXPECT_THROW(retrieval_eval(m, ds, 0, 1, {1000}, CodeMode::kOnly1), ConfigError);
}

TEST(Codebook, AgreementOfIdenticalEncodersIsOne) {
  auto c = small_config();
  c.data.spec.dims = {20, 20, 20};
  SrcidModel m(c);
  for (const char* part : {"gen"})
    for (const char* layer : {".l1.w", ".l1.b", ".l2.w", ".l2.b"})
      m.params.value(m.prefix(1, 1, part) + layer) = m.params.value(m.prefix(0, 1, part) + layer);
  auto ds = make_dataset(c);
  for (auto& s : ds.samples) s.x[1] = s.x[0];
  const auto st = codebook_stats(m, ds, synth::Split::kTest);
  EXPECT_EQ(st.agreement[0][0], 1.0);
  EXPECT_LT(st.agreement[0][1], 1.0);
  EXPECT_EQ(code_agreement({1, 2, 3, 4}, {1, 0, 3, 0}), 0.5);
  EXPECT_THROW(code_agreement({1}, {1, 2}), ShapeError);
}

TEST(Codebook, RandomModelAgreementNearChance) {
  // Independent-assignment oracle: sum_l p_a(l) p_b(l) from the marginals.
  auto c = small_config();
  c.data.samples = 1000;
  const auto ds = make_dataset(c);
  double total = 0.0;
  const int models = 5;
  for (int s = 0; s < models; ++s) {
    c.train.seed = 100 + s;
    SrcidModel m(c);
    const auto st = codebook_stats(m, ds, synth::Split::kTest);
    const auto e = embed_split(m, ds, synth::Split::kTest, CodeMode::kOnly1);
    std::array<std::vector<double>, 3> hist;
    for (std::size_t mm = 0; mm < 3; ++mm) {
      hist[mm].assign(64, 0.0);
      for (const auto& row : e.codes.codes[mm]) hist[mm][row[0]] += 1.0 / e.codes.codes[mm].size();
    }
    double expected = 0.0;
    for (std::size_t l = 0; l < 64; ++l) expected += hist[0][l] * hist[1][l];
    const double n = static_cast<double>(e.codes.codes[0].size());
    EXPECT_NEAR(st.agreement[0][0], expected, 5.0 * std::sqrt(expected * (1 - expected) / n) + 0.02) << s;
    total += st.agreement[0][0];
  }
  EXPECT_LT(total / models, 0.1);
}

TEST(CrossModal, UntrainedModelIsInChanceBand) {
  auto c = small_config();
  c.data.samples = 1000;
  SrcidModel m(c);
  const auto ds = make_dataset(c);
  const auto reps = cross_modal_matrix(m, ds, LabelKind::kCoarse, CodeMode::kOnly1);
  ASSERT_EQ(reps.size(), 9u);
  double cross = 0.0;
  for (const auto& r : reps) {
    EXPECT_TRUE(r.untrained);
    EXPECT_EQ(r.metric, "accuracy_coarse");
    if (r.direction[0] != r.direction[3]) cross += r.value / 6.0;
  }
  EXPECT_GE(cross, 0.05);
  EXPECT_LE(cross, 0.2);
}

TEST(CrossModal, TrainSplitScoreIsOptimistic) {
  // Raw-feature probe stands in for a trained encoder: fit and score on the
  // same rows versus held-out rows.
  auto c = small_config();
  const auto ds = make_dataset(c);
  std::vector<Tensor> rows[2];
  std::vector<int> labels[2];
  for (const auto& s : ds.samples) {
    const int k = s.split == synth::Split::kTrain ? 0 : 1;
    Tensor mean(1, s.x[0].cols());
    for (std::size_t t = 0; t < s.x[0].rows(); ++t)
      for (std::size_t d = 0; d < mean.cols(); ++d) mean(0, d) += s.x[0](t, d) / s.x[0].rows();
    rows[k].push_back(mean);
    labels[k].push_back(s.coarse);
  }
  const Tensor train = numgrad::concat_rows(rows[0]), held = numgrad::concat_rows(rows[1]);
  LogisticProbe p;
  p.fit(train, labels[0], 10);
  EXPECT_GE(p.accuracy(train, labels[0]), p.accuracy(held, labels[1]));
}

TEST(CrossModal, DirectionsAndModes) {
  auto c = small_config();
  c.data.samples = 200;
  SrcidModel m(c);
  const auto ds = make_dataset(c);
  const auto r = cross_modal_eval(m, ds, 1, 2, LabelKind::kFine, CodeMode::kBoth);
  EXPECT_EQ(r.direction, "b->c");
  EXPECT_EQ(r.mode, "both");
  EXPECT_EQ(r.metric, "accuracy_fine");
  EXPECT_EQ(r.config_digest, model::config_digest(m.config()));
  EXPECT_GE(r.value, 0.0);
  EXPECT_LE(r.value, 1.0);
  // Per-step embeddings for fine labels, time-averaged for coarse.
  const auto e = embed_split(m, ds, synth::Split::kTrain, CodeMode::kBoth);
  EXPECT_EQ(step_features(e, 0).rows(), e.batch.batch * e.batch.steps);
  EXPECT_EQ(clip_features(e, 0).rows(), e.batch.batch);
  EXPECT_EQ(clip_features(e, 0).cols(), 2 * c.model.latent);
}

TEST(CrossModal, TrainedFlagClears) {
  auto c = small_config();
  c.data.samples = 100;
  c.train.epochs = 1;
  SrcidModel m(c);
  model::GateState g;
  const auto ds = make_dataset(c);
  model::fit(m, g, ds);
  const auto nu = nuisance_eval(m, ds, CodeMode::kOnly1);
  ASSERT_EQ(nu.size(), 3u);
  for (const auto& r : nu) EXPECT_FALSE(r.untrained);
}

TEST(Reports, JsonlAndCsvRoundTrip) {
  std::vector<EvalReport> rs{
      {"cross_modal", "a->b", "accuracy_coarse", "only1", 0.123456789012345678, "abc", 7, false},
      {"retrieval", "a<->b", "recall@5", "both", 1.0 / 3.0, "def", 1ull << 60, true},
  };
  const auto text = reports_to_jsonl(rs);
  const auto back = reports_from_jsonl(text);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].task, rs[i].task);
    EXPECT_EQ(back[i].direction, rs[i].direction);
    EXPECT_EQ(back[i].value, rs[i].value);
    EXPECT_EQ(back[i].seed, rs[i].seed);
    EXPECT_EQ(back[i].untrained, rs[i].untrained);
  }
  EXPECT_EQ(reports_to_jsonl(back), text);
  const auto csv = reports_to_csv(rs);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "task,direction,metric,mode,value,config_digest,seed,untrained");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_THROW(reports_from_jsonl("{\"task\": 3}\n"), FormatError);
}

TEST(QuantBench, OneRowPerMethodWithCompanionRows) {
  auto c = small_config();
  c.data.samples = 120;
  c.train.epochs = 1;
  const auto ds = make_dataset(c);
  const auto rows = quant_method_bench(ds, {"vq", "fsq", "rvq-2"}, c);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].method, "fsq");
  for (const auto& r : rows) {
    std::size_t intra = 0, cross = 0;
    for (const auto& rep : r.reports)
      if (rep.task == "quant_bench" && rep.metric == r.method + ":accuracy_coarse")
        (rep.direction[0] == rep.direction[3] ? intra : cross) += 1;
    EXPECT_EQ(intra, 3u) << r.method;
    EXPECT_EQ(cross, 6u) << r.method;
    EXPECT_GE(r.recon_mse, 0.0);
    EXPECT_GE(r.code_mse, 0.0);
  }
  EXPECT_THROW(quant_method_bench(ds, {"pq"}, c), ConfigError);
}

TEST(QuantBench, CodeMseMatchesDirectQuantizerError) {
  auto c = small_config();
  c.data.samples = 120;
  const auto ds = make_dataset(c);
  for (const char* method : {"vq", "rvq-3", "fsq"}) {
    auto cm = c;
    cm.quant.method = model::QuantMethod::parse(method);
    model::SrcidModel m(cm);
    const auto idx = ds.indices(synth::Split::kTrain);
    model::init_codebooks(m, model::make_batch(ds, idx), 1);
    const auto got = code_reconstruction_mse(m, ds, synth::Split::kTest);
    const auto b = model::make_batch(ds, ds.indices(synth::Split::kTest));
    numgrad::Tape t;
    const auto f = model::encode_all(t, m, b, 1);
    for (std::size_t mm = 0; mm < 3; ++mm) {
      const auto& lf = f.layer[0][mm];
      double want;
      if (cm.quant.method.kind == model::QuantKind::kFsq) {
        want = quant::fsq_quantize(lf.fsq_pre.value(), m.fsq_spec()).quantization_mse;
      } else {
        want = quant::rvq_quantize(lf.z.value(), m.codebooks[0]).quantization_mse;
      }
      EXPECT_NEAR(got[mm], want, 1e-12) << method << " modality " << mm;
    }
  }
}
