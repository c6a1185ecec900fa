#include "srcid/eval/harness.hpp"

#include <sstream>

#include "srcid/error.hpp"
#include "srcid/model/trainer.hpp"
#include "srcid/numgrad/kernels.hpp"

namespace srcid::eval {

using model::kModalities;
using synth::Split;

nlohmann::json to_json(const EvalReport& r) {
  return {{"task", r.task},   {"direction", r.direction},         {"metric", r.metric},
          {"mode", r.mode},   {"value", r.value},                 {"config_digest", r.config_digest},
          {"seed", r.seed},   {"untrained", r.untrained}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.task = j.at("task").get<std::string>();
  r.direction = j.at("direction").get<std::string>();
  r.metric = j.at("metric").get<std::string>();
  r.mode = j.at("mode").get<std::string>();
  r.value = j.at("value").get<double>();
  r.config_digest = j.at("config_digest").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.untrained = j.at("untrained").get<bool>();
  return r;
}

std::string reports_to_jsonl(const std::vector<EvalReport>& reports) {
  std::string out;
  for (const auto& r : reports) out += to_json(r).dump() + "\n";
  return out;
}

std::vector<EvalReport> reports_from_jsonl(const std::string& text) {
  std::vector<EvalReport> out;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(report_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("report line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string reports_to_csv(const std::vector<EvalReport>& reports) {
  std::string out = "task,direction,metric,mode,value,config_digest,seed,untrained\n";
  for (const auto& r : reports)
    out += r.task + "," + r.direction + "," + r.metric + "," + r.mode + "," + nlohmann::json(r.value).dump() +
           "," + r.config_digest + "," + std::to_string(r.seed) + "," + (r.untrained ? "true" : "false") + "\n";
  return out;
}

const char* modality_name(std::size_t m) {
  static const char* names[] = {"a", "b", "c"};
  if (m >= kModalities) throw ConfigError("modality index out of range");
  return names[m];
}

std::string direction(std::size_t from, std::size_t to) {
  return std::string(modality_name(from)) + "->" + modality_name(to);
}

EvalReport make_report(const SrcidModel& model, std::string task, std::string dir, std::string metric,
                       std::string mode, double value) {
  EvalReport r;
  r.task = std::move(task);
  r.direction = std::move(dir);
  r.metric = std::move(metric);
  r.mode = std::move(mode);
  r.value = value;
  r.config_digest = model::config_digest(model.config());
  r.seed = model.config().train.seed;
  r.untrained = model.epochs_trained == 0;
  return r;
}

Split eval_split(const synth::Dataset& ds) {
  if (!ds.indices(Split::kTest).empty()) return Split::kTest;
  if (!ds.indices(Split::kVal).empty()) return Split::kVal;
  throw ConfigError("dataset has no test or val clips to evaluate on");
}

namespace {

std::vector<int> clip_labels(const Embedded& e, LabelKind kind) {
  return kind == LabelKind::kCoarse ? e.batch.coarse : e.batch.fine;
}

Tensor features(const Embedded& e, std::size_t m, LabelKind kind) {
  return kind == LabelKind::kCoarse ? clip_features(e, m) : step_features(e, m);
}

const char* metric_name(LabelKind kind) { return kind == LabelKind::kCoarse ? "accuracy_coarse" : "accuracy_fine"; }

}  // namespace

Embedded embed_split(SrcidModel& model, const synth::Dataset& ds, Split split, CodeMode mode) {
  const auto idx = ds.indices(split);
  if (idx.empty()) throw ConfigError(std::string("split '") + synth::to_string(split) + "' is empty");
  Embedded e;
  e.batch = model::make_batch(ds, idx);
  e.codes = model::extract_general_codes(model, e.batch, mode);
  return e;
}

Tensor clip_features(const Embedded& e, std::size_t m) {
  const Tensor& emb = e.codes.embeddings[m];
  const std::size_t B = e.batch.batch, T = e.batch.steps;
  Tensor out(B, emb.cols());
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < B; ++i)
      for (std::size_t d = 0; d < emb.cols(); ++d) out(i, d) += emb(t * B + i, d) / static_cast<double>(T);
  return out;
}

Tensor step_features(const Embedded& e, std::size_t m) { return e.codes.embeddings[m]; }

ProbeOptions probe_options(const model::Config& cfg) {
  ProbeOptions o;
  o.iterations = cfg.eval.probe_iterations;
  o.learning_rate = cfg.eval.probe_lr;
  return o;
}

std::vector<EvalReport> cross_modal_matrix(SrcidModel& model, const synth::Dataset& ds, LabelKind kind,
                                           CodeMode mode) {
  const auto tr = embed_split(model, ds, Split::kTrain, mode);
  const auto te = embed_split(model, ds, eval_split(ds), mode);
  const auto ytr = clip_labels(tr, kind), yte = clip_labels(te, kind);
  const std::size_t classes =
      kind == LabelKind::kCoarse ? ds.spec.coarse_classes : ds.spec.fine_classes;
  std::vector<EvalReport> out;
  for (std::size_t m = 0; m < kModalities; ++m) {
    LogisticProbe probe;
    probe.fit(features(tr, m, kind), ytr, classes, probe_options(model.config()));
    for (std::size_t n = 0; n < kModalities; ++n)
      out.push_back(make_report(model, "cross_modal", direction(m, n), metric_name(kind), model::to_string(mode),
                                probe.accuracy(features(te, n, kind), yte)));
  }
  return out;
}

EvalReport cross_modal_eval(SrcidModel& model, const synth::Dataset& ds, std::size_t train_mod,
                            std::size_t test_mod, LabelKind kind, CodeMode mode) {
  if (train_mod >= kModalities || test_mod >= kModalities) throw ConfigError("cross_modal_eval: bad modality");
  const auto tr = embed_split(model, ds, Split::kTrain, mode);
  const auto te = embed_split(model, ds, eval_split(ds), mode);
  const std::size_t classes =
      kind == LabelKind::kCoarse ? ds.spec.coarse_classes : ds.spec.fine_classes;
  LogisticProbe probe;
  probe.fit(features(tr, train_mod, kind), clip_labels(tr, kind), classes, probe_options(model.config()));
  return make_report(model, "cross_modal", direction(train_mod, test_mod), metric_name(kind),
                     model::to_string(mode), probe.accuracy(features(te, test_mod, kind), clip_labels(te, kind)));
}

std::vector<EvalReport> nuisance_eval(SrcidModel& model, const synth::Dataset& ds, CodeMode mode) {
  const auto tr = embed_split(model, ds, Split::kTrain, mode);
  const auto te = embed_split(model, ds, eval_split(ds), mode);
  std::vector<EvalReport> out;
  for (std::size_t m = 0; m < kModalities; ++m) {
    LogisticProbe probe;
    probe.fit(clip_features(tr, m), tr.batch.nuisance[m], ds.spec.nuisance_classes, probe_options(model.config()));
    out.push_back(make_report(model, "nuisance", modality_name(m), "accuracy_nuisance", model::to_string(mode),
                              probe.accuracy(clip_features(te, m), te.batch.nuisance[m])));
  }
  return out;
}

std::vector<std::size_t> pair_ranks(const Tensor& sim) {
  if (sim.rows() != sim.cols()) throw ShapeError("pair_ranks: similarity must be square, got " + sim.shape_str());
  std::vector<std::size_t> ranks(sim.rows());
  for (std::size_t q = 0; q < sim.rows(); ++q) {
    const double s = sim(q, q);
    std::size_t ahead = 0;
    for (std::size_t g = 0; g < sim.cols(); ++g)
      if (sim(q, g) > s || (sim(q, g) == s && g < q)) ++ahead;
    ranks[q] = ahead + 1;
  }
  return ranks;
}

std::vector<double> recall_at_k(const std::vector<std::size_t>& ranks, const std::vector<int>& ks) {
  std::vector<double> out;
  for (int k : ks) {
    if (k < 1) throw ConfigError("recall@k needs k >= 1");
    if (static_cast<std::size_t>(k) > ranks.size())
      throw ConfigError("gallery of " + std::to_string(ranks.size()) + " is smaller than k=" + std::to_string(k));
    std::size_t hit = 0;
    for (auto r : ranks) hit += r <= static_cast<std::size_t>(k);
    out.push_back(static_cast<double>(hit) / static_cast<double>(ranks.size()));
  }
  return out;
}

std::vector<EvalReport> retrieval_eval(SrcidModel& model, const synth::Dataset& ds, std::size_t query_mod,
                                       std::size_t gallery_mod, const std::vector<int>& ks, CodeMode mode) {
  const auto te = embed_split(model, ds, eval_split(ds), mode);
  const Tensor q = clip_features(te, query_mod), g = clip_features(te, gallery_mod);
  const auto fwd = recall_at_k(pair_ranks(kernels::cosine_similarity(q, g)), ks);
  const auto bwd = recall_at_k(pair_ranks(kernels::cosine_similarity(g, q)), ks);
  std::vector<EvalReport> out;
  const std::string both = std::string(modality_name(query_mod)) + "<->" + modality_name(gallery_mod);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const std::string metric = "recall@" + std::to_string(ks[i]);
    const auto md = model::to_string(mode);
    out.push_back(make_report(model, "retrieval", direction(query_mod, gallery_mod), metric, md, fwd[i]));
    out.push_back(make_report(model, "retrieval", direction(gallery_mod, query_mod), metric, md, bwd[i]));
    out.push_back(make_report(model, "retrieval", both, metric, md, 0.5 * (fwd[i] + bwd[i])));
  }
  return out;
}

double code_agreement(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw ShapeError("code_agreement: length mismatch");
  if (a.empty()) return 0.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

CodebookStats codebook_stats(SrcidModel& model, const synth::Dataset& ds, Split split) {
  const CodeMode mode = model.layers() == 2 ? CodeMode::kBoth : CodeMode::kOnly1;
  const auto e = embed_split(model, ds, split, mode);
  const std::size_t K = model.layers();
  const auto& cfg = model.config();
  const std::size_t L = cfg.quant.method.kind == model::QuantKind::kFsq ? model.fsq_spec().codebook_size()
                                                                      : cfg.quant.codebook_size;
  CodebookStats st;
  for (std::size_t k = 0; k < K; ++k) {
    std::array<std::vector<int>, kModalities> codes;
    std::vector<int> all;
    for (std::size_t m = 0; m < kModalities; ++m) {
      for (const auto& c : e.codes.codes[m]) codes[m].push_back(c[k]);
      all.insert(all.end(), codes[m].begin(), codes[m].end());
    }
    st.perplexity.push_back(quant::codebook_perplexity(all, L));
    st.usage.push_back(quant::code_histogram(all, L));
    st.agreement.push_back({code_agreement(codes[0], codes[1]), code_agreement(codes[0], codes[2]),
                            code_agreement(codes[1], codes[2])});
  }
  return st;
}

std::array<double, 3> reconstruction_mse(SrcidModel& model, const synth::Dataset& ds, Split split) {
  const auto idx = ds.indices(split);
  if (idx.empty()) throw ConfigError("reconstruction_mse: empty split");
  const auto batch = model::make_batch(ds, idx);
  numgrad::Tape tape;
  const auto fwd = model::encode_all(tape, model, batch, 1);
  std::array<double, 3> out{};
  for (std::size_t m = 0; m < kModalities; ++m) {
    const auto& lf = fwd.layer[0][m];
    const numgrad::Var parts[] = {lf.zhat, lf.zbar};
    const auto xhat = model.decoder(m, 1).forward(tape, model.params, numgrad::concat_cols(parts));
    out[m] = numgrad::mean_squared_error(xhat.value(), batch.x[m]);
  }
  return out;
}

std::array<double, 3> code_reconstruction_mse(SrcidModel& model, const synth::Dataset& ds, Split split) {
  const auto idx = ds.indices(split);
  if (idx.empty()) throw ConfigError("code_reconstruction_mse: empty split");
  const auto batch = model::make_batch(ds, idx);
  numgrad::Tape tape;
  const auto fwd = model::encode_all(tape, model, batch, 1);
  const bool fsq = model.config().quant.method.kind == model::QuantKind::kFsq;
  std::array<double, 3> out{};
  for (std::size_t m = 0; m < kModalities; ++m) {
    const auto& lf = fwd.layer[0][m];
    out[m] = numgrad::mean_squared_error(lf.quantized, fsq ? lf.fsq_pre.value() : lf.z.value());
  }
  return out;
}

std::vector<QuantBenchRow> quant_method_bench(const synth::Dataset& ds, const std::vector<std::string>& methods,
                                              const model::Config& cfg) {
  std::vector<model::QuantMethod> parsed;
  for (const auto& m : methods) parsed.push_back(model::QuantMethod::parse(m));
  std::vector<QuantBenchRow> rows;
  for (const auto& method : parsed) {
    model::Config c = cfg;
    c.quant.method = method;
    c.model.layers = 1;
    SrcidModel mdl(c);
    model::GateState gate;
    model::fit(mdl, gate, ds);
    QuantBenchRow row;
    row.method = method.str();
    const auto mat = cross_modal_matrix(mdl, ds, LabelKind::kCoarse, CodeMode::kOnly1);
    double cross = 0, intra = 0;
    for (const auto& r : mat) {
      auto rr = r;
      rr.task = "quant_bench";
      rr.metric = row.method + ":" + r.metric;
      row.reports.push_back(rr);
      (r.direction[0] == r.direction[3] ? intra : cross) += r.value;
    }
    row.cross_modal_accuracy = cross / 6.0;
    row.intra_modal_accuracy = intra / 3.0;
    const auto mse = reconstruction_mse(mdl, ds, eval_split(ds));
    row.recon_mse = (mse[0] + mse[1] + mse[2]) / 3.0;
    const auto qmse = code_reconstruction_mse(mdl, ds, eval_split(ds));
    row.code_mse = (qmse[0] + qmse[1] + qmse[2]) / 3.0;
    const auto st = codebook_stats(mdl, ds, eval_split(ds));
    row.agreement = (st.agreement[0][0] + st.agreement[0][1] + st.agreement[0][2]) / 3.0;
    row.reports.push_back(make_report(mdl, "quant_bench", "all", row.method + ":agreement", "only1", row.agreement));
    for (std::size_t m = 0; m < kModalities; ++m) {
      row.reports.push_back(make_report(mdl, "quant_bench", direction(m, m), row.method + ":recon_mse", "-", mse[m]));
      row.reports.push_back(make_report(mdl, "quant_bench", direction(m, m), row.method + ":code_mse", "-", qmse[m]));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace srcid::eval
