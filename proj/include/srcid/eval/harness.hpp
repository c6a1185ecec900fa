#pragma once

#include <array>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "srcid/eval/probe.hpp"
#include "srcid/model/srcid_model.hpp"

namespace srcid::eval {

using model::CodeMode;
using model::SrcidModel;

struct EvalReport {
  std::string task;       // cross_modal, nuisance, retrieval, codebook, quant_bench
  std::string direction;  // "a->b", "a->a", "a<->b", "a", "all"
  std::string metric;     // accuracy_coarse, accuracy_fine, recall@k, agreement, perplexity_norm, ...
  std::string mode;       // only1 | both | -
  double value = 0.0;     // accuracies and recalls in [0, 1]; MSE rows unbounded
  std::string config_digest;
  std::uint64_t seed = 0;
  bool untrained = false;  // model had no training epochs
};

nlohmann::json to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);
std::string reports_to_jsonl(const std::vector<EvalReport>& reports);
std::string reports_to_csv(const std::vector<EvalReport>& reports);
std::vector<EvalReport> reports_from_jsonl(const std::string& text);

const char* modality_name(std::size_t m);  // a, b, c
std::string direction(std::size_t from, std::size_t to);

// Report stamped with the model's config digest, seed and untrained flag.
EvalReport make_report(const SrcidModel& model, std::string task, std::string dir, std::string metric,
                       std::string mode, double value);
// Evaluation split: test, falling back to val when test is empty.
synth::Split eval_split(const synth::Dataset& ds);

enum class LabelKind { kCoarse, kFine };

// Quantized general embeddings and labels of one split under one mode.
struct Embedded {
  model::Batch batch;
  model::GeneralCodes codes;
};
Embedded embed_split(SrcidModel& model, const synth::Dataset& ds, synth::Split split, CodeMode mode);

// Per-clip time-averaged embeddings (B x E) and per-step embeddings (T*B x E).
Tensor clip_features(const Embedded& e, std::size_t m);
Tensor step_features(const Embedded& e, std::size_t m);

ProbeOptions probe_options(const model::Config& cfg);

// Probe fitted on train split embeddings of train_mod, accuracy on test split
// embeddings of test_mod. Coarse labels use time-averaged embeddings, fine
// labels per-step embeddings.
EvalReport cross_modal_eval(SrcidModel& model, const synth::Dataset& ds, std::size_t train_mod,
                            std::size_t test_mod, LabelKind kind, CodeMode mode);

// All 9 (train_mod, test_mod) pairs with one probe fit per train modality.
std::vector<EvalReport> cross_modal_matrix(SrcidModel& model, const synth::Dataset& ds, LabelKind kind,
                                           CodeMode mode);

// Nuisance label of modality m predicted from its own time-averaged general
// embedding; one report per modality.
std::vector<EvalReport> nuisance_eval(SrcidModel& model, const synth::Dataset& ds, CodeMode mode);

// 1-based rank of the true pair for every query row i (gallery row i).
// Ties count against the query: equal scores at lower gallery index rank
// ahead of the true item.
std::vector<std::size_t> pair_ranks(const Tensor& similarity);
std::vector<double> recall_at_k(const std::vector<std::size_t>& ranks, const std::vector<int>& ks);

// Both directions plus their mean ("a<->b"), over the test split.
std::vector<EvalReport> retrieval_eval(SrcidModel& model, const synth::Dataset& ds, std::size_t query_mod,
                                       std::size_t gallery_mod, const std::vector<int>& ks, CodeMode mode);

struct CodebookStats {
  std::vector<double> perplexity;                 // per layer
  std::vector<std::vector<double>> usage;         // per layer histogram (fractions)
  std::vector<std::array<double, 3>> agreement;   // per layer: (a,b), (a,c), (b,c)
};
// Agreement is the fraction of paired steps where two modalities share the
// layer's first-stage code.
CodebookStats codebook_stats(SrcidModel& model, const synth::Dataset& ds, synth::Split split);
double code_agreement(const std::vector<int>& a, const std::vector<int>& b);

// Mean per-element reconstruction error of every modality's own decoder at
// layer 1 over a split.
std::array<double, 3> reconstruction_mse(SrcidModel& model, const synth::Dataset& ds, synth::Split split);
// Per modality element-mean (z - quantized(z))^2 of the layer-1 general features
// (for FSQ, of the projected grid input).
std::array<double, 3> code_reconstruction_mse(SrcidModel& model, const synth::Dataset& ds, synth::Split split);

struct QuantBenchRow {
  std::string method;
  double cross_modal_accuracy = 0.0;  // coarse, mean over the 6 m->n directions
  double intra_modal_accuracy = 0.0;  // coarse, mean over m->m
  double recon_mse = 0.0;             // decoder output, mean over modalities
  double code_mse = 0.0;              // quantizer on general features, mean over modalities
  double agreement = 0.0;             // layer-1 code agreement, mean over pairs
  std::vector<EvalReport> reports;
};

// One single-layer model per method, same config and seed otherwise.
std::vector<QuantBenchRow> quant_method_bench(const synth::Dataset& ds, const std::vector<std::string>& methods,
                                              const model::Config& cfg);

}  // namespace srcid::eval
