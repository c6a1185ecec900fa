#pragma once

#include <functional>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "srcid/model/srcid_model.hpp"

namespace srcid::model {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  std::array<TermValues, kMaxLayers> terms{};
  double total = 0.0;
  std::array<double, kMaxLayers> club_loglik{};
  std::array<double, kMaxLayers> mi_estimate{};
  std::array<double, kMaxLayers> perplexity{};
  std::size_t active_layers = 1;
  std::size_t steps = 0;
  bool gate_active = false;  // after this epoch's gate update
};

nlohmann::json to_json(const EpochRecord& r);

struct FitOptions {
  // Receives every trace record in order: epoch records and the one-off
  // {"event": "gate_activated"} record.
  std::function<void(const nlohmann::json&)> on_record;
  // Per-epoch progress line (stderr by the CLI); may be empty.
  std::function<void(const EpochRecord&)> on_epoch;
  // After every optimizer step; gradients of that step are still in place.
  std::function<void(const SrcidModel&, const GateState&)> on_step;
};

struct FitResult {
  std::vector<EpochRecord> epochs;
  std::vector<nlohmann::json> trace;
};

// Runs config().train.epochs epochs over the train split: shuffled full
// batches (an incomplete final batch is dropped), a gate update per epoch,
// data-initialized codebooks before a layer's first step. NumericalError is
// rethrown with the epoch in its message.
FitResult fit(SrcidModel& model, GateState& gate, const synth::Dataset& ds, const FitOptions& opt = {});

// Trace lines, one JSON object per line.
std::string trace_to_jsonl(const std::vector<nlohmann::json>& trace);

}  // namespace srcid::model
