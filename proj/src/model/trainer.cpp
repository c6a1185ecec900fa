#include "srcid/model/trainer.hpp"

#include <algorithm>

#include "srcid/error.hpp"
#include "srcid/quantize/quantizers.hpp"

namespace srcid::model {

namespace {

nlohmann::json terms_json(const TermValues& t) {
  return {{"recon", t.recon}, {"commit", t.commit}, {"cpc", t.cpc}, {"cmcm", t.cmcm}, {"mi", t.mi}};
}

void accumulate(TermValues& acc, const TermValues& t, double w) {
  acc.recon += w * t.recon;
  acc.commit += w * t.commit;
  acc.cpc += w * t.cpc;
  acc.cmcm += w * t.cmcm;
  acc.mi += w * t.mi;
}

// Clips used to data-initialize codebooks: enough rows for L entries.
std::vector<std::size_t> init_clips(const std::vector<std::size_t>& train, const Config& cfg) {
  const std::size_t T = cfg.data.spec.steps;
  const std::size_t need = std::max(cfg.train.batch, (cfg.quant.codebook_size + T - 1) / T);
  return {train.begin(), train.begin() + static_cast<std::ptrdiff_t>(std::min(need, train.size()))};
}

}  // namespace

nlohmann::json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"layer1", terms_json(r.terms[0])},
          {"layer2", terms_json(r.terms[1])},
          {"total", r.total},
          {"club_loglik", {r.club_loglik[0], r.club_loglik[1]}},
          {"mi", {r.mi_estimate[0], r.mi_estimate[1]}},
          {"perplexity", {r.perplexity[0], r.perplexity[1]}},
          {"active_layers", r.active_layers},
          {"steps", r.steps},
          {"gate_active", r.gate_active}};
}

FitResult fit(SrcidModel& model, GateState& gate, const synth::Dataset& ds, const FitOptions& opt) {
  const Config& cfg = model.config();
  const std::size_t B = cfg.train.batch;
  auto train = ds.indices(synth::Split::kTrain);
  if (train.size() < B)
    throw ConfigError("train split has " + std::to_string(train.size()) + " clips, fewer than train.batch=" +
                      std::to_string(B));
  FitResult res;
  auto emit = [&](const nlohmann::json& j) {
    res.trace.push_back(j);
    if (opt.on_record) opt.on_record(j);
  };
  if (!model.codebook_ready[0]) {
    const auto clips = init_clips(train, cfg);
    init_codebooks(model, make_batch(ds, clips), 1);
  }
  const std::size_t L = cfg.quant.method.kind == QuantKind::kFsq ? model.fsq_spec().codebook_size()
                                                                 : cfg.quant.codebook_size;
  for (std::size_t e = 0; e < cfg.train.epochs; ++e) {
    std::shuffle(train.begin(), train.end(), model.rng);
    EpochRecord rec;
    rec.epoch = gate.epoch + 1;
    std::array<std::vector<int>, kMaxLayers> codes;
    const std::size_t steps = train.size() / B;
    const double w = 1.0 / static_cast<double>(steps);
    for (std::size_t s = 0; s < steps; ++s) {
      const std::span<const std::size_t> idx(train.data() + s * B, B);
      StepMetrics sm;
      try {
        sm = train_step(model, make_batch(ds, idx), gate);
      } catch (const NumericalError& err) {
        throw NumericalError(err.term(), "epoch " + std::to_string(rec.epoch) + ", step " +
                                             std::to_string(s + 1) + ": " + err.what());
      }
      if (opt.on_step) opt.on_step(model, gate);
      for (std::size_t k = 0; k < kMaxLayers; ++k) {
        accumulate(rec.terms[k], sm.terms[k], w);
        rec.club_loglik[k] += w * sm.club_loglik[k];
        rec.mi_estimate[k] += w * sm.mi_estimate[k];
        codes[k].insert(codes[k].end(), sm.codes[k].begin(), sm.codes[k].end());
      }
      rec.total += w * sm.total;
      rec.active_layers = sm.active_layers;
    }
    rec.steps = steps;
    for (std::size_t k = 0; k < kMaxLayers; ++k)
      if (!codes[k].empty()) rec.perplexity[k] = quant::codebook_perplexity(codes[k], L);
    const bool was_active = gate.layer2_active;
    gate = update_gate(gate, rec.mi_estimate[0], cfg);
    ++model.epochs_trained;
    rec.gate_active = gate.layer2_active;
    if (opt.on_epoch) opt.on_epoch(rec);
    res.epochs.push_back(rec);
    emit(to_json(rec));
    if (!was_active && gate.layer2_active) {
      emit({{"event", "gate_activated"}, {"epoch", gate.activation_epoch}});
      if (model.layers() == 2 && !model.codebook_ready[1]) init_codebooks(model, make_batch(ds, init_clips(train, cfg)), 2);
    }
  }
  return res;
}

std::string trace_to_jsonl(const std::vector<nlohmann::json>& trace) {
  std::string out;
  for (const auto& j : trace) out += j.dump() + "\n";
  return out;
}

}  // namespace srcid::model
