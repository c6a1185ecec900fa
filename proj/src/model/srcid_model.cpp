#include "srcid/model/srcid_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "srcid/error.hpp"
#include "srcid/io/binary.hpp"
#include "srcid/numgrad/kernels.hpp"
#include "srcid/quantize/ema.hpp"
#include "srcid/quantize/kmeans.hpp"

namespace srcid::model {

using numgrad::Linear;
using numgrad::Mlp;

Batch make_batch(const synth::Dataset& ds, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ShapeError("make_batch: no clips");
  Batch b;
  b.batch = indices.size();
  b.steps = ds.spec.steps;
  const std::size_t B = b.batch, T = b.steps;
  for (std::size_t m = 0; m < kModalities; ++m) b.x[m] = Tensor(T * B, ds.spec.dims[m]);
  b.fine.assign(T * B, 0);
  for (std::size_t i = 0; i < B; ++i) {
    const auto& s = ds.samples.at(indices[i]);
    if (s.fine.size() != T) throw ShapeError("make_batch: clip " + std::to_string(indices[i]) + " has wrong length");
    for (std::size_t m = 0; m < kModalities; ++m) {
      if (s.x[m].rows() != T || s.x[m].cols() != ds.spec.dims[m])
        throw ShapeError("make_batch: clip " + std::to_string(indices[i]) + " is missing modality " +
                         std::to_string(m) + " or has shape " + s.x[m].shape_str());
      for (std::size_t t = 0; t < T; ++t) {
        const auto src = s.x[m].row(t);
        std::copy(src.begin(), src.end(), b.x[m].row(t * B + i).begin());
      }
      b.nuisance[m].push_back(s.nuisance[m]);
    }
    b.coarse.push_back(s.coarse);
    for (std::size_t t = 0; t < T; ++t) b.fine[t * B + i] = s.fine[t];
  }
  return b;
}

TermValues LayerTerms::values() const {
  TermValues v;
  v.recon = recon.value().item();
  v.cpc = cpc.value().item();
  if (has_commit) v.commit = commit.value().item();
  if (has_cmcm) v.cmcm = cmcm.value().item();
  if (has_mi) v.mi = mi.value().item();
  return v;
}

GateState update_gate(GateState gate, double mi_layer1, const Config& cfg) {
  ++gate.epoch;
  gate.history.push_back(mi_layer1);
  while (gate.history.size() > cfg.train.patience) gate.history.pop_front();
  if (gate.layer2_active) return gate;
  bool quiet = true;
  if (cfg.loss.club_layer1) {
    quiet = gate.history.size() == cfg.train.patience;
    for (double v : gate.history) quiet = quiet && v < cfg.train.tau;
  }
  if (gate.epoch >= cfg.train.warm_min && quiet) {
    gate.layer2_active = true;
    gate.activation_epoch = static_cast<long>(gate.epoch);
  }
  return gate;
}

// ---- model -----------------------------------------------------------------

SrcidModel::SrcidModel(const Config& cfg) : cfg_(cfg) {
  cfg_.validate();
  rng.seed(cfg_.train.seed);
  const std::size_t L = cfg_.quant.codebook_size, H = cfg_.model.latent;
  const auto& method = cfg_.quant.method;
  for (std::size_t k = 1; k <= layers(); ++k) {
    for (std::size_t m = 0; m < kModalities; ++m) {
      general_encoder(m, k).init(params, rng);
      specific_encoder(m, k).init(params, rng);
      decoder(m, k).init(params, rng);
    }
    cpc_.push_back(mi::CpcState{"l" + std::to_string(k) + ".cpc", kModalities, H, cfg_.model.context,
                                cfg_.model.horizon});
    cpc_.back().init(params, rng);
    if (method.kind == QuantKind::kFsq) {
      const std::size_t F = cfg_.quant.fsq_levels.size();
      Linear{"l" + std::to_string(k) + ".fsq.down", H, F}.init(params, rng);
      Linear{"l" + std::to_string(k) + ".fsq.up", F, H}.init(params, rng);
    }
    for (std::size_t m = 0; m < kModalities; ++m) club_net(m, k).init(club, rng);
    std::vector<quant::Codebook> stages;
    if (method.kind != QuantKind::kFsq)
      for (std::size_t s = 0; s < method.stages; ++s) {
        auto cb = quant::Codebook::random(L, H, static_cast<int>(k), 1.0, rng);
        cb.decay = cfg_.quant.decay;
        cb.laplace = cfg_.quant.laplace;
        stages.push_back(std::move(cb));
      }
    codebooks.push_back(std::move(stages));
  }
  opt = numgrad::Optimizer(numgrad::parse_optimizer(cfg_.train.optimizer), cfg_.train.lr);
  club_opt = numgrad::Optimizer(numgrad::OptimizerKind::kAdam, cfg_.train.club_lr);
}

std::size_t SrcidModel::in_dim(std::size_t m, std::size_t k) const {
  return k == 1 ? cfg_.data.spec.dims[m] : specific_dim(m, k - 1);
}

std::size_t SrcidModel::specific_dim(std::size_t m, std::size_t k) const {
  if (cfg_.model.specific_dim > 0) return cfg_.model.specific_dim;
  return std::max<std::size_t>(8, in_dim(m, k) / 2);
}

std::string SrcidModel::prefix(std::size_t m, std::size_t k, const char* part) const {
  return "l" + std::to_string(k) + ".m" + std::to_string(m) + "." + part;
}

Mlp SrcidModel::general_encoder(std::size_t m, std::size_t k) const {
  return Mlp(prefix(m, k, "gen"), in_dim(m, k), cfg_.model.hidden, latent());
}

Mlp SrcidModel::specific_encoder(std::size_t m, std::size_t k) const {
  return Mlp(prefix(m, k, "spec"), in_dim(m, k), cfg_.model.hidden, specific_dim(m, k));
}

Mlp SrcidModel::decoder(std::size_t m, std::size_t k) const {
  return Mlp(prefix(m, k, "dec"), latent() + specific_dim(m, k), cfg_.model.hidden, in_dim(m, k));
}

mi::ClubNet SrcidModel::club_net(std::size_t m, std::size_t k) const {
  return mi::ClubNet{prefix(m, k, "club"), latent(), specific_dim(m, k), cfg_.model.hidden};
}

std::vector<std::string> SrcidModel::layer_params(std::size_t k) const {
  const std::string p = "l" + std::to_string(k) + ".";
  std::vector<std::string> out;
  for (const auto& e : params)
    if (e->name.rfind(p, 0) == 0) out.push_back(e->name);
  return out;
}

std::size_t active_layers(const SrcidModel& model, const GateState& gate) {
  return model.layers() == 2 && gate.layer2_active ? 2 : 1;
}

// ---- forward ---------------------------------------------------------------

namespace {

void quantize_layer(Tape& tape, SrcidModel& model, std::size_t k, LayerForward& lf) {
  const auto& method = model.config().quant.method;
  const Tensor& z = lf.z.value();
  if (method.kind == QuantKind::kFsq) {
    const std::size_t F = model.config().quant.fsq_levels.size();
    const std::string p = "l" + std::to_string(k) + ".fsq.";
    lf.fsq_pre = Linear{p + "down", model.latent(), F}.forward(tape, model.params, lf.z);
    auto q = quant::fsq_quantize(lf.fsq_pre.value(), model.fsq_spec());
    Var grid = numgrad::straight_through(lf.fsq_pre, q.quantized);
    lf.zhat = Linear{p + "up", F, model.latent()}.forward(tape, model.params, grid);
    lf.quantized = std::move(q.quantized);
    lf.codes = std::move(q.codes);
    return;
  }
  const auto& stages = model.codebooks[k - 1];
  Tensor residual = z;
  Tensor total(z.rows(), z.cols());
  for (const auto& cb : stages) {
    auto codes = kernels::nearest_rows(residual, cb.entries);
    lf.stage_inputs.push_back(residual);
    for (std::size_t r = 0; r < z.rows(); ++r) {
      const auto e = cb.entries.row(static_cast<std::size_t>(codes[r]));
      auto q = total.row(r);
      auto res = residual.row(r);
      for (std::size_t d = 0; d < z.cols(); ++d) {
        q[d] += e[d];
        res[d] -= e[d];
      }
    }
    lf.codes.push_back(std::move(codes));
  }
  lf.zhat = numgrad::straight_through(lf.z, total);
  lf.quantized = std::move(total);
}

}  // namespace

Forward encode_all(Tape& tape, SrcidModel& model, const Batch& batch, std::size_t layers) {
  if (layers < 1 || layers > model.layers())
    throw ConfigError("encode_all: model has " + std::to_string(model.layers()) + " layer(s), asked for " +
                      std::to_string(layers));
  for (std::size_t m = 0; m < kModalities; ++m)
    if (batch.x[m].empty() || batch.x[m].rows() != batch.batch * batch.steps)
      throw ShapeError("encode_all: modality " + std::to_string(m) + " missing or misshaped");
  Forward f;
  f.layers = layers;
  f.batch = batch.batch;
  f.layer.resize(layers);
  for (std::size_t k = 1; k <= layers; ++k)
    for (std::size_t m = 0; m < kModalities; ++m) {
      LayerForward& lf = f.layer[k - 1][m];
      lf.input = k == 1 ? tape.constant(batch.x[m]) : f.layer[0][m].zbar;
      lf.z = model.general_encoder(m, k).forward(tape, model.params, lf.input);
      lf.zbar = model.specific_encoder(m, k).forward(tape, model.params, lf.input);
      quantize_layer(tape, model, k, lf);
    }
  return f;
}

LayerTerms layer_losses(Tape& tape, SrcidModel& model, const Forward& fwd, std::size_t k) {
  using namespace numgrad;
  if (k < 1 || k > fwd.layers) throw ConfigError("layer_losses: layer " + std::to_string(k) + " not encoded");
  const Config& cfg = model.config();
  const auto& lay = fwd.layer[k - 1];
  const std::size_t B = fwd.batch;
  LayerTerms out;
  out.has_commit = cfg.quant.method.kind != QuantKind::kFsq;
  out.has_mi = k == 1 ? cfg.loss.club_layer1 : cfg.loss.club_layer2;
  for (std::size_t m = 0; m < kModalities; ++m) {
    const LayerForward& lf = lay[m];
    const Var parts[] = {lf.zhat, lf.zbar};
    Var xhat = model.decoder(m, k).forward(tape, model.params, concat_cols(parts));
    Var r = mean(square(xhat - lf.input));
    out.recon = m == 0 ? r : out.recon + r;
    if (out.has_commit) {
      Var c = quant::commitment_loss(lf.z, lf.quantized, cfg.loss.beta);
      out.commit = m == 0 ? c : out.commit + c;
    }
    if (out.has_mi) {
      Var zin = cfg.loss.mi_grad == "specific" ? numgrad::stop_gradient(lf.z) : lf.z;
      Var e = mi::club_mi_estimate(tape, model.club_net(m, k), model.club, zin, lf.zbar, B);
      out.mi_raw += e.value().item();
      if (cfg.loss.mi_floor) e = numgrad::relu(e);
      out.mi = m == 0 ? e : out.mi + e;
    }
  }
  // Cross-modal CPC over all ordered pairs, averaged over pairs and steps.
  const auto& st = model.cpc(k);
  const std::size_t T = lay[0].z.rows() / B;
  if (T <= st.horizon)
    throw ShapeError("layer_losses: sequence length " + std::to_string(T) + " must exceed the CPC horizon");
  const std::size_t upto = T - st.horizon;
  std::vector<std::vector<Var>> ctx(kModalities);
  for (std::size_t m = 0; m < kModalities; ++m)
    ctx[m] = mi::cpc_contexts(tape, st, model.params, m, lay[m].z, B, upto);
  std::size_t count = 0;
  for (std::size_t m = 0; m < kModalities; ++m)
    for (std::size_t n = 0; n < kModalities; ++n) {
      if (m == n) continue;
      for (std::size_t t = 1; t <= upto; ++t) {
        Var l = mi::cpc_pair_loss(tape, st, model.params, m, ctx[m], lay[n].z, B, t);
        out.cpc = count++ == 0 ? l : out.cpc + l;
      }
    }
  out.cpc = scale(out.cpc, 1.0 / static_cast<double>(count));
  if (cfg.loss.cmcm > 0.0) {
    if (!model.cmcm) throw ConfigError("loss.cmcm > 0 needs a cmcm hook; none is registered");
    out.cmcm = model.cmcm(tape, model, fwd, k);
    out.has_cmcm = true;
  }
  return out;
}

LossBreakdown combine_losses(Tape& tape, SrcidModel& model, const Forward& fwd) {
  const LossConfig& lc = model.config().loss;
  LossBreakdown lb;
  lb.active_layers = fwd.layers;
  bool any = false;
  auto add = [&](Var term, double coeff) {
    if (coeff == 0.0) return;
    Var w = numgrad::scale(term, coeff);
    lb.total = any ? lb.total + w : w;
    any = true;
  };
  for (std::size_t k = 1; k <= fwd.layers; ++k) {
    LayerTerms t = layer_losses(tape, model, fwd, k);
    lb.terms[k - 1] = t.values();
    lb.mi_raw[k - 1] = t.mi_raw;
    const auto& v = lb.terms[k - 1];
    const std::pair<const char*, double> named[] = {
        {"recon", v.recon}, {"commit", v.commit}, {"cpc", v.cpc}, {"cmcm", v.cmcm}, {"mi", v.mi}};
    for (const auto& [name, val] : named)
      if (!std::isfinite(val))
        throw NumericalError("layer" + std::to_string(k) + "." + name,
                             "non-finite layer-" + std::to_string(k) + " " + name + " loss");
    add(t.recon, lc.recon);
    add(t.cpc, lc.cpc);
    if (t.has_commit) add(t.commit, lc.commit);
    if (t.has_cmcm) add(t.cmcm, lc.cmcm);
    if (t.has_mi) add(t.mi, lc.mi);
  }
  if (!any) lb.total = tape.constant(Tensor::scalar(0.0));
  return lb;
}

LossBreakdown total_loss(Tape& tape, SrcidModel& model, const Batch& batch, const GateState& gate) {
  Forward fwd = encode_all(tape, model, batch, active_layers(model, gate));
  return combine_losses(tape, model, fwd);
}

// ---- codebooks ---------------------------------------------------------------

namespace {

// Per-modality EMA vectors: each modality's own rows, or the cross-modal mean
// of the paired rows.
std::array<Tensor, kModalities> ema_vectors(const std::array<LayerForward, kModalities>& lay,
                                            std::size_t stage, Pairing pairing) {
  std::array<Tensor, kModalities> out;
  if (pairing == Pairing::kIndependent) {
    for (std::size_t m = 0; m < kModalities; ++m) out[m] = lay[m].stage_inputs[stage];
    return out;
  }
  Tensor mean = lay[0].stage_inputs[stage];
  for (std::size_t m = 1; m < kModalities; ++m) mean.axpy(1.0, lay[m].stage_inputs[stage]);
  for (double& v : mean.values()) v /= static_cast<double>(kModalities);
  out.fill(mean);
  return out;
}

}  // namespace

void init_codebooks(SrcidModel& model, const Batch& batch, std::size_t k) {
  const auto& cfg = model.config();
  if (cfg.quant.method.kind == QuantKind::kFsq) {
    model.codebook_ready[k - 1] = true;
    return;
  }
  Tape tape;
  Forward fwd = encode_all(tape, model, batch, k);
  const auto& lay = fwd.layer[k - 1];
  Tensor pooled;
  if (cfg.quant.pairing == Pairing::kPaired) {
    pooled = lay[0].z.value();
    for (std::size_t m = 1; m < kModalities; ++m) pooled.axpy(1.0, lay[m].z.value());
    for (double& v : pooled.values()) v /= static_cast<double>(kModalities);
  } else {
    std::vector<Tensor> parts;
    for (const auto& lf : lay) parts.push_back(lf.z.value());
    pooled = numgrad::concat_rows(parts);
  }
  const std::size_t L = cfg.quant.codebook_size;
  if (pooled.rows() < L) throw ConfigError("init_codebooks: batch has fewer rows than quant.codebook_size");
  auto stages = quant::train_rvq_stages(pooled, cfg.quant.method.stages, L, model.rng, {10, false});
  for (auto& cb : stages) {
    cb.layer = static_cast<int>(k);
    cb.decay = cfg.quant.decay;
    cb.laplace = cfg.quant.laplace;
  }
  model.codebooks[k - 1] = std::move(stages);
  model.codebook_ready[k - 1] = true;
}

// ---- training step -------------------------------------------------------

StepMetrics train_step(SrcidModel& model, const Batch& batch, const GateState& gate) {
  const Config& cfg = model.config();
  StepMetrics sm;
  const std::size_t K = active_layers(model, gate);
  sm.active_layers = K;
  Tape tape;
  Forward fwd = encode_all(tape, model, batch, K);

  // (1) CLUB nets on detached features.
  {
    Tape ct;
    Var sum{};
    for (std::size_t k = 1; k <= K; ++k)
      for (std::size_t m = 0; m < kModalities; ++m) {
        const auto& lf = fwd.layer[k - 1][m];
        Var ll = mi::club_loglik(ct, model.club_net(m, k), model.club, ct.constant(lf.z.value()),
                                 ct.constant(lf.zbar.value()));
        sm.club_loglik[k - 1] += ll.value().item();
        sum = (k == 1 && m == 0) ? ll : sum + ll;
      }
    model.club.zero_grads();
    ct.backward(-sum);
    model.club_opt.step(model.club);
    model.club.zero_grads();
  }

  // (2) main step.
  LossBreakdown lb = combine_losses(tape, model, fwd);
  sm.terms = lb.terms;
  sm.total = lb.total.value().item();
  if (!std::isfinite(sm.total)) throw NumericalError("total", "non-finite total loss");
  model.params.zero_grads();
  if (tape.requires_grad(lb.total)) tape.backward(lb.total);
  model.club.zero_grads();
  model.opt.step(model.params);

  for (std::size_t k = 1; k <= K; ++k) {
    const bool in_loss = k == 1 ? cfg.loss.club_layer1 : cfg.loss.club_layer2;
    if (in_loss) {
      sm.mi_estimate[k - 1] = lb.mi_raw[k - 1];
    } else {
      for (std::size_t m = 0; m < kModalities; ++m) {
        const auto& lf = fwd.layer[k - 1][m];
        sm.mi_estimate[k - 1] +=
            mi::club_mi_value(model.club_net(m, k), model.club, lf.z.value(), lf.zbar.value(), batch.batch);
      }
    }
    for (const auto& lf : fwd.layer[k - 1])
      sm.codes[k - 1].insert(sm.codes[k - 1].end(), lf.codes[0].begin(), lf.codes[0].end());
  }

  // (3) multimodal EMA on active codebooks.
  if (cfg.quant.method.kind != QuantKind::kFsq) {
    const double w = 1.0 / static_cast<double>(kModalities);
    const std::array<double, kModalities> weights{w, w, w};
    for (std::size_t k = 1; k <= K; ++k) {
      auto& stages = model.codebooks[k - 1];
      const auto& lay = fwd.layer[k - 1];
      for (std::size_t s = 0; s < stages.size(); ++s) {
        auto vectors = ema_vectors(lay, s, cfg.quant.pairing);
        std::vector<quant::Assignment> assigned;
        for (std::size_t m = 0; m < kModalities; ++m) assigned.push_back({lay[m].codes[s], vectors[m]});
        quant::mmema_update(stages[s], assigned, weights);
        const Tensor candidates =
            cfg.quant.pairing == Pairing::kPaired ? vectors[0] : numgrad::concat_rows(vectors);
        quant::reseed_dead_codes(stages[s], candidates, model.rng, cfg.quant.dead_threshold);
      }
    }
  }
  return sm;
}

// ---- inference -----------------------------------------------------------

CodeMode parse_code_mode(const std::string& s) {
  if (s == "only1") return CodeMode::kOnly1;
  if (s == "both") return CodeMode::kBoth;
  throw ConfigError("unknown mode '" + s + "' (only1, both)");
}

std::string to_string(CodeMode m) { return m == CodeMode::kOnly1 ? "only1" : "both"; }

GeneralCodes extract_general_codes(SrcidModel& model, const Batch& batch, CodeMode mode) {
  const std::size_t K = mode == CodeMode::kBoth ? 2 : 1;
  if (K > model.layers()) throw ConfigError("mode=both needs a two-layer model");
  Tape tape;
  Forward fwd = encode_all(tape, model, batch, K);
  GeneralCodes out;
  const std::size_t rows = batch.batch * batch.steps;
  for (std::size_t m = 0; m < kModalities; ++m) {
    std::vector<Tensor> parts;
    for (std::size_t k = 0; k < K; ++k) parts.push_back(fwd.layer[k][m].zhat.value());
    out.embeddings[m] = numgrad::concat_cols(parts);
    out.codes[m].assign(rows, {});
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t k = 0; k < K; ++k) out.codes[m][r].push_back(fwd.layer[k][m].codes[0][r]);
  }
  return out;
}

// ---- checkpoint ----------------------------------------------------------

namespace {
constexpr char kMagic[5] = "SRCK";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const SrcidModel& model, const GateState& gate, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open for writing: " + path);
  io::write_magic(os, kMagic, kVersion);
  io::write_string(os, config_to_text(model.config()));
  io::write_u64(os, model.epochs_trained);
  model.params.save(os);
  model.club.save(os);
  io::write_u32(os, static_cast<std::uint32_t>(model.codebooks.size()));
  for (std::size_t k = 0; k < model.codebooks.size(); ++k) {
    io::write_u32(os, model.codebook_ready[k] ? 1u : 0u);
    io::write_u32(os, static_cast<std::uint32_t>(model.codebooks[k].size()));
    for (const auto& cb : model.codebooks[k]) quant::save_codebook(os, cb);
  }
  model.opt.save(os);
  model.club_opt.save(os);
  io::write_u64(os, gate.epoch);
  io::write_f64_vector(os, std::vector<double>(gate.history.begin(), gate.history.end()));
  io::write_u32(os, gate.layer2_active ? 1u : 0u);
  io::write_i32(os, static_cast<std::int32_t>(gate.activation_epoch));
  std::ostringstream rs;
  rs << model.rng;
  io::write_string(os, rs.str());
  if (!os) throw FormatError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint: " + path);
  io::read_magic(is, kMagic, kVersion);
  Config cfg;
  apply_config_text(cfg, io::read_string(is), path + " (embedded config)");
  Checkpoint ck{SrcidModel(cfg), GateState{}};
  SrcidModel& m = ck.model;
  m.epochs_trained = io::read_u64(is);
  auto check_same_layout = [&](const ParamStore& fresh, const ParamStore& loaded, const char* what) {
    auto a = fresh.begin();
    auto b = loaded.begin();
    for (; a != fresh.end() && b != loaded.end(); ++a, ++b)
      if ((*a)->name != (*b)->name || !(*a)->value.same_shape((*b)->value))
        throw FormatError(std::string(what) + " parameter layout does not match the embedded config");
    if (fresh.size() != loaded.size())
      throw FormatError(std::string(what) + " parameter count does not match the embedded config");
  };
  ParamStore params = ParamStore::load(is);
  check_same_layout(m.params, params, "main");
  m.params = std::move(params);
  ParamStore club = ParamStore::load(is);
  check_same_layout(m.club, club, "CLUB");
  m.club = std::move(club);
  const auto layers = io::read_u32(is);
  if (layers != m.codebooks.size()) throw FormatError("checkpoint layer count mismatch");
  for (std::size_t k = 0; k < layers; ++k) {
    m.codebook_ready[k] = io::read_u32(is) != 0;
    const auto stages = io::read_u32(is);
    if (stages != m.codebooks[k].size()) throw FormatError("checkpoint codebook stage count mismatch");
    for (auto& cb : m.codebooks[k]) cb = quant::load_codebook(is);
  }
  m.opt = numgrad::Optimizer::load(is);
  m.club_opt = numgrad::Optimizer::load(is);
  ck.gate.epoch = io::read_u64(is);
  const auto hist = io::read_f64_vector(is);
  ck.gate.history.assign(hist.begin(), hist.end());
  ck.gate.layer2_active = io::read_u32(is) != 0;
  ck.gate.activation_epoch = io::read_i32(is);
  std::istringstream rs(io::read_string(is));
  rs >> m.rng;
  if (!is || !rs) throw FormatError("truncated checkpoint: " + path);
  return ck;
}

}  // namespace srcid::model
