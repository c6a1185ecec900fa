#pragma once

#include <array>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "srcid/mi/club.hpp"
#include "srcid/mi/cpc.hpp"
#include "srcid/model/config.hpp"
#include "srcid/numgrad/optim.hpp"
#include "srcid/quantize/codebook.hpp"
#include "srcid/quantize/quantizers.hpp"
#include "srcid/synth/synthdata.hpp"

namespace srcid::model {

using numgrad::ParamStore;
using numgrad::Tape;
using numgrad::Tensor;
using numgrad::Var;

inline constexpr std::size_t kModalities = 3;
inline constexpr std::size_t kMaxLayers = 2;

// Clips stacked time-major: row t * batch + i is step t of clip i.
struct Batch {
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::array<Tensor, kModalities> x;
  std::vector<int> coarse;                            // per clip
  std::vector<int> fine;                              // per row
  std::array<std::vector<int>, kModalities> nuisance; // per clip
};

// Throws ShapeError when a clip is missing a modality or lengths differ.
Batch make_batch(const synth::Dataset& ds, std::span<const std::size_t> indices);

// Activations of one modality at one layer.
struct LayerForward {
  Var input;
  Var z;     // general
  Var zbar;  // specific
  Var zhat;  // quantized general (straight-through)
  Var fsq_pre;                           // FSQ only: projected input to the grid
  Tensor quantized;                      // value fed forward by zhat (VQ/RVQ) or the grid (FSQ)
  std::vector<std::vector<int>> codes;   // [stage][row]
  std::vector<Tensor> stage_inputs;      // what each stage quantized
};

struct Forward {
  std::size_t layers = 0;
  std::size_t batch = 0;
  std::vector<std::array<LayerForward, kModalities>> layer;  // [k - 1][m]
};

struct TermValues {
  double recon = 0.0;
  double commit = 0.0;
  double cpc = 0.0;
  double cmcm = 0.0;
  double mi = 0.0;
};

// Unweighted per-layer terms. A term that is switched off has no node.
struct LayerTerms {
  Var recon, commit, cpc, cmcm, mi;
  bool has_commit = false, has_cmcm = false, has_mi = false;
  double mi_raw = 0.0;  // sum of unclipped estimates
  TermValues values() const;
};

class SrcidModel;
using CmcmHook = std::function<Var(Tape&, SrcidModel&, const Forward&, std::size_t layer)>;

struct GateState {
  std::size_t epoch = 0;          // completed epochs
  std::deque<double> history;     // last `patience` epoch means of layer-1 MI
  bool layer2_active = false;
  long activation_epoch = -1;     // epoch count at activation
  bool operator==(const GateState&) const = default;
};

// Records one finished epoch. Activates when epoch >= warm_min and the last
// `patience` means are all below tau; never deactivates. With the layer-1
// CLUB term disabled the MI condition is vacuous.
GateState update_gate(GateState gate, double mi_layer1, const Config& cfg);

class SrcidModel {
 public:
  explicit SrcidModel(const Config& cfg);

  const Config& config() const { return cfg_; }
  std::size_t layers() const { return cfg_.model.layers; }
  std::size_t in_dim(std::size_t m, std::size_t k) const;
  std::size_t specific_dim(std::size_t m, std::size_t k) const;
  std::size_t latent() const { return cfg_.model.latent; }

  std::string prefix(std::size_t m, std::size_t k, const char* part) const;
  numgrad::Mlp general_encoder(std::size_t m, std::size_t k) const;
  numgrad::Mlp specific_encoder(std::size_t m, std::size_t k) const;
  numgrad::Mlp decoder(std::size_t m, std::size_t k) const;
  mi::ClubNet club_net(std::size_t m, std::size_t k) const;
  const mi::CpcState& cpc(std::size_t k) const { return cpc_[k - 1]; }
  quant::FsqSpec fsq_spec() const { return {cfg_.quant.fsq_levels}; }

  // Names of parameters owned by layer k (main store).
  std::vector<std::string> layer_params(std::size_t k) const;

  ParamStore params;  // encoders, decoders, CPC, FSQ projections
  ParamStore club;    // CLUB nets
  std::vector<std::vector<quant::Codebook>> codebooks;  // [k - 1][stage], shared by modalities
  std::array<bool, kMaxLayers> codebook_ready{false, false};
  numgrad::Optimizer opt;
  numgrad::Optimizer club_opt;
  numgrad::Rng rng;
  std::size_t epochs_trained = 0;
  CmcmHook cmcm;

 private:
  Config cfg_;
  std::vector<mi::CpcState> cpc_;
};

// Layers 1..layers. Layer 1 reads the raw features, layer 2 reads layer 1's
// specific output; general features are quantized against the layer's
// shared quantizer.
Forward encode_all(Tape& tape, SrcidModel& model, const Batch& batch, std::size_t layers);

LayerTerms layer_losses(Tape& tape, SrcidModel& model, const Forward& fwd, std::size_t k);

struct LossBreakdown {
  Var total;
  std::array<TermValues, kMaxLayers> terms{};
  std::array<double, kMaxLayers> mi_raw{};
  std::size_t active_layers = 1;
};

// Coefficient-weighted sum over active layers; layer 2 is not built while
// the gate is closed. Throws NumericalError naming a non-finite term.
LossBreakdown combine_losses(Tape& tape, SrcidModel& model, const Forward& fwd);
LossBreakdown total_loss(Tape& tape, SrcidModel& model, const Batch& batch, const GateState& gate);

std::size_t active_layers(const SrcidModel& model, const GateState& gate);

// Data initialization of layer k's codebooks from a batch (k-means on pooled
// general features). FSQ has nothing to initialize.
void init_codebooks(SrcidModel& model, const Batch& batch, std::size_t k);

struct StepMetrics {
  std::array<TermValues, kMaxLayers> terms{};
  double total = 0.0;
  std::array<double, kMaxLayers> club_loglik{};
  std::array<double, kMaxLayers> mi_estimate{};  // unclipped sum over modalities, after the CLUB step
  std::array<std::vector<int>, kMaxLayers> codes;  // stage-0 codes of all modalities
  std::size_t active_layers = 1;
};

// (1) CLUB nets ascend their log-likelihood on detached features,
// (2) the main parameters take one step on the total loss,
// (3) active codebooks take a multimodal EMA step and dead codes are reseeded.
StepMetrics train_step(SrcidModel& model, const Batch& batch, const GateState& gate);

enum class CodeMode { kOnly1, kBoth };
CodeMode parse_code_mode(const std::string& s);
std::string to_string(CodeMode m);

struct GeneralCodes {
  std::array<std::vector<std::vector<int>>, kModalities> codes;  // [m][row] -> 1 or 2 codes
  std::array<Tensor, kModalities> embeddings;                     // rows x (latent * layers used)
};

// only1: layer-1 codes and quantized embeddings; both: layer 1 then layer 2,
// concatenated per step.
GeneralCodes extract_general_codes(SrcidModel& model, const Batch& batch, CodeMode mode);

// "SRCK" checkpoint: config text, parameter stores, codebooks, optimizer
// moments, gate, RNG state.
void save_checkpoint(const SrcidModel& model, const GateState& gate, const std::string& path);
struct Checkpoint {
  SrcidModel model;
  GateState gate;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace srcid::model
