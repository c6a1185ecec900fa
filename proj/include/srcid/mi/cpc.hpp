#pragma once

#include <span>
#include <string>
#include <vector>

#include "srcid/numgrad/nn.hpp"

namespace srcid::mi {

using numgrad::ParamStore;
using numgrad::Tape;
using numgrad::Tensor;
using numgrad::Var;

// Cross-modal contrastive predictive coding state for one layer: a
// single-layer unidirectional LSTM per modality and bilinear prediction maps
// W[m][r] (latent x context) for r = 1..horizon.
struct CpcState {
  std::string prefix;
  std::size_t modalities = 3;
  std::size_t latent = 0;
  std::size_t context = 0;
  std::size_t horizon = 3;

  void init(ParamStore& ps, numgrad::Rng& rng) const;
  std::string lstm_name(std::size_t m, const char* part) const;
  std::string w_name(std::size_t m, std::size_t r) const;  // r is 1-based
};

// Hidden states h_1..h_upto of modality m's LSTM over a time-major sequence
// batch `z` ((T*batch) x latent). h_t depends on rows of steps 1..t only.
std::vector<Var> cpc_contexts(Tape& tape, const CpcState& st, ParamStore& ps, std::size_t m,
                              Var z, std::size_t batch, std::size_t upto);

// Context sequence (T x context) of a single sequence (T x latent).
Tensor cpc_context(const CpcState& st, ParamStore& ps, std::size_t m, const Tensor& z_seq);

// -mean over rows of log softmax(pred * candidates^T)[row][labels[row]].
Var infonce(Var predictions, Var candidates, std::span<const int> labels);

// L^{m->n} at 1-based time t with in-batch negatives: for r = 1..R the
// context of sample i at t, mapped through W[m][r], scores every sample's
// z^n at t+r; the paired sample is the positive. Averaged over r.
// Requires 1 <= t <= T - R.
Var cpc_pair_loss(Tape& tape, const CpcState& st, ParamStore& ps, std::size_t m,
                  std::span<const Var> contexts_m, Var z_n, std::size_t batch, std::size_t t);

// Single-query form with explicit negatives: positives[r-1] is z^n_{t+r}
// (1 x latent), negatives[r-1] holds N_neg rows drawn from modality n at t+r.
double cpc_infonce_loss(const CpcState& st, ParamStore& ps, std::size_t m, const Tensor& context_t,
                        std::span<const Tensor> positives, std::span<const Tensor> negatives);

}  // namespace srcid::mi
