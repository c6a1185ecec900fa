#pragma once

#include <string>

#include "srcid/numgrad/nn.hpp"
#include "srcid/numgrad/optim.hpp"

namespace srcid::mi {

using numgrad::ParamStore;
using numgrad::Tape;
using numgrad::Tensor;
using numgrad::Var;

inline constexpr double kLogVarBound = 10.0;

// Variational Gaussian q(zbar | z) with diagonal covariance, produced by a
// two-layer tanh MLP. The raw log-variance head is squashed to
// 10 * tanh(raw / 10), i.e. into (-10, 10).
struct ClubNet {
  std::string prefix;
  std::size_t z_dim = 0;
  std::size_t zbar_dim = 0;
  std::size_t hidden = 64;

  numgrad::Mlp mlp() const;
  void init(ParamStore& ps, numgrad::Rng& rng) const;

  struct Gaussian {
    Var mu;
    Var logvar;
  };
  Gaussian predict(Tape& tape, ParamStore& ps, Var z) const;
};

// Mean over rows of log q(zbar_r | z_r), including the -ln(2 pi)/2 terms.
Var club_loglik(Tape& tape, const ClubNet& net, ParamStore& ps, Var z, Var zbar);

// Sampled CLUB upper bound. Rows are grouped in consecutive blocks of
// `block_rows` paired samples sharing a time index (time-major layout); the
// negative term pairs every z with every zbar of its block, j == i included:
//   mean_r [ log q(zbar_r | z_r) - mean_{j in block(r)} log q(zbar_j | z_r) ].
// Throws ShapeError when block_rows < 2.
Var club_mi_estimate(Tape& tape, const ClubNet& net, ParamStore& ps, Var z, Var zbar,
                     std::size_t block_rows);

double club_mi_value(const ClubNet& net, ParamStore& ps, const Tensor& z, const Tensor& zbar,
                     std::size_t block_rows);
double club_loglik_value(const ClubNet& net, ParamStore& ps, const Tensor& z, const Tensor& zbar);

struct ClubStep {
  double loglik = 0.0;       // before the update
  double mi_estimate = 0.0;  // after the update
};

// One ascent step of the net on club_loglik over detached (z, zbar), then the
// MI estimate under the updated net. Gradients in `ps` are cleared after use.
ClubStep train_club_adversarial_step(const ClubNet& net, ParamStore& ps, numgrad::Optimizer& opt,
                                     const Tensor& z, const Tensor& zbar, std::size_t block_rows);

}  // namespace srcid::mi
