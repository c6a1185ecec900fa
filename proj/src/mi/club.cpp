#include "srcid/mi/club.hpp"

#include <cmath>
#include <numbers>

#include "srcid/error.hpp"

namespace srcid::mi {

numgrad::Mlp ClubNet::mlp() const { return numgrad::Mlp(prefix, z_dim, hidden, 2 * zbar_dim); }

void ClubNet::init(ParamStore& ps, numgrad::Rng& rng) const { mlp().init(ps, rng); }

ClubNet::Gaussian ClubNet::predict(Tape& tape, ParamStore& ps, Var z) const {
  if (z.cols() != z_dim)
    throw ShapeError("club net " + prefix + ": input " + z.value().shape_str() + " but z_dim " +
                     std::to_string(z_dim));
  Var out = mlp().forward(tape, ps, z);
  Var mu = numgrad::slice_cols(out, 0, zbar_dim);
  Var raw = numgrad::slice_cols(out, zbar_dim, zbar_dim);
  Var logvar = numgrad::scale(numgrad::tanh(numgrad::scale(raw, 1.0 / kLogVarBound)), kLogVarBound);
  return {mu, logvar};
}

Var club_loglik(Tape& tape, const ClubNet& net, ParamStore& ps, Var z, Var zbar) {
  auto [mu, logvar] = net.predict(tape, ps, z);
  numgrad::require_same_shape(mu.value(), zbar.value(), "club_loglik");
  using namespace numgrad;
  Var inv_var = exp(-logvar);
  Var per_dim = square(zbar - mu) * inv_var + logvar;
  const double log2pi = std::log(2.0 * std::numbers::pi);
  Var nll = add_scalar(scale(row_sum(per_dim), 0.5),
                       0.5 * static_cast<double>(net.zbar_dim) * log2pi);
  return -mean(nll);
}

Var club_mi_estimate(Tape& tape, const ClubNet& net, ParamStore& ps, Var z, Var zbar,
                     std::size_t block_rows) {
  if (block_rows < 2) throw ShapeError("club_mi_estimate: need at least 2 paired samples per block");
  using namespace numgrad;
  auto [mu, logvar] = net.predict(tape, ps, z);
  require_same_shape(mu.value(), zbar.value(), "club_mi_estimate");
  // The log-variance and normalizer terms cancel between the two averages.
  Var inv_var = exp(-logvar);
  Var positive = square(zbar - mu);
  Var m1 = block_mean(zbar, block_rows);
  Var m2 = block_mean(square(zbar), block_rows);
  Var negative = m2 - scale(mu * m1, 2.0) + square(mu);
  Var diff = (negative - positive) * inv_var;
  return scale(mean(row_sum(diff)), 0.5);
}

double club_mi_value(const ClubNet& net, ParamStore& ps, const Tensor& z, const Tensor& zbar,
                     std::size_t block_rows) {
  Tape tape;
  return club_mi_estimate(tape, net, ps, tape.constant(z), tape.constant(zbar), block_rows)
      .value()
      .item();
}

double club_loglik_value(const ClubNet& net, ParamStore& ps, const Tensor& z, const Tensor& zbar) {
  Tape tape;
  return club_loglik(tape, net, ps, tape.constant(z), tape.constant(zbar)).value().item();
}

ClubStep train_club_adversarial_step(const ClubNet& net, ParamStore& ps, numgrad::Optimizer& opt,
                                     const Tensor& z, const Tensor& zbar, std::size_t block_rows) {
  ClubStep out;
  {
    Tape tape;
    Var ll = club_loglik(tape, net, ps, tape.constant(z), tape.constant(zbar));
    out.loglik = ll.value().item();
    ps.zero_grads();
    tape.backward(-ll);
    opt.step(ps);
    ps.zero_grads();
  }
  out.mi_estimate = club_mi_value(net, ps, z, zbar, block_rows);
  return out;
}

}  // namespace srcid::mi
