#include "srcid/mi/cpc.hpp"

#include <string>

#include "srcid/error.hpp"

namespace srcid::mi {

std::string CpcState::lstm_name(std::size_t m, const char* part) const {
  return prefix + ".lstm" + std::to_string(m) + "." + part;
}

std::string CpcState::w_name(std::size_t m, std::size_t r) const {
  return prefix + ".w" + std::to_string(m) + "." + std::to_string(r);
}

void CpcState::init(ParamStore& ps, numgrad::Rng& rng) const {
  const std::size_t H = context;
  for (std::size_t m = 0; m < modalities; ++m) {
    ps.add(lstm_name(m, "wx"), numgrad::glorot(latent, 4 * H, rng));
    ps.add(lstm_name(m, "wh"), numgrad::glorot(H, 4 * H, rng));
    Tensor b(1, 4 * H);
    for (std::size_t j = H; j < 2 * H; ++j) b[j] = 1.0;  // forget gate
    ps.add(lstm_name(m, "b"), std::move(b));
    for (std::size_t r = 1; r <= horizon; ++r)
      ps.add(w_name(m, r), numgrad::glorot(latent, H, rng));
  }
}

std::vector<Var> cpc_contexts(Tape& tape, const CpcState& st, ParamStore& ps, std::size_t m,
                              Var z, std::size_t batch, std::size_t upto) {
  using namespace numgrad;
  if (batch == 0 || z.rows() % batch != 0 || upto * batch > z.rows())
    throw ShapeError("cpc_contexts: sequence " + z.value().shape_str() + " with batch " +
                     std::to_string(batch) + " cannot provide " + std::to_string(upto) + " steps");
  if (z.cols() != st.latent) throw ShapeError("cpc_contexts: latent dim mismatch");
  const std::size_t H = st.context;
  Var wx = tape.param(ps, st.lstm_name(m, "wx"));
  Var wh = tape.param(ps, st.lstm_name(m, "wh"));
  Var b = tape.param(ps, st.lstm_name(m, "b"));
  std::vector<Var> hs;
  Var h{}, c{};
  for (std::size_t t = 0; t < upto; ++t) {
    Var x = slice_rows(z, t * batch, batch);
    Var pre = add_row(matmul(x, wx), b);
    if (t > 0) pre = pre + matmul(h, wh);
    Var i = sigmoid(slice_cols(pre, 0, H));
    Var f = sigmoid(slice_cols(pre, H, H));
    Var g = tanh(slice_cols(pre, 2 * H, H));
    Var o = sigmoid(slice_cols(pre, 3 * H, H));
    c = t == 0 ? i * g : f * c + i * g;
    h = o * tanh(c);
    hs.push_back(h);
  }
  return hs;
}

Tensor cpc_context(const CpcState& st, ParamStore& ps, std::size_t m, const Tensor& z_seq) {
  if (z_seq.rows() == 0) throw ShapeError("cpc_context: empty sequence");
  Tape tape;
  auto hs = cpc_contexts(tape, st, ps, m, tape.constant(z_seq), 1, z_seq.rows());
  std::vector<Tensor> rows;
  for (const auto& h : hs) rows.push_back(h.value());
  return numgrad::concat_rows(rows);
}

Var infonce(Var predictions, Var candidates, std::span<const int> labels) {
  return numgrad::softmax_xent(numgrad::matmul_nt(predictions, candidates), labels);
}

Var cpc_pair_loss(Tape& tape, const CpcState& st, ParamStore& ps, std::size_t m,
                  std::span<const Var> contexts_m, Var z_n, std::size_t batch, std::size_t t) {
  using namespace numgrad;
  const std::size_t T = z_n.rows() / batch;
  if (t < 1 || t + st.horizon > T)
    throw ShapeError("cpc_pair_loss: t=" + std::to_string(t) + " outside [1, " +
                     std::to_string(T - st.horizon) + "]");
  if (contexts_m.size() < t) throw ShapeError("cpc_pair_loss: context not computed up to t");
  if (batch < 2) throw ShapeError("cpc_pair_loss: in-batch negatives need batch >= 2");
  std::vector<int> labels(batch);
  for (std::size_t i = 0; i < batch; ++i) labels[i] = static_cast<int>(i);
  Var ctx = contexts_m[t - 1];
  Var total{};
  for (std::size_t r = 1; r <= st.horizon; ++r) {
    Var pred = matmul_nt(ctx, tape.param(ps, st.w_name(m, r)));
    Var cand = slice_rows(z_n, (t + r - 1) * batch, batch);
    Var term = infonce(pred, cand, labels);
    total = r == 1 ? term : total + term;
  }
  return scale(total, 1.0 / static_cast<double>(st.horizon));
}

double cpc_infonce_loss(const CpcState& st, ParamStore& ps, std::size_t m, const Tensor& context_t,
                        std::span<const Tensor> positives, std::span<const Tensor> negatives) {
  if (positives.size() != st.horizon || negatives.size() != st.horizon)
    throw ShapeError("cpc_infonce_loss: need one positive and one negative set per step");
  Tape tape;
  Var ctx = tape.constant(context_t);
  const int label = 0;
  double total = 0.0;
  for (std::size_t r = 1; r <= st.horizon; ++r) {
    if (negatives[r - 1].rows() == 0) throw ShapeError("cpc_infonce_loss: empty negative set");
    Tensor cand = numgrad::concat_rows(std::vector<Tensor>{positives[r - 1], negatives[r - 1]});
    Var pred = numgrad::matmul_nt(ctx, tape.param(ps, st.w_name(m, r)));
    total += infonce(pred, tape.constant(std::move(cand)), std::span(&label, 1)).value().item();
  }
  return total / static_cast<double>(st.horizon);
}

}  // namespace srcid::mi
