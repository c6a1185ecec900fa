#include "srcid/quantize/codebook.hpp"

#include <string>

#include "srcid/error.hpp"
#include "srcid/io/binary.hpp"

namespace srcid::quant {

Codebook Codebook::random(std::size_t L, std::size_t D, int layer, double stddev, Rng& rng) {
  return from_entries(numgrad::normal(L, D, stddev, rng), layer);
}

Codebook Codebook::from_entries(Tensor entries, int layer) {
  Codebook cb;
  cb.layer = layer;
  cb.ema_counts.assign(entries.rows(), 1.0);
  cb.ema_sums = entries;
  cb.entries = std::move(entries);
  cb.validate();
  return cb;
}

void Codebook::validate() const {
  if (entries.rows() == 0 || entries.cols() == 0) throw ShapeError("codebook: L and D must be >= 1");
  if (ema_counts.size() != entries.rows() || !ema_sums.same_shape(entries))
    throw ShapeError("codebook: EMA statistics do not match entries " + entries.shape_str());
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("codebook: decay must be in (0, 1]");
  if (!(laplace > 0.0)) throw ConfigError("codebook: laplace smoothing must be > 0");
  if (!entries.all_finite()) throw NumericalError("codebook", "codebook entries are not finite");
}

void save_codebook(std::ostream& os, const Codebook& cb) {
  io::write_magic(os, "SRCB", 1);
  io::write_u32(os, static_cast<std::uint32_t>(cb.size()));
  io::write_u32(os, static_cast<std::uint32_t>(cb.dim()));
  io::write_i32(os, cb.layer);
  io::write_f64(os, cb.decay);
  io::write_f64(os, cb.laplace);
  for (double v : cb.entries.values()) io::write_f64(os, v);
  for (double v : cb.ema_counts) io::write_f64(os, v);
  for (double v : cb.ema_sums.values()) io::write_f64(os, v);
}

Codebook load_codebook(std::istream& is) {
  io::read_magic(is, "SRCB", 1);
  const auto L = io::read_u32(is), D = io::read_u32(is);
  if (L == 0 || D == 0 || static_cast<std::uint64_t>(L) * D > (1u << 26))
    throw FormatError("codebook: bad dimensions");
  Codebook cb;
  cb.layer = io::read_i32(is);
  cb.decay = io::read_f64(is);
  cb.laplace = io::read_f64(is);
  cb.entries = Tensor(L, D);
  for (double& v : cb.entries.values()) v = io::read_f64(is);
  cb.ema_counts.resize(L);
  for (double& v : cb.ema_counts) v = io::read_f64(is);
  cb.ema_sums = Tensor(L, D);
  for (double& v : cb.ema_sums.values()) v = io::read_f64(is);
  cb.validate();
  return cb;
}

bool operator==(const Codebook& a, const Codebook& b) {
  return a.entries == b.entries && a.layer == b.layer && a.ema_counts == b.ema_counts &&
         a.ema_sums == b.ema_sums && a.decay == b.decay && a.laplace == b.laplace;
}

}  // namespace srcid::quant
