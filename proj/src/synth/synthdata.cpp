#include "srcid/synth/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "srcid/error.hpp"
#include "srcid/io/binary.hpp"
#include "srcid/numgrad/nn.hpp"

namespace srcid::synth {

namespace {

using numgrad::Rng;

constexpr std::uint64_t kMixSalt = 0x6d69786d6170ULL;
constexpr std::uint64_t kSampleSalt = 0x73616d706c65ULL;
constexpr std::uint64_t kSplitSalt = 0x73706c6974ULL;

Rng derived_rng(std::uint64_t seed, std::uint64_t salt, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

int draw(const std::vector<double>& p, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng), acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (x < acc) return static_cast<int>(i);
  }
  return static_cast<int>(p.size() - 1);
}

}  // namespace

void GeneratorSpec::validate() const {
  if (coarse_classes < 2) throw ConfigError("data.coarse_classes must be >= 2");
  if (fine_classes < coarse_classes) throw ConfigError("data.fine_classes must be >= data.coarse_classes");
  if (steps < 1) throw ConfigError("data.steps must be >= 1");
  for (std::size_t m = 0; m < kModalities; ++m)
    if (dims[m] < 1) throw ConfigError("data.dim_" + std::to_string(m) + " must be >= 1");
  if (semantic_dim < 1) throw ConfigError("data.semantic_dim must be >= 1");
  if (nuisance_dim < 1) throw ConfigError("data.nuisance_dim must be >= 1");
  if (nuisance_classes < 1) throw ConfigError("data.nuisance_classes must be >= 1");
  if (!(temperature > 0.0)) throw ConfigError("data.temperature must be > 0");
  if (!(noise >= 0.0)) throw ConfigError("data.noise must be >= 0");
  if (!(nuisance_weight >= 0.0)) throw ConfigError("data.nuisance_weight must be >= 0");
}

const char* to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

std::vector<std::size_t> Dataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].split == s) out.push_back(i);
  return out;
}

std::array<std::size_t, 3> Dataset::split_sizes() const {
  std::array<std::size_t, 3> n{};
  for (const auto& s : samples) ++n[static_cast<std::size_t>(s.split)];
  return n;
}

Mixing make_mixing(const GeneratorSpec& spec) {
  Rng rng = derived_rng(spec.seed, kMixSalt, 0);
  Mixing mx;
  mx.fine_emb = numgrad::normal(spec.fine_classes, spec.semantic_dim, 1.0, rng);
  for (std::size_t m = 0; m < kModalities; ++m) {
    mx.nuisance_emb[m] = numgrad::normal(spec.nuisance_classes, spec.nuisance_dim, 1.0, rng);
    mx.a[m] = numgrad::normal(spec.dims[m], spec.semantic_dim,
                              1.0 / std::sqrt(static_cast<double>(spec.semantic_dim)), rng);
    mx.b[m] = numgrad::normal(spec.dims[m], spec.nuisance_dim,
                              1.0 / std::sqrt(static_cast<double>(spec.nuisance_dim)), rng);
  }
  return mx;
}

std::vector<double> fine_transition(const GeneratorSpec& spec, int coarse, int prev) {
  std::vector<double> p(spec.fine_classes);
  double mx = -1e300;
  for (std::size_t f = 0; f < p.size(); ++f) {
    double logit = 0.0;
    if (static_cast<int>(f % spec.coarse_classes) == coarse) logit += spec.coherence;
    if (prev >= 0 && static_cast<int>(f) == prev) logit += spec.stay;
    p[f] = logit / spec.temperature;
    mx = std::max(mx, p[f]);
  }
  double z = 0.0;
  for (double& v : p) z += (v = std::exp(v - mx));
  for (double& v : p) v /= z;
  return p;
}

Dataset generate(const GeneratorSpec& spec, std::size_t n_samples) {
  spec.validate();
  if (n_samples < 1) throw ConfigError("data.samples must be >= 1");
  const Mixing mx = make_mixing(spec);
  Dataset ds;
  ds.spec = spec;
  ds.samples.resize(n_samples);
  const auto n = static_cast<std::int64_t>(n_samples);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    Rng rng = derived_rng(spec.seed, kSampleSalt, static_cast<std::uint64_t>(i));
    Sample& s = ds.samples[static_cast<std::size_t>(i)];
    s.coarse = std::uniform_int_distribution<int>(0, static_cast<int>(spec.coarse_classes) - 1)(rng);
    std::uniform_int_distribution<int> nuis(0, static_cast<int>(spec.nuisance_classes) - 1);
    for (auto& v : s.nuisance) v = nuis(rng);
    s.fine.resize(spec.steps);
    int prev = -1;
    for (auto& f : s.fine) prev = f = draw(fine_transition(spec, s.coarse, prev), rng);
    std::normal_distribution<double> eps(0.0, 1.0);
    for (std::size_t m = 0; m < kModalities; ++m) {
      const Tensor& a = mx.a[m];
      const Tensor& b = mx.b[m];
      const auto ne = mx.nuisance_emb[m].row(static_cast<std::size_t>(s.nuisance[m]));
      std::vector<double> nuis_part(spec.dims[m], 0.0);
      for (std::size_t d = 0; d < spec.dims[m]; ++d)
        for (std::size_t k = 0; k < spec.nuisance_dim; ++k) nuis_part[d] += b(d, k) * ne[k];
      Tensor x(spec.steps, spec.dims[m]);
      for (std::size_t t = 0; t < spec.steps; ++t) {
        const auto fe = mx.fine_emb.row(static_cast<std::size_t>(s.fine[t]));
        for (std::size_t d = 0; d < spec.dims[m]; ++d) {
          double v = 0.0;
          for (std::size_t k = 0; k < spec.semantic_dim; ++k) v += a(d, k) * fe[k];
          x(t, d) = v + spec.nuisance_weight * nuis_part[d];
        }
      }
      // Noise is drawn after the clean signal so sigma = 0 leaves rng use unchanged.
      for (double& v : x.values()) v += spec.noise * eps(rng);
      s.x[m] = std::move(x);
    }
  }
  return ds;
}

void split(Dataset& ds, const std::array<double, 3>& fractions, std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ConfigError("split fractions must be >= 0");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  const std::size_t n = ds.samples.size();
  constexpr std::size_t S = 3;

  auto largest_remainder = [&](std::size_t count) {
    std::array<std::size_t, S> out{};
    std::array<double, S> rem{};
    std::size_t used = 0;
    for (std::size_t s = 0; s < S; ++s) {
      const double ideal = fractions[s] * static_cast<double>(count);
      out[s] = static_cast<std::size_t>(std::floor(ideal + 1e-9));
      rem[s] = ideal - static_cast<double>(out[s]);
      used += out[s];
    }
    std::array<std::size_t, S> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rem[a] > rem[b]; });
    for (std::size_t k = 0; used < count; ++k, ++used) ++out[order[k % S]];
    return out;
  };

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[ds.samples[i].coarse].push_back(i);

  // Per-class floors, then hand out each class's leftover samples to the
  // splits furthest below their totals (Gale-Ryser greedy, one per cell).
  const auto totals = largest_remainder(n);
  std::array<std::ptrdiff_t, S> deficit{};
  struct Row {
    int cls;
    std::array<std::size_t, S> count;
    std::size_t extra;
  };
  std::vector<Row> rows;
  for (std::size_t s = 0; s < S; ++s) deficit[s] = static_cast<std::ptrdiff_t>(totals[s]);
  for (auto& [cls, members] : by_class) {
    Row r{cls, {}, members.size()};
    for (std::size_t s = 0; s < S; ++s) {
      r.count[s] = static_cast<std::size_t>(
          std::floor(fractions[s] * static_cast<double>(members.size()) + 1e-9));
      r.extra -= r.count[s];
      deficit[s] -= static_cast<std::ptrdiff_t>(r.count[s]);
    }
    rows.push_back(r);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.extra > b.extra; });
  for (Row& r : rows) {
    std::array<std::size_t, S> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return deficit[a] > deficit[b]; });
    for (std::size_t k = 0; k < r.extra; ++k) {
      ++r.count[order[k]];
      --deficit[order[k]];
    }
  }

  for (const Row& r : rows) {
    auto members = by_class[r.cls];
    Rng rng = derived_rng(seed, kSplitSalt, static_cast<std::uint64_t>(r.cls));
    std::shuffle(members.begin(), members.end(), rng);
    std::size_t pos = 0;
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t k = 0; k < r.count[s]; ++k) ds.samples[members[pos++]].split = static_cast<Split>(s);
  }
}

namespace {
constexpr char kMagic[5] = "SRDS";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open for writing: " + path);
  const auto& sp = ds.spec;
  io::write_magic(os, kMagic, kVersion);
  io::write_u64(os, sp.coarse_classes);
  io::write_u64(os, sp.fine_classes);
  io::write_u64(os, sp.steps);
  for (auto d : sp.dims) io::write_u64(os, d);
  io::write_u64(os, sp.semantic_dim);
  io::write_u64(os, sp.nuisance_dim);
  io::write_u64(os, sp.nuisance_classes);
  io::write_f64(os, sp.nuisance_weight);
  io::write_f64(os, sp.coherence);
  io::write_f64(os, sp.stay);
  io::write_f64(os, sp.temperature);
  io::write_f64(os, sp.noise);
  io::write_u64(os, sp.seed);
  io::write_u64(os, ds.samples.size());
  for (const auto& s : ds.samples) {
    io::write_i32(os, s.coarse);
    io::write_u32(os, static_cast<std::uint32_t>(s.split));
    for (int v : s.nuisance) io::write_i32(os, v);
    io::write_i32_vector(os, s.fine);
    for (const auto& x : s.x) io::write_tensor(os, x);
  }
  if (!os) throw FormatError("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open dataset: " + path);
  io::read_magic(is, kMagic, kVersion);
  Dataset ds;
  auto& sp = ds.spec;
  sp.coarse_classes = io::read_u64(is);
  sp.fine_classes = io::read_u64(is);
  sp.steps = io::read_u64(is);
  for (auto& d : sp.dims) d = io::read_u64(is);
  sp.semantic_dim = io::read_u64(is);
  sp.nuisance_dim = io::read_u64(is);
  sp.nuisance_classes = io::read_u64(is);
  sp.nuisance_weight = io::read_f64(is);
  sp.coherence = io::read_f64(is);
  sp.stay = io::read_f64(is);
  sp.temperature = io::read_f64(is);
  sp.noise = io::read_f64(is);
  sp.seed = io::read_u64(is);
  const std::uint64_t n = io::read_u64(is);
  ds.samples.resize(n);
  for (auto& s : ds.samples) {
    s.coarse = io::read_i32(is);
    const auto split_tag = io::read_u32(is);
    if (split_tag > 2) throw FormatError("bad split tag in " + path);
    s.split = static_cast<Split>(split_tag);
    for (int& v : s.nuisance) v = io::read_i32(is);
    s.fine = io::read_i32_vector(is);
    for (std::size_t m = 0; m < kModalities; ++m) {
      s.x[m] = io::read_tensor(is);
      if (s.x[m].rows() != sp.steps || s.x[m].cols() != sp.dims[m])
        throw FormatError("feature shape mismatch in " + path);
    }
    if (s.fine.size() != sp.steps) throw FormatError("fine label length mismatch in " + path);
  }
  return ds;
}

double empirical_mi(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw ShapeError("empirical_mi: length mismatch");
  if (a.empty()) return 0.0;
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pa, pb;
  const double w = 1.0 / static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += w;
    pa[a[i]] += w;
    pb[b[i]] += w;
  }
  double mi = 0.0;
  for (const auto& [k, p] : joint) mi += p * std::log(p / (pa[k.first] * pb[k.second]));
  return std::max(0.0, mi);
}

}  // namespace srcid::synth
