#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "srcid/numgrad/tensor.hpp"

namespace srcid::synth {

using numgrad::Tensor;

inline constexpr std::size_t kModalities = 3;

// Paired tri-modal generator. Per clip: a coarse class c, a fine-label chain
// f_1..f_T and one nuisance class per modality. Per step and modality:
//   x^m_t = A^m emb(f_t) + w_nuis * B^m emb_m(nuis^m) + sigma * eps.
// Fine transitions favour labels with f % C_coarse == c:
//   P(f' | f, c) ~ exp((coherence * [f' % C == c] + stay * [f' == f]) / temperature)
// and f_1 is drawn from the same law without the stay term.
struct GeneratorSpec {
  std::size_t coarse_classes = 10;
  std::size_t fine_classes = 25;
  std::size_t steps = 10;
  std::array<std::size_t, kModalities> dims{48, 32, 24};
  std::size_t semantic_dim = 16;
  std::size_t nuisance_dim = 8;
  std::size_t nuisance_classes = 4;
  double nuisance_weight = 1.0;
  double coherence = 3.0;
  double stay = 1.0;
  double temperature = 1.0;
  double noise = 0.1;
  std::uint64_t seed = 7;

  void validate() const;  // ConfigError
  bool operator==(const GeneratorSpec&) const = default;
};

enum class Split : std::uint8_t { kTrain = 0, kVal = 1, kTest = 2 };
const char* to_string(Split s);

struct Sample {
  std::array<Tensor, kModalities> x;  // T x D_m each
  int coarse = 0;
  std::vector<int> fine;  // length T
  std::array<int, kModalities> nuisance{};
  Split split = Split::kTrain;
  bool operator==(const Sample&) const = default;
};

struct Dataset {
  GeneratorSpec spec;
  std::vector<Sample> samples;

  std::vector<std::size_t> indices(Split s) const;
  std::array<std::size_t, 3> split_sizes() const;
  bool operator==(const Dataset&) const = default;
};

// Fixed per-seed mixing maps: A^m (D_m x semantic_dim), B^m (D_m x nuisance_dim)
// and the label embeddings.
struct Mixing {
  Tensor fine_emb;                                // fine_classes x semantic_dim
  std::array<Tensor, kModalities> nuisance_emb;   // nuisance_classes x nuisance_dim
  std::array<Tensor, kModalities> a;
  std::array<Tensor, kModalities> b;
};
Mixing make_mixing(const GeneratorSpec& spec);

// Fine-label transition probabilities out of `prev` (or the initial law when
// prev < 0) for coarse class c.
std::vector<double> fine_transition(const GeneratorSpec& spec, int coarse, int prev);

// Samples are generated independently (in parallel) from per-sample seeds
// derived from spec.seed, so the result does not depend on the thread count.
// All samples start in the train split.
Dataset generate(const GeneratorSpec& spec, std::size_t n_samples);

// Stratified by coarse label. Split totals follow largest-remainder
// apportionment of n; per-class counts are within one of n_c * fraction.
// Throws ConfigError unless fractions are >= 0 and sum to 1 within 1e-9.
void split(Dataset& ds, const std::array<double, 3>& fractions, std::uint64_t seed);

// "SRDS" container: spec header then per-sample labels and arrays.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

// Plug-in mutual information (nats) of two label sequences.
double empirical_mi(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace srcid::synth
