#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "srcid/synth/synthdata.hpp"

namespace srcid::model {

struct DataConfig {
  synth::GeneratorSpec spec;
  std::size_t samples = 1000;
  std::array<double, 3> fractions{0.8, 0.1, 0.1};
};

struct ModelConfig {
  std::size_t latent = 16;        // general feature / codebook dimension
  std::size_t hidden = 64;        // encoder, decoder and CLUB MLP width
  std::size_t context = 32;       // CPC LSTM state size
  std::size_t horizon = 3;        // CPC prediction steps R
  std::size_t layers = 2;         // 1 or 2
  std::size_t specific_dim = 0;   // 0: max(8, D_m / 2) per modality
};

struct LossConfig {
  double beta = 0.25;
  double recon = 1.0;
  double commit = 1.0;
  double cpc = 1.0;
  double cmcm = 0.0;
  double mi = 0.05;
  bool club_layer1 = true;
  bool club_layer2 = true;
  // Each modality's CLUB estimate enters the loss as max(0, estimate).
  bool mi_floor = true;
  // Encoders the CLUB term reaches: "both", or "specific" (general features
  // enter the estimate through a stop-gradient).
  std::string mi_grad = "both";
};

enum class QuantKind { kVq, kRvq, kFsq };

struct QuantMethod {
  QuantKind kind = QuantKind::kVq;
  std::size_t stages = 1;  // RVQ depth

  static QuantMethod parse(const std::string& s);  // vq | fsq | rvq-<k>
  std::string str() const;
  bool operator==(const QuantMethod&) const = default;
};

enum class Pairing { kPaired, kIndependent };

struct QuantConfig {
  QuantMethod method;
  std::size_t codebook_size = 64;
  double decay = 0.99;
  double laplace = 1e-5;
  double dead_threshold = 1e-3;
  std::vector<int> fsq_levels{3, 3, 3, 3};
  // paired: every modality's assignment carries the cross-modal mean of the
  // paired general features; independent: each modality its own features.
  Pairing pairing = Pairing::kPaired;
};

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch = 32;
  std::string optimizer = "adam";
  double lr = 1e-3;
  double club_lr = 1e-3;
  std::size_t warm_min = 20;
  double tau = 0.01;
  std::size_t patience = 3;
  std::uint64_t seed = 1;
};

struct EvalConfig {
  std::size_t probe_iterations = 300;
  double probe_lr = 0.05;
  std::vector<int> ks{1, 5, 10};
};

struct Config {
  DataConfig data;
  ModelConfig model;
  LossConfig loss;
  QuantConfig quant;
  TrainConfig train;
  EvalConfig eval;

  void validate() const;  // ConfigError naming the key
};

// One documented key of the flat config format.
struct ConfigField {
  std::string key;
  std::string doc;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const std::string&)> set;
};

const std::vector<ConfigField>& config_fields();

// Throws ConfigError for unknown keys or unparseable values.
void set_config_value(Config& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const Config& cfg, const std::string& key);

// "key = value" lines; '#' starts a comment. Errors carry "<source>:<line>:".
void apply_config_text(Config& cfg, const std::string& text, const std::string& source);
void apply_config_file(Config& cfg, const std::string& path);

// Every key in registry order, one "key = value" line each.
std::string config_to_text(const Config& cfg);
// Same, with each key's documentation as a preceding comment.
std::string config_reference(const Config& cfg);
// FNV-1a of config_to_text, hex.
std::string config_digest(const Config& cfg);

}  // namespace srcid::model
