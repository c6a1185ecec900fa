#include "srcid/model/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "srcid/error.hpp"
#include "srcid/io/binary.hpp"

namespace srcid::model {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError("expected a number, got '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError("expected a non-negative integer, got '" + s + "'");
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("expected true/false, got '" + s + "'");
}

std::vector<int> to_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto v = to_u64(item);
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw ConfigError("expected a comma-separated integer list");
  return out;
}

std::string from_int_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

template <class T>
ConfigField size_field(std::string key, std::string doc, T Config::*sec, std::size_t T::*member) {
  return {std::move(key), std::move(doc),
          [=](const Config& c) { return std::to_string(c.*sec.*member); },
          [=](Config& c, const std::string& v) { c.*sec.*member = static_cast<std::size_t>(to_u64(v)); }};
}

template <class T>
ConfigField real_field(std::string key, std::string doc, T Config::*sec, double T::*member) {
  return {std::move(key), std::move(doc), [=](const Config& c) { return fmt(c.*sec.*member); },
          [=](Config& c, const std::string& v) { c.*sec.*member = to_double(v); }};
}

template <class T>
ConfigField bool_field(std::string key, std::string doc, T Config::*sec, bool T::*member) {
  return {std::move(key), std::move(doc),
          [=](const Config& c) { return std::string(c.*sec.*member ? "true" : "false"); },
          [=](Config& c, const std::string& v) { c.*sec.*member = to_bool(v); }};
}

// Generator fields live one level deeper.
ConfigField spec_size(std::string key, std::string doc, std::size_t synth::GeneratorSpec::*member) {
  return {std::move(key), std::move(doc),
          [=](const Config& c) { return std::to_string(c.data.spec.*member); },
          [=](Config& c, const std::string& v) { c.data.spec.*member = static_cast<std::size_t>(to_u64(v)); }};
}

ConfigField spec_real(std::string key, std::string doc, double synth::GeneratorSpec::*member) {
  return {std::move(key), std::move(doc), [=](const Config& c) { return fmt(c.data.spec.*member); },
          [=](Config& c, const std::string& v) { c.data.spec.*member = to_double(v); }};
}

ConfigField dim_field(std::size_t m) {
  const char* names[] = {"a", "b", "c"};
  return {std::string("data.dim_") + names[m], std::string("feature width of modality ") + names[m],
          [=](const Config& c) { return std::to_string(c.data.spec.dims[m]); },
          [=](Config& c, const std::string& v) { c.data.spec.dims[m] = static_cast<std::size_t>(to_u64(v)); }};
}

ConfigField fraction_field(std::size_t s) {
  const char* names[] = {"train", "val", "test"};
  return {std::string("data.split_") + names[s], std::string("fraction of samples in ") + names[s],
          [=](const Config& c) { return fmt(c.data.fractions[s]); },
          [=](Config& c, const std::string& v) { c.data.fractions[s] = to_double(v); }};
}

std::vector<ConfigField> build_fields() {
  using synth::GeneratorSpec;
  std::vector<ConfigField> f;
  f.push_back({"data.seed", "generator seed (mixing maps, samples, split)",
               [](const Config& c) { return std::to_string(c.data.spec.seed); },
               [](Config& c, const std::string& v) { c.data.spec.seed = to_u64(v); }});
  f.push_back(size_field("data.samples", "number of generated clips", &Config::data, &DataConfig::samples));
  f.push_back(spec_size("data.coarse_classes", "per-clip class count", &GeneratorSpec::coarse_classes));
  f.push_back(spec_size("data.fine_classes", "per-step label count", &GeneratorSpec::fine_classes));
  f.push_back(spec_size("data.steps", "sequence length T", &GeneratorSpec::steps));
  for (std::size_t m = 0; m < 3; ++m) f.push_back(dim_field(m));
  f.push_back(spec_size("data.semantic_dim", "fine-label embedding width", &GeneratorSpec::semantic_dim));
  f.push_back(spec_size("data.nuisance_dim", "nuisance embedding width", &GeneratorSpec::nuisance_dim));
  f.push_back(spec_size("data.nuisance_classes", "nuisance classes per modality", &GeneratorSpec::nuisance_classes));
  f.push_back(spec_real("data.nuisance_weight", "scale of the nuisance component", &GeneratorSpec::nuisance_weight));
  f.push_back(spec_real("data.coherence", "logit bonus of fine labels owned by the clip's coarse class", &GeneratorSpec::coherence));
  f.push_back(spec_real("data.stay", "logit bonus for repeating the previous fine label", &GeneratorSpec::stay));
  f.push_back(spec_real("data.temperature", "fine-chain softmax temperature", &GeneratorSpec::temperature));
  f.push_back(spec_real("data.noise", "additive Gaussian noise sigma", &GeneratorSpec::noise));
  for (std::size_t s = 0; s < 3; ++s) f.push_back(fraction_field(s));

  f.push_back(size_field("model.latent", "general feature and codebook width", &Config::model, &ModelConfig::latent));
  f.push_back(size_field("model.hidden", "MLP hidden width", &Config::model, &ModelConfig::hidden));
  f.push_back(size_field("model.context", "CPC LSTM state size", &Config::model, &ModelConfig::context));
  f.push_back(size_field("model.horizon", "CPC prediction horizon R", &Config::model, &ModelConfig::horizon));
  f.push_back(size_field("model.layers", "number of layers (1 or 2)", &Config::model, &ModelConfig::layers));
  f.push_back(size_field("model.specific_dim", "specific feature width, 0 for max(8, D/2)", &Config::model, &ModelConfig::specific_dim));

  f.push_back(real_field("loss.beta", "commitment weight beta", &Config::loss, &LossConfig::beta));
  f.push_back(real_field("loss.recon", "reconstruction coefficient", &Config::loss, &LossConfig::recon));
  f.push_back(real_field("loss.commit", "commitment coefficient", &Config::loss, &LossConfig::commit));
  f.push_back(real_field("loss.cpc", "cross-modal CPC coefficient", &Config::loss, &LossConfig::cpc));
  f.push_back(real_field("loss.cmcm", "cmcm hook coefficient", &Config::loss, &LossConfig::cmcm));
  f.push_back(real_field("loss.mi", "CLUB MI coefficient", &Config::loss, &LossConfig::mi));
  f.push_back(bool_field("loss.club_layer1", "apply the CLUB term at layer 1", &Config::loss, &LossConfig::club_layer1));
  f.push_back(bool_field("loss.club_layer2", "apply the CLUB term at layer 2", &Config::loss, &LossConfig::club_layer2));
  f.push_back(bool_field("loss.mi_floor", "clip each CLUB estimate at 0 inside the loss", &Config::loss, &LossConfig::mi_floor));
  f.push_back({"loss.mi_grad", "encoders reached by the CLUB term: both or specific",
               [](const Config& c) { return c.loss.mi_grad; },
               [](Config& c, const std::string& v) {
                 if (v != "both" && v != "specific") throw ConfigError("expected both or specific, got '" + v + "'");
                 c.loss.mi_grad = v;
               }});

  f.push_back({"quant.method", "vq, fsq or rvq-<stages>", [](const Config& c) { return c.quant.method.str(); },
               [](Config& c, const std::string& v) { c.quant.method = QuantMethod::parse(v); }});
  f.push_back(size_field("quant.codebook_size", "entries per codebook L", &Config::quant, &QuantConfig::codebook_size));
  f.push_back(real_field("quant.decay", "EMA decay gamma", &Config::quant, &QuantConfig::decay));
  f.push_back(real_field("quant.laplace", "EMA Laplace smoothing epsilon", &Config::quant, &QuantConfig::laplace));
  f.push_back(real_field("quant.dead_threshold", "EMA count below which a code is reseeded", &Config::quant, &QuantConfig::dead_threshold));
  f.push_back({"quant.fsq_levels", "FSQ levels per projected dimension",
               [](const Config& c) { return from_int_list(c.quant.fsq_levels); },
               [](Config& c, const std::string& v) { c.quant.fsq_levels = to_int_list(v); }});
  f.push_back({"quant.pairing", "paired or independent multimodal EMA statistics",
               [](const Config& c) { return std::string(c.quant.pairing == Pairing::kPaired ? "paired" : "independent"); },
               [](Config& c, const std::string& v) {
                 if (v == "paired") c.quant.pairing = Pairing::kPaired;
                 else if (v == "independent") c.quant.pairing = Pairing::kIndependent;
                 else throw ConfigError("expected paired or independent, got '" + v + "'");
               }});

  f.push_back(size_field("train.epochs", "training epochs", &Config::train, &TrainConfig::epochs));
  f.push_back(size_field("train.batch", "clips per step", &Config::train, &TrainConfig::batch));
  f.push_back({"train.optimizer", "sgd or adam", [](const Config& c) { return c.train.optimizer; },
               [](Config& c, const std::string& v) {
                 if (v != "sgd" && v != "adam") throw ConfigError("expected sgd or adam, got '" + v + "'");
                 c.train.optimizer = v;
               }});
  f.push_back(real_field("train.lr", "main learning rate", &Config::train, &TrainConfig::lr));
  f.push_back(real_field("train.club_lr", "CLUB net learning rate (Adam)", &Config::train, &TrainConfig::club_lr));
  f.push_back(size_field("train.warm_min", "minimum layer-1-only epochs", &Config::train, &TrainConfig::warm_min));
  f.push_back(real_field("train.tau", "layer-1 MI threshold for the gate", &Config::train, &TrainConfig::tau));
  f.push_back(size_field("train.patience", "epochs the MI must stay below tau", &Config::train, &TrainConfig::patience));
  f.push_back({"train.seed", "initialization and shuffling seed",
               [](const Config& c) { return std::to_string(c.train.seed); },
               [](Config& c, const std::string& v) { c.train.seed = to_u64(v); }});

  f.push_back(size_field("eval.probe_iterations", "logistic probe iterations", &Config::eval, &EvalConfig::probe_iterations));
  f.push_back(real_field("eval.probe_lr", "logistic probe Adam step", &Config::eval, &EvalConfig::probe_lr));
  f.push_back({"eval.ks", "retrieval cutoffs", [](const Config& c) { return from_int_list(c.eval.ks); },
               [](Config& c, const std::string& v) { c.eval.ks = to_int_list(v); }});
  return f;
}

}  // namespace

QuantMethod QuantMethod::parse(const std::string& s) {
  if (s == "vq") return {QuantKind::kVq, 1};
  if (s == "fsq") return {QuantKind::kFsq, 1};
  if (s.rfind("rvq-", 0) == 0) {
    std::size_t k = 0;
    try {
      k = static_cast<std::size_t>(to_u64(s.substr(4)));
    } catch (const ConfigError&) {
      k = 0;
    }
    if (k >= 1 && k <= 8) return {QuantKind::kRvq, k};
  }
  throw ConfigError("unknown quantization method '" + s + "' (vq, fsq, rvq-1..rvq-8)");
}

std::string QuantMethod::str() const {
  switch (kind) {
    case QuantKind::kVq: return "vq";
    case QuantKind::kFsq: return "fsq";
    case QuantKind::kRvq: return "rvq-" + std::to_string(stages);
  }
  return "?";
}

void Config::validate() const {
  data.spec.validate();
  if (data.samples < 1) throw ConfigError("data.samples must be >= 1");
  double total = 0.0;
  for (double f : data.fractions) {
    if (!(f >= 0.0)) throw ConfigError("data.split_* must be >= 0");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("data.split_train + data.split_val + data.split_test must be 1");
  if (model.latent < 1) throw ConfigError("model.latent must be >= 1");
  if (model.hidden < 1) throw ConfigError("model.hidden must be >= 1");
  if (model.context < 1) throw ConfigError("model.context must be >= 1");
  if (model.horizon < 1) throw ConfigError("model.horizon must be >= 1");
  if (model.horizon >= data.spec.steps) throw ConfigError("model.horizon must be < data.steps");
  if (model.layers != 1 && model.layers != 2) throw ConfigError("model.layers must be 1 or 2");
  const std::pair<const char*, double> coeffs[] = {{"loss.beta", loss.beta}, {"loss.recon", loss.recon},
                                                   {"loss.commit", loss.commit}, {"loss.cpc", loss.cpc},
                                                   {"loss.cmcm", loss.cmcm}, {"loss.mi", loss.mi}};
  for (const auto& [k, v] : coeffs)
    if (!(v >= 0.0)) throw ConfigError(std::string(k) + " must be >= 0");
  if (quant.codebook_size < 1) throw ConfigError("quant.codebook_size must be >= 1");
  if (!(quant.decay > 0.0 && quant.decay <= 1.0)) throw ConfigError("quant.decay must be in (0, 1]");
  if (!(quant.laplace > 0.0)) throw ConfigError("quant.laplace must be > 0");
  for (int l : quant.fsq_levels)
    if (l < 3 || l % 2 == 0) throw ConfigError("quant.fsq_levels entries must be odd and >= 3");
  if (train.batch < 2) throw ConfigError("train.batch must be >= 2");
  if (!(train.lr >= 0.0)) throw ConfigError("train.lr must be >= 0");
  if (!(train.club_lr >= 0.0)) throw ConfigError("train.club_lr must be >= 0");
  if (!(train.tau > 0.0)) throw ConfigError("train.tau must be > 0");
  if (train.patience < 1) throw ConfigError("train.patience must be >= 1");
  if (eval.probe_iterations < 1) throw ConfigError("eval.probe_iterations must be >= 1");
  for (int k : eval.ks)
    if (k < 1) throw ConfigError("eval.ks entries must be >= 1");
}

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = build_fields();
  return fields;
}

void set_config_value(Config& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : config_fields())
    if (f.key == key) {
      try {
        f.set(cfg, value);
      } catch (const ConfigError& e) {
        throw ConfigError(key + ": " + e.what());
      }
      return;
    }
  throw ConfigError("unknown key '" + key + "'");
}

std::string get_config_value(const Config& cfg, const std::string& key) {
  for (const auto& f : config_fields())
    if (f.key == key) return f.get(cfg);
  throw ConfigError("unknown key '" + key + "'");
}

void apply_config_text(Config& cfg, const std::string& text, const std::string& source) {
  std::istringstream is(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(is, line)) {
    ++no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(no) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

void apply_config_file(Config& cfg, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  apply_config_text(cfg, ss.str(), path);
}

std::string config_to_text(const Config& cfg) {
  std::string out;
  for (const auto& f : config_fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

std::string config_reference(const Config& cfg) {
  std::string out;
  for (const auto& f : config_fields()) out += "# " + f.doc + "\n" + f.key + " = " + f.get(cfg) + "\n";
  return out;
}

std::string config_digest(const Config& cfg) { return io::hex64(io::fnv1a(config_to_text(cfg))); }

}  // namespace srcid::model
