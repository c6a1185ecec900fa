#include "srcid/cli/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "srcid/error.hpp"
#include "srcid/model/trainer.hpp"

namespace srcid::cli {

namespace fs = std::filesystem;
using eval::EvalReport;
using model::CodeMode;
using model::Config;

namespace {

std::string num(double v) { return nlohmann::json(v).dump(); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open for writing: " + path.string());
  os << text;
}

fs::path prepare_out(const std::string& dir) {
  if (dir.empty()) throw ConfigError("--out is required");
  fs::create_directories(dir);
  return fs::path(dir);
}

synth::Dataset dataset_for(const Config& cfg, const std::string& data_path) {
  if (!data_path.empty()) return synth::load_dataset(data_path);
  auto ds = synth::generate(cfg.data.spec, cfg.data.samples);
  synth::split(ds, cfg.data.fractions, cfg.data.spec.seed);
  return ds;
}

std::string epoch_csv(const std::vector<model::EpochRecord>& epochs) {
  std::string out = "epoch,total";
  for (const char* l : {"l1", "l2"})
    for (const char* t : {"recon", "commit", "cpc", "cmcm", "mi"}) out += std::string(",") + l + "_" + t;
  out += ",mi_estimate_l1,mi_estimate_l2,club_loglik_l1,club_loglik_l2,perplexity_l1,perplexity_l2,"
         "active_layers,gate_active\n";
  for (const auto& r : epochs) {
    out += std::to_string(r.epoch) + "," + num(r.total);
    for (const auto& t : r.terms)
      for (double v : {t.recon, t.commit, t.cpc, t.cmcm, t.mi}) out += "," + num(v);
    for (const auto& a : {r.mi_estimate, r.club_loglik, r.perplexity}) out += "," + num(a[0]) + "," + num(a[1]);
    out += "," + std::to_string(r.active_layers) + "," + (r.gate_active ? "1" : "0") + "\n";
  }
  return out;
}

std::vector<CodeMode> modes_for(const std::string& mode, const model::SrcidModel& m) {
  if (mode == "all") {
    if (m.layers() == 2) return {CodeMode::kOnly1, CodeMode::kBoth};
    return {CodeMode::kOnly1};
  }
  const CodeMode md = model::parse_code_mode(mode);
  if (md == CodeMode::kBoth && m.layers() < 2) throw ConfigError("mode both needs model.layers = 2");
  return {md};
}

double mean_where(const std::vector<EvalReport>& rs, bool cross) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& r : rs)
    if ((r.direction[0] != r.direction[3]) == cross) {
      s += r.value;
      ++n;
    }
  return n ? s / static_cast<double>(n) : 0.0;
}

}  // namespace

Config resolve_config(const CommonOptions& opt, bool data_seed) {
  Config cfg;
  if (!opt.config_path.empty()) apply_config_file(cfg, opt.config_path);
  for (const auto& o : opt.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set " + o + ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    set_config_value(cfg, trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
  if (opt.seed) {
    if (data_seed) cfg.data.spec.seed = *opt.seed;
    else cfg.train.seed = *opt.seed;
  }
  cfg.validate();
  return cfg;
}

DatagenResult cmd_datagen(const CommonOptions& opt, std::ostream& log) {
  const Config cfg = resolve_config(opt, true);
  const fs::path out = prepare_out(opt.out_dir);
  auto ds = synth::generate(cfg.data.spec, cfg.data.samples);
  synth::split(ds, cfg.data.fractions, cfg.data.spec.seed);
  DatagenResult res;
  res.dataset_path = (out / kDatasetFile).string();
  res.counts = ds.split_sizes();
  synth::save_dataset(ds, res.dataset_path);
  write_text(out / kConfigSnapshot, model::config_to_text(cfg));
  log << "wrote " << res.dataset_path << ": " << ds.samples.size() << " clips, train " << res.counts[0]
      << " / val " << res.counts[1] << " / test " << res.counts[2] << "\n";
  return res;
}

TrainResult cmd_train(const TrainOptions& opt, std::ostream& log) {
  const Config cfg = resolve_config(opt.common, false);
  const fs::path out = prepare_out(opt.common.out_dir);
  const auto ds = dataset_for(cfg, opt.data_path);
  if (!(ds.spec == cfg.data.spec))
    log << "note: dataset generator settings differ from the config's data section\n";
  write_text(out / kConfigSnapshot, model::config_to_text(cfg));
  model::SrcidModel m(cfg);
  model::GateState gate;
  std::ofstream trace(out / kTraceFile, std::ios::binary);
  if (!trace) throw FormatError("cannot open for writing: " + (out / kTraceFile).string());
  model::FitOptions fo;
  fo.on_record = [&](const nlohmann::json& j) { trace << j.dump() << "\n" << std::flush; };
  fo.on_epoch = [&](const model::EpochRecord& r) {
    log << "epoch " << r.epoch << " total " << r.total << " mi " << r.mi_estimate[0] << " gate "
        << (r.gate_active ? "on" : "off") << "\n";
  };
  const auto fr = model::fit(m, gate, ds, fo);
  write_text(out / kMetricsFile, epoch_csv(fr.epochs));
  TrainResult res;
  res.checkpoint_path = (out / kCheckpointFile).string();
  model::save_checkpoint(m, gate, res.checkpoint_path);
  res.final_reports = eval::cross_modal_matrix(m, ds, eval::LabelKind::kCoarse, CodeMode::kOnly1);
  write_text(out / kFinalReportsFile, eval::reports_to_jsonl(res.final_reports));
  log << "coarse cross-modal accuracy " << mean_where(res.final_reports, true) << "\n";
  return res;
}

const std::vector<std::string>& eval_task_names() {
  static const std::vector<std::string> names{"cross_modal", "cross_modal_fine", "nuisance",
                                              "retrieval",   "codebook",         "recon"};
  return names;
}

std::vector<EvalReport> cmd_eval(const EvalOptions& opt, std::ostream& log) {
  if (opt.checkpoint_path.empty()) throw ConfigError("--checkpoint is required");
  auto ck = model::load_checkpoint(opt.checkpoint_path);
  auto& m = ck.model;
  const auto ds = dataset_for(m.config(), opt.data_path);
  std::vector<std::string> tasks = opt.tasks.empty() ? eval_task_names() : opt.tasks;
  for (const auto& t : tasks)
    if (std::find(eval_task_names().begin(), eval_task_names().end(), t) == eval_task_names().end())
      throw ConfigError("unknown eval task: " + t);
  const auto modes = modes_for(opt.mode, m);
  const auto split = eval::eval_split(ds);
  std::vector<EvalReport> out;
  auto append = [&](std::vector<EvalReport> rs) { out.insert(out.end(), rs.begin(), rs.end()); };
  for (const auto& task : tasks) {
    if (task == "codebook") {
      const auto st = eval::codebook_stats(m, ds, split);
      const double L = static_cast<double>(st.usage[0].size());
      static const char* pairs[] = {"a:b", "a:c", "b:c"};
      for (std::size_t k = 0; k < st.perplexity.size(); ++k) {
        const std::string layer = "layer" + std::to_string(k + 1) + ":";
        out.push_back(eval::make_report(m, "codebook", "all", layer + "perplexity_norm", "-", st.perplexity[k] / L));
        for (std::size_t p = 0; p < 3; ++p)
          out.push_back(eval::make_report(m, "codebook", pairs[p], layer + "agreement", "-", st.agreement[k][p]));
      }
      continue;
    }
    if (task == "recon") {
      const auto mse = eval::reconstruction_mse(m, ds, split);
      for (std::size_t mm = 0; mm < 3; ++mm)
        out.push_back(eval::make_report(m, "recon", eval::direction(mm, mm), "mse", "-", mse[mm]));
      continue;
    }
    for (const auto mode : modes) {
      if (task == "cross_modal") append(eval::cross_modal_matrix(m, ds, eval::LabelKind::kCoarse, mode));
      else if (task == "cross_modal_fine") append(eval::cross_modal_matrix(m, ds, eval::LabelKind::kFine, mode));
      else if (task == "nuisance") append(eval::nuisance_eval(m, ds, mode));
      else if (task == "retrieval")
        for (auto [q, g] : {std::pair{0, 1}, std::pair{0, 2}, std::pair{1, 2}})
          append(eval::retrieval_eval(m, ds, q, g, m.config().eval.ks, mode));
    }
  }
  if (!opt.out_dir.empty()) {
    const fs::path dir = prepare_out(opt.out_dir);
    write_text(dir / kReportsFile, eval::reports_to_jsonl(out));
    write_text(dir / kMetricsFile, eval::reports_to_csv(out));
    write_text(dir / kConfigSnapshot, model::config_to_text(m.config()));
  }
  log << out.size() << " report rows\n";
  return out;
}

std::vector<SweepRow> cmd_sweep(const SweepOptions& opt, std::ostream& log) {
  const Config base = resolve_config(opt.common, false);
  std::vector<std::string> values = opt.values;
  std::vector<std::pair<std::string, std::string>> (*settings)(const std::string&) = nullptr;
  if (opt.axis == "codebook_size") {
    if (values.empty()) values = {"16", "64", "256"};
    settings = [](const std::string& v) { return std::vector<std::pair<std::string, std::string>>{{"quant.codebook_size", v}}; };
  } else if (opt.axis == "club_ablation") {
    if (values.empty()) values = {"full", "no-club-1", "no-club-2", "no-club"};
    settings = [](const std::string& v) -> std::vector<std::pair<std::string, std::string>> {
      if (v == "full") return {{"loss.club_layer1", "true"}, {"loss.club_layer2", "true"}};
      if (v == "no-club-1") return {{"loss.club_layer1", "false"}, {"loss.club_layer2", "true"}};
      if (v == "no-club-2") return {{"loss.club_layer1", "true"}, {"loss.club_layer2", "false"}};
      if (v == "no-club") return {{"loss.club_layer1", "false"}, {"loss.club_layer2", "false"}};
      throw ConfigError("club_ablation value must be full|no-club-1|no-club-2|no-club, got " + v);
    };
  } else if (opt.axis == "quant_method") {
    if (values.empty()) values = {"vq", "fsq", "rvq-2", "rvq-3", "rvq-4"};
    settings = [](const std::string& v) { return std::vector<std::pair<std::string, std::string>>{{"quant.method", v}}; };
  } else {
    throw ConfigError("unknown sweep axis: " + opt.axis + " (codebook_size|club_ablation|quant_method)");
  }
  // Resolve every point before training so a bad value fails fast.
  std::vector<Config> points;
  for (const auto& v : values) {
    Config c = base;
    for (const auto& [k, val] : settings(v)) model::set_config_value(c, k, val);
    c.validate();
    points.push_back(c);
  }
  const fs::path out = prepare_out(opt.common.out_dir);
  write_text(out / kConfigSnapshot, model::config_to_text(base));
  const auto ds = dataset_for(base, opt.data_path);
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < points.size(); ++i) {
    model::SrcidModel m(points[i]);
    model::GateState gate;
    model::fit(m, gate, ds);
    SweepRow row;
    row.axis = opt.axis;
    row.value = values[i];
    const auto co = eval::cross_modal_matrix(m, ds, eval::LabelKind::kCoarse, CodeMode::kOnly1);
    row.cross_coarse = mean_where(co, true);
    row.intra_coarse = mean_where(co, false);
    row.cross_fine_only1 = mean_where(eval::cross_modal_matrix(m, ds, eval::LabelKind::kFine, CodeMode::kOnly1), true);
    if (m.layers() == 2)
      row.cross_fine_both = mean_where(eval::cross_modal_matrix(m, ds, eval::LabelKind::kFine, CodeMode::kBoth), true);
    for (const auto& r : eval::nuisance_eval(m, ds, CodeMode::kOnly1)) row.nuisance += r.value / 3.0;
    const auto split = eval::eval_split(ds);
    const auto mse = eval::reconstruction_mse(m, ds, split);
    row.recon_mse = (mse[0] + mse[1] + mse[2]) / 3.0;
    const auto st = eval::codebook_stats(m, ds, split);
    row.agreement = (st.agreement[0][0] + st.agreement[0][1] + st.agreement[0][2]) / 3.0;
    row.perplexity = st.perplexity[0];
    log << opt.axis << "=" << row.value << ": coarse cross " << row.cross_coarse << "\n";
    rows.push_back(row);
  }
  write_text(out / kSweepFile, sweep_to_csv(rows));
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "axis,value,cross_coarse,intra_coarse,cross_fine_only1,cross_fine_both,nuisance,recon_mse,agreement,"
      "perplexity\n";
  for (const auto& r : rows)
    out += r.axis + "," + r.value + "," + num(r.cross_coarse) + "," + num(r.intra_coarse) + "," +
           num(r.cross_fine_only1) + "," + (r.cross_fine_both < 0 ? std::string() : num(r.cross_fine_both)) + "," +
           num(r.nuisance) + "," + num(r.recon_mse) + "," + num(r.agreement) + "," + num(r.perplexity) + "\n";
  return out;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const FormatError*>(&e)) return kExitConfig;
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  return kExitFailure;
}

}  // namespace srcid::cli
