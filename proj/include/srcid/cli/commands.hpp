#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "srcid/eval/harness.hpp"
#include "srcid/model/config.hpp"

namespace srcid::cli {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct CommonOptions {
  std::string config_path;              // optional key = value file
  std::vector<std::string> overrides;   // "key=value", applied after the file
  std::string out_dir;
  std::optional<std::uint64_t> seed;    // datagen: data.seed, otherwise train.seed
};

// Defaults, then the config file, then overrides in order.
model::Config resolve_config(const CommonOptions& opt, bool data_seed);

// Files written into an output directory.
inline constexpr const char* kConfigSnapshot = "config.txt";
inline constexpr const char* kDatasetFile = "dataset.srds";
inline constexpr const char* kCheckpointFile = "checkpoint.srck";
inline constexpr const char* kTraceFile = "trace.jsonl";
inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kReportsFile = "reports.jsonl";
inline constexpr const char* kFinalReportsFile = "final_reports.jsonl";
inline constexpr const char* kSweepFile = "sweep.csv";

struct DatagenResult {
  std::string dataset_path;
  std::array<std::size_t, 3> counts{};
};
// Writes <out>/dataset.srds and the config snapshot; prints split counts.
DatagenResult cmd_datagen(const CommonOptions& opt, std::ostream& log);

struct TrainOptions {
  CommonOptions common;
  std::string data_path;  // empty: generate from the config's data section
};
struct TrainResult {
  std::string checkpoint_path;
  std::vector<eval::EvalReport> final_reports;
};
// Writes the snapshot, trace.jsonl, metrics.csv (one row per epoch), the
// checkpoint and final_reports.jsonl (layer-1 coarse cross-modal matrix).
TrainResult cmd_train(const TrainOptions& opt, std::ostream& log);

struct EvalOptions {
  std::string checkpoint_path;
  std::string data_path;            // empty: regenerate from the checkpoint config
  std::vector<std::string> tasks;   // empty: all tasks
  std::string mode = "all";         // only1 | both | all
  std::string out_dir;
};
// Tasks: cross_modal, cross_modal_fine, nuisance, retrieval, codebook, recon.
const std::vector<std::string>& eval_task_names();
// Runs each task in every requested mode; writes reports.jsonl and
// metrics.csv into out_dir when it is set.
std::vector<eval::EvalReport> cmd_eval(const EvalOptions& opt, std::ostream& log);

struct SweepOptions {
  CommonOptions common;
  std::string data_path;
  std::string axis;                 // codebook_size | club_ablation | quant_method
  std::vector<std::string> values;  // empty: the axis' default list
};
struct SweepRow {
  std::string axis, value;
  double cross_coarse = 0, intra_coarse = 0, cross_fine_only1 = 0, cross_fine_both = -1;
  double nuisance = 0, recon_mse = 0, agreement = 0, perplexity = 0;
};
// One fresh train + eval per value on a shared dataset and seed; writes
// sweep.csv.
std::vector<SweepRow> cmd_sweep(const SweepOptions& opt, std::ostream& log);
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

// Error to exit-code mapping shared by the tool and tests.
int exit_code_for(const std::exception& e);

}  // namespace srcid::cli
