#include <CLI11.hpp>

#include <iostream>

#include "srcid/cli/commands.hpp"
#include "srcid/error.hpp"
#include "srcid/model/config.hpp"

using namespace srcid;

namespace {

void add_common(CLI::App* app, cli::CommonOptions& o) {
  app->add_option("--config", o.config_path, "key = value config file")->check(CLI::ExistingFile);
  app->add_option("--set", o.overrides, "override key=value (repeatable)")->allow_extra_args(false);
  app->add_option("--out", o.out_dir, "output directory")->required();
  app->add_option("--seed", o.seed, "seed (datagen: data.seed, otherwise train.seed)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"srcid: two-layer semantic-residual discrete representation toolkit"};
  app.require_subcommand(1);

  cli::CommonOptions gen;
  auto* datagen = app.add_subcommand("datagen", "generate and split a synthetic tri-modal dataset");
  add_common(datagen, gen);

  cli::TrainOptions train;
  auto* tr = app.add_subcommand("train", "train a model; writes checkpoint, trace and metrics");
  add_common(tr, train.common);
  tr->add_option("--data", train.data_path, "dataset file (default: generate from config)");

  cli::EvalOptions ev;
  std::string tasks;
  auto* evc = app.add_subcommand("eval", "evaluate a checkpoint");
  evc->add_option("--checkpoint", ev.checkpoint_path, "checkpoint file")->required();
  evc->add_option("--data", ev.data_path, "dataset file (default: regenerate from checkpoint config)");
  evc->add_option("--tasks", tasks, "comma list of cross_modal,cross_modal_fine,nuisance,retrieval,codebook,recon");
  evc->add_option("--mode", ev.mode, "only1 | both | all")->check(CLI::IsMember({"only1", "both", "all"}));
  evc->add_option("--out", ev.out_dir, "output directory");

  cli::SweepOptions sw;
  std::string values;
  auto* swc = app.add_subcommand("sweep", "train and evaluate once per value of one axis");
  add_common(swc, sw.common);
  swc->add_option("--data", sw.data_path, "dataset file (default: generate from config)");
  swc->add_option("--axis", sw.axis, "codebook_size | club_ablation | quant_method")->required();
  swc->add_option("--values", values, "comma list (default: the axis' standard list)");

  bool print_config = false;
  auto* cfg = app.add_subcommand("config", "print every config key with its default and documentation");
  cfg->add_flag("--values-only", print_config, "omit documentation comments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? cli::kExitOk : cli::kExitConfig;
  }

  auto split_list = [](const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size() && !s.empty()) {
      const auto comma = s.find(',', start);
      const auto item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!item.empty()) out.push_back(item);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  };

  try {
    if (*datagen) {
      cli::cmd_datagen(gen, std::cout);
    } else if (*tr) {
      cli::cmd_train(train, std::cerr);
    } else if (*evc) {
      ev.tasks = split_list(tasks);
      cli::cmd_eval(ev, std::cerr);
    } else if (*swc) {
      sw.values = split_list(values);
      cli::cmd_sweep(sw, std::cerr);
    } else if (*cfg) {
      const model::Config c;
      std::cout << (print_config ? model::config_to_text(c) : model::config_reference(c));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_code_for(e);
  }
  return cli::kExitOk;
}
