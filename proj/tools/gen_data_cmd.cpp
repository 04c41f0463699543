#include <iostream>
#include <memory>

#include "commands.hpp"

namespace pdml::tools {

namespace {

struct GenDataOptions {
  SynthConfig synth;
  SplitSpec split;
  std::string out;
};

void run(const GenDataOptions& opts) {
  const std::string dir = resolve_output_dir(opts.out);
  ensure_directory(dir);

  Dataset ds = generate_synthetic(opts.synth);
  ds.name = "synthetic";
  const ZeroShotSplit split = split_zero_shot(ds, opts.split);

  save_csv(ds, dir + "/data.csv");
  save_split(split, dir + "/split.json");

  nlohmann::json echo;
  echo["synth"] = {
      {"classes", opts.synth.num_classes}, {"per_class", opts.synth.per_class},
      {"dim", opts.synth.dim},             {"center_scale", opts.synth.center_scale},
      {"noise_stddev", opts.synth.stddev}, {"seed", opts.synth.seed},
  };
  echo["split"] = {
      {"train_fraction", opts.split.train_fraction},
      {"ordered", opts.split.ordered},
      {"seed", opts.split.seed},
      {"train_classes", split.train_class_ids.size()},
      {"eval_classes", split.test_class_ids.size()},
  };
  echo["outputs"] = {{"data", dir + "/data.csv"}, {"split", dir + "/split.json"}};

  write_text_file(dir + "/synth_config.json", echo.dump(2) + "\n");
  std::cout << echo.dump(2) << "\n";
}

}  // namespace

void register_gen_data(CLI::App& app) {
  auto opts = std::make_shared<GenDataOptions>();
  CLI::App* cmd = app.add_subcommand(
      "gen-data", "Generate a synthetic blob dataset with a zero-shot class split");
  cmd->add_option("--classes", opts->synth.num_classes, "Number of classes")
      ->capture_default_str();
  cmd->add_option("--per-class", opts->synth.per_class, "Points per class")
      ->capture_default_str();
  cmd->add_option("--dim", opts->synth.dim, "Input dimensionality")
      ->capture_default_str();
  cmd->add_option("--center-scale", opts->synth.center_scale,
                  "Class centers are uniform in [-s, s]^dim")
      ->capture_default_str();
  cmd->add_option("--noise-stddev", opts->synth.stddev,
                  "Isotropic stddev around each center")
      ->capture_default_str();
  cmd->add_option("--seed", opts->synth.seed, "Generator seed")->capture_default_str();
  cmd->add_option("--train-fraction", opts->split.train_fraction,
                  "Fraction of classes in the train half")
      ->capture_default_str();
  cmd->add_flag("--ordered-split", opts->split.ordered,
                "Lowest class ids go to train instead of a seeded shuffle");
  cmd->add_option("--split-seed", opts->split.seed, "Split shuffle seed")
      ->capture_default_str();
  cmd->add_option("-o,--out", opts->out,
                  "Output directory (default $PDML_OUTPUT_ROOT or .)");
  cmd->callback([opts] { run(*opts); });
}

}  // namespace pdml::tools
