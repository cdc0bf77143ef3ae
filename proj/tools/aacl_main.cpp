// aacl command line: synthetic dataset generation, semi-supervised training,
// evaluation, augmentation previews and the two experiment sweeps.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "aacl/augment.hpp"
#include "aacl/data.hpp"
#include "aacl/harness.hpp"
#include "aacl/metrics.hpp"
#include "aacl/model.hpp"
#include "aacl/raster.hpp"

namespace fs = std::filesystem;

namespace {

aacl::TrainConfig load_run_config(const std::string& config_path, const std::string& data_dir,
                                  const std::string& out_dir, bool log_adacm) {
  aacl::TrainConfig cfg = aacl::parse_config_file(config_path);
  if (!data_dir.empty()) cfg.data_dir = data_dir;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (log_adacm) cfg.log_adacm = true;
  return cfg;
}

std::vector<std::string> class_names_for(int classes) {
  if (classes == aacl::kSceneClasses)
    return {aacl::scene_class_names().begin(), aacl::scene_class_names().end()};
  std::vector<std::string> names;
  for (int c = 0; c < classes; ++c) names.push_back("class" + std::to_string(c));
  return names;
}

std::string param_file_name(const aacl::AugStep& step) {
  const auto& range = aacl::param_range(step.kind);
  std::string name = aacl::to_string(step.kind);
  if (range.parameterless) return name + ".ppm";
  char buf[32];
  if (range.integral)
    std::snprintf(buf, sizeof(buf), "%d", static_cast<int>(step.param));
  else
    std::snprintf(buf, sizeof(buf), "%.3g", step.param);
  return name + "_" + buf + ".ppm";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AACL semi-supervised segmentation workbench"};
  app.require_subcommand(1);

  // dataset gen
  auto* dataset = app.add_subcommand("dataset", "Dataset utilities");
  dataset->require_subcommand(1);
  auto* gen = dataset->add_subcommand("gen", "Generate a synthetic dataset");
  std::string gen_out;
  std::uint64_t gen_seed = 1;
  int gen_count = 80, gen_test_count = 0, gen_size = 64;
  double gen_noise = 0.05, gen_jitter = 0.12;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Generation seed");
  gen->add_option("--count", gen_count, "Number of training images");
  gen->add_option("--test-count", gen_test_count, "Held-out test images (default count/4)");
  gen->add_option("--size", gen_size, "Image side length (even)");
  gen->add_option("--noise", gen_noise, "Texture noise sigma");
  gen->add_option("--jitter", gen_jitter, "Per-scene palette jitter");

  // train
  auto* train = app.add_subcommand("train", "Train on a dataset directory");
  std::string train_config, train_data, train_out;
  bool train_log_adacm = false;
  train->add_option("--config", train_config, "Config file")->required();
  train->add_option("--data", train_data, "Dataset directory (overrides config)");
  train->add_option("--out", train_out, "Output directory (overrides config)");
  train->add_flag("--log-adacm", train_log_adacm, "Write per-unit CutMix decisions CSV");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  std::string eval_ckpt, eval_data, eval_out;
  eval->add_option("--ckpt", eval_ckpt, "Checkpoint file")->required();
  eval->add_option("--data", eval_data, "Dataset directory")->required();
  eval->add_option("--out", eval_out, "Also write the CSV here");

  // augment-preview
  auto* preview = app.add_subcommand("augment-preview", "Emit per-op augmentation previews");
  std::string preview_image, preview_out;
  int preview_k = 8;
  std::uint64_t preview_seed = 1;
  preview->add_option("--image", preview_image, "Input PPM")->required();
  preview->add_option("--k", preview_k, "Recipe length for the composite preview");
  preview->add_option("--seed", preview_seed, "Sampling seed");
  preview->add_option("--out", preview_out, "Output directory")->required();

  // sweep-k
  auto* sweep = app.add_subcommand("sweep-k", "Train once per k in [1,10], plain CutMix");
  std::string sweep_config, sweep_data, sweep_out;
  sweep->add_option("--config", sweep_config, "Config file")->required();
  sweep->add_option("--data", sweep_data, "Dataset directory (overrides config)");
  sweep->add_option("--out", sweep_out, "Output directory (overrides config)");

  // ablate
  auto* abl = app.add_subcommand("ablate", "4-row component ablation, 3 seeds per row");
  std::string abl_config, abl_data, abl_out;
  abl->add_option("--config", abl_config, "Config file")->required();
  abl->add_option("--data", abl_data, "Dataset directory (overrides config)");
  abl->add_option("--out", abl_out, "Output directory (overrides config)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      aacl::SceneSpec spec;
      spec.size = gen_size;
      spec.noise_sigma = gen_noise;
      spec.color_jitter = gen_jitter;
      const int test_count = gen_test_count > 0 ? gen_test_count : std::max(1, gen_count / 4);
      aacl::write_dataset(gen_out, spec, gen_count, test_count, gen_seed);
      std::cout << "wrote " << gen_count << " train + " << test_count << " test images to "
                << gen_out << "\n";
    } else if (train->parsed()) {
      const aacl::TrainConfig cfg =
          load_run_config(train_config, train_data, train_out, train_log_adacm);
      const aacl::RunRecord record = aacl::run_training(cfg);
      std::cout << "final miou " << record.final_eval.miou << ", best miou "
                << record.best_miou << ", wall " << record.wall_seconds << "s\n";
    } else if (eval->parsed()) {
      const aacl::SegNetParams params = aacl::load_checkpoint(eval_ckpt);
      const aacl::Dataset ds = aacl::load_dataset(eval_data, params.classes);
      if (ds.test_ids.empty()) throw std::runtime_error("dataset has no test images");
      const aacl::EvalReport report = aacl::evaluate(params, ds, ds.test_ids);
      aacl::write_eval_csv(report, class_names_for(params.classes), std::cout);
      if (!eval_out.empty()) {
        std::ofstream out(eval_out, std::ios::trunc);
        aacl::write_eval_csv(report, class_names_for(params.classes), out);
      }
    } else if (preview->parsed()) {
      const aacl::RasterImage image = aacl::read_ppm(preview_image);
      fs::create_directories(preview_out);
      // one preview per op with a sampled magnitude, plus the k-composite
      aacl::Rng rng(aacl::derive_seed(preview_seed, "preview"));
      for (aacl::AugOpKind kind : aacl::kAllAugOps) {
        const auto& range = aacl::param_range(kind);
        aacl::AugStep step{kind, 0.0};
        if (range.integral)
          step.param = static_cast<double>(rng.uniform_int(
              static_cast<int>(range.sample_lo), static_cast<int>(range.sample_hi)));
        else if (!range.parameterless)
          step.param = rng.uniform(range.sample_lo, range.sample_hi);
        const aacl::RasterImage out = aacl::apply_op(image, kind, step.param);
        aacl::write_ppm(out, (fs::path(preview_out) / param_file_name(step)).string());
      }
      const aacl::AugRecipe recipe = aacl::sample_recipe(preview_k, preview_seed);
      aacl::write_ppm(aacl::usaug(image, recipe),
                      (fs::path(preview_out) /
                       ("usaug_k" + std::to_string(preview_k) + ".ppm"))
                          .string());
      std::cout << "wrote previews to " << preview_out << "\n";
    } else if (sweep->parsed()) {
      aacl::TrainConfig cfg = load_run_config(sweep_config, sweep_data, sweep_out, false);
      fs::create_directories(cfg.out_dir);
      std::ofstream csv(fs::path(cfg.out_dir) / "sweep_k.csv", std::ios::trunc);
      aacl::sweep_k(cfg, csv);
      std::cout << "wrote " << (fs::path(cfg.out_dir) / "sweep_k.csv").string() << "\n";
    } else if (abl->parsed()) {
      aacl::TrainConfig cfg = load_run_config(abl_config, abl_data, abl_out, false);
      fs::create_directories(cfg.out_dir);
      std::ofstream csv(fs::path(cfg.out_dir) / "ablation.csv", std::ios::trunc);
      aacl::ablate(cfg, csv);
      std::cout << "wrote " << (fs::path(cfg.out_dir) / "ablation.csv").string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
