#include "aacl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "aacl/adacm.hpp"
#include "aacl/augment.hpp"
#include "aacl/parallel.hpp"
#include "aacl/rng.hpp"

namespace fs = std::filesystem;

namespace aacl {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& value, const std::string& origin, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument(origin + ": key '" + key + "' expects a boolean, got '" +
                              value + "'");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_g10(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

TrainConfig parse_config_text(const std::string& text, const std::string& origin) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(line_no);
    if (eq == std::string::npos)
      throw std::invalid_argument(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument(where + ": expected 'key = value'");

    try {
      if (key == "k") cfg.k = std::stoi(value);
      else if (key == "tau_percent") cfg.tau_percent = std::stod(value);
      else if (key == "lambda_con") cfg.lambda_con = std::stod(value);
      else if (key == "lr") cfg.lr = std::stod(value);
      else if (key == "momentum") cfg.momentum = std::stod(value);
      else if (key == "weight_decay") cfg.weight_decay = std::stod(value);
      else if (key == "epochs") cfg.epochs = std::stoi(value);
      else if (key == "labeled_fraction") cfg.labeled_fraction = std::stod(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "data_seed") cfg.data_seed = std::stoull(value);
      else if (key == "image_size") cfg.image_size = std::stoi(value);
      else if (key == "classes") cfg.classes = std::stoi(value);
      else if (key == "use_usaug") cfg.use_usaug = parse_bool(value, origin, key);
      else if (key == "use_adacm") cfg.use_adacm = parse_bool(value, origin, key);
      else if (key == "supervised_only") cfg.supervised_only = parse_bool(value, origin, key);
      else if (key == "alpha_norm_log_c") cfg.alpha_norm_log_c = parse_bool(value, origin, key);
      else if (key == "eval_every") cfg.eval_every = std::stoi(value);
      else if (key == "log_adacm") cfg.log_adacm = parse_bool(value, origin, key);
      else if (key == "data_dir") cfg.data_dir = value;
      else if (key == "out_dir") cfg.out_dir = value;
      else
        throw std::invalid_argument(where + ": unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument(where + ": cannot parse value '" + value + "' for '" +
                                  key + "'");
    }
  }
  validate_config(cfg);
  return cfg;
}

TrainConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open config");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path);
}

std::string serialize_config(const TrainConfig& cfg) {
  std::ostringstream out;
  out << "k = " << cfg.k << '\n';
  out << "tau_percent = " << format_double(cfg.tau_percent) << '\n';
  out << "lambda_con = " << format_double(cfg.lambda_con) << '\n';
  out << "lr = " << format_double(cfg.lr) << '\n';
  out << "momentum = " << format_double(cfg.momentum) << '\n';
  out << "weight_decay = " << format_double(cfg.weight_decay) << '\n';
  out << "epochs = " << cfg.epochs << '\n';
  out << "labeled_fraction = " << format_double(cfg.labeled_fraction) << '\n';
  out << "seed = " << cfg.seed << '\n';
  out << "data_seed = " << cfg.data_seed << '\n';
  out << "image_size = " << cfg.image_size << '\n';
  out << "classes = " << cfg.classes << '\n';
  out << "use_usaug = " << (cfg.use_usaug ? "true" : "false") << '\n';
  out << "use_adacm = " << (cfg.use_adacm ? "true" : "false") << '\n';
  out << "supervised_only = " << (cfg.supervised_only ? "true" : "false") << '\n';
  out << "alpha_norm_log_c = " << (cfg.alpha_norm_log_c ? "true" : "false") << '\n';
  out << "eval_every = " << cfg.eval_every << '\n';
  out << "log_adacm = " << (cfg.log_adacm ? "true" : "false") << '\n';
  if (!cfg.data_dir.empty()) out << "data_dir = " << cfg.data_dir << '\n';
  if (!cfg.out_dir.empty()) out << "out_dir = " << cfg.out_dir << '\n';
  return out.str();
}

void validate_config(const TrainConfig& cfg) {
  if (cfg.k < 1 || cfg.k > 10) throw std::invalid_argument("config: k must be in [1, 10]");
  if (cfg.tau_percent < 0.0 || cfg.tau_percent > 100.0)
    throw std::invalid_argument("config: tau_percent must be in [0, 100]");
  if (cfg.lambda_con < 0.0) throw std::invalid_argument("config: lambda_con must be >= 0");
  if (cfg.lr <= 0.0) throw std::invalid_argument("config: lr must be > 0");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    throw std::invalid_argument("config: momentum must be in [0, 1)");
  if (cfg.weight_decay < 0.0) throw std::invalid_argument("config: weight_decay must be >= 0");
  if (cfg.epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
  if (cfg.labeled_fraction <= 0.0 || cfg.labeled_fraction >= 1.0)
    throw std::invalid_argument("config: labeled_fraction must be in (0, 1)");
  if (cfg.image_size < 8 || cfg.image_size % 2 != 0)
    throw std::invalid_argument("config: image_size must be even and >= 8");
  if (cfg.classes < 2 || cfg.classes > 254)
    throw std::invalid_argument("config: classes must be in [2, 254]");
  if (cfg.eval_every < 1) throw std::invalid_argument("config: eval_every must be >= 1");
}

StepOutcome train_step(SegNetParams& params, OptimizerState& opt, const TrainBatch& batch,
                       const TrainConfig& cfg, std::uint64_t step_seed) {
  constexpr int units = TrainBatch::kUnitsPerBatch;
  if (batch.labeled_images.size() != TrainBatch::kLabeledPerBatch ||
      batch.labeled_masks.size() != TrainBatch::kLabeledPerBatch)
    throw std::invalid_argument("train_step: expected 8 labeled pairs");
  if (!cfg.supervised_only &&
      batch.unlabeled_images.size() != TrainBatch::kUnlabeledPerBatch)
    throw std::invalid_argument("train_step: expected 8 unlabeled images");

  StepOutcome outcome;

  // supervised branch on the first four labeled images
  std::vector<ForwardCache> sup_caches(units);
  std::vector<Logits> sup_logits(units);
  parallel_for(units, [&](std::size_t u) {
    sup_logits[u] = forward(params, batch.labeled_images[u], &sup_caches[u]);
  });

  double l_sup = 0.0;
  std::vector<Logits> sup_grads(units);
  for (int u = 0; u < units; ++u) {
    l_sup += supervised_loss(sup_logits[u], batch.labeled_masks[u]);
    sup_grads[u] = supervised_loss_grad(sup_logits[u], batch.labeled_masks[u]);
    for (double& g : sup_grads[u].data) g /= units;
  }
  l_sup /= units;

  double l_con = 0.0;
  double retained = 0.0;
  std::vector<ForwardCache> strong_caches;
  std::vector<Logits> strong_grads;

  if (!cfg.supervised_only) {
    // weak predictions for the four (primary, auxiliary) unlabeled pairs;
    // these act as constants, no gradient flows through them
    std::vector<ProbMap> weak_probs(TrainBatch::kUnlabeledPerBatch);
    parallel_for(TrainBatch::kUnlabeledPerBatch, [&](std::size_t i) {
      weak_probs[i] = softmax(forward(params, batch.unlabeled_images[i]));
    });

    // all step randomness is drawn up front in a fixed order
    struct UnitPlan {
      std::uint64_t recipe_seed = 0;
      std::uint64_t recipe_aux_seed = 0;
      AdaCmDecision decision;
    };
    const AlphaConfig alpha_cfg{cfg.alpha_norm_log_c};
    Rng rng(derive_seed(step_seed, "strong-branch"));
    std::vector<UnitPlan> plans(units);
    for (int u = 0; u < units; ++u) {
      UnitPlan& plan = plans[u];
      plan.recipe_seed = rng.next_u64();
      plan.recipe_aux_seed = rng.next_u64();
      const double alpha = compute_alpha(weak_probs[u], alpha_cfg);
      plan.decision.alpha = alpha;
      plan.decision.r = rng.uniform();
      plan.decision.mask = sample_mask(cfg.image_size, cfg.image_size, rng);
      plan.decision.mode = cfg.use_adacm ? mix_mode_for(plan.decision.r, alpha)
                                         : MixMode::UnlabeledMix;
    }

    std::vector<RasterImage> mixed(units);
    std::vector<SoftTarget> targets(units);
    parallel_for(units, [&](std::size_t u) {
      const UnitPlan& plan = plans[u];
      auto strong_view = [&](const RasterImage& img, std::uint64_t recipe_seed) {
        return cfg.use_usaug ? usaug(img, sample_recipe(cfg.k, recipe_seed))
                             : usaug(img, fixed_strong_recipe());
      };
      const RasterImage strong_primary =
          strong_view(batch.unlabeled_images[u], plan.recipe_seed);
      if (plan.decision.mode == MixMode::UnlabeledMix) {
        const RasterImage strong_aux =
            strong_view(batch.unlabeled_images[units + u], plan.recipe_aux_seed);
        mixed[u] = mix_images(strong_primary, strong_aux, plan.decision.mask);
        targets[u] = mix_targets(weak_probs[u], weak_probs[units + u], plan.decision.mask);
      } else {
        mixed[u] = mix_images(strong_primary, batch.labeled_images[units + u],
                              plan.decision.mask);
        targets[u] = mix_targets(weak_probs[u], batch.labeled_masks[units + u],
                                 plan.decision.mask);
      }
    });

    strong_caches.resize(units);
    std::vector<Logits> strong_logits(units);
    parallel_for(units, [&](std::size_t u) {
      strong_logits[u] = forward(params, mixed[u], &strong_caches[u]);
    });

    strong_grads.resize(units);
    const GateConfig gate_cfg{cfg.tau_percent};
    for (int u = 0; u < units; ++u) {
      const ScalarMap entropy = pixel_entropy(softmax(strong_logits[u]));
      const auto gate = effective_gate(targets[u], entropy_gate(entropy, gate_cfg));
      const ConsistencyResult res = consistency_loss(strong_logits[u], targets[u], gate);
      l_con += res.loss;
      retained += res.retained_fraction;
      strong_grads[u] = consistency_loss_grad(strong_logits[u], targets[u], gate);
      const double scale = cfg.lambda_con / units;
      for (double& g : strong_grads[u].data) g *= scale;

      outcome.alpha_mean += plans[u].decision.alpha;
      if (plans[u].decision.mode == MixMode::LabeledMix) outcome.labeled_mix_count++;
      else outcome.unlabeled_mix_count++;
      AdaCmLogRow row;
      row.unit = u;
      row.mode = plans[u].decision.mode;
      row.r = plans[u].decision.r;
      row.alpha = plans[u].decision.alpha;
      row.mask = plans[u].decision.mask;
      outcome.adacm_rows.push_back(row);
    }
    l_con /= units;
    retained /= units;
    outcome.alpha_mean /= units;
  }

  outcome.loss = total_loss(l_sup, l_con, cfg.lambda_con);
  outcome.loss.retained_fraction = retained;
  outcome.step_retained_fraction = retained;
  if (!std::isfinite(outcome.loss.l_total))
    throw std::runtime_error(
        "train_step: non-finite loss (l_sup=" + std::to_string(l_sup) +
        ", l_con=" + std::to_string(l_con) + ", step_seed=" + std::to_string(step_seed) + ")");

  // one backward per gradient-bearing image, merged in fixed order
  const std::size_t n_back = sup_caches.size() + strong_caches.size();
  std::vector<ParamGrads> partial(n_back);
  for (auto& p : partial) p = ParamGrads::zeros_like(params);
  parallel_for(n_back, [&](std::size_t i) {
    if (i < sup_caches.size()) {
      backward(params, sup_caches[i], sup_grads[i], partial[i]);
    } else {
      const std::size_t u = i - sup_caches.size();
      backward(params, strong_caches[u], strong_grads[u], partial[u + sup_caches.size()]);
    }
  });

  ParamGrads total = ParamGrads::zeros_like(params);
  const std::size_t count = total.count();
  for (const ParamGrads& p : partial)
    for (std::size_t i = 0; i < count; ++i) total.flat(i) += p.flat(i);

  sgd_step(params, total, opt);
  return outcome;
}

EvalReport evaluate(const SegNetParams& params, const Dataset& dataset,
                    const std::vector<int>& ids) {
  if (ids.empty()) throw std::invalid_argument("evaluate: no images");
  std::vector<ConfusionMatrix> partial(ids.size(), ConfusionMatrix(params.classes));
  parallel_for(ids.size(), [&](std::size_t i) {
    const Logits logits = forward(params, dataset.images[ids[i]]);
    partial[i].accumulate(argmax_labels(softmax(logits)), dataset.masks[ids[i]]);
  });
  ConfusionMatrix cm(params.classes);
  for (const auto& p : partial) cm.merge(p);
  return iou_report(cm);
}

namespace {

void write_train_log_row(std::ostream& out, int step, const StepOutcome& o) {
  out << step << ',' << format_g10(o.loss.l_sup) << ',' << format_g10(o.loss.l_con) << ','
      << format_g10(o.loss.l_total) << ',' << format_g10(o.loss.retained_fraction) << ','
      << format_g10(o.alpha_mean) << ',' << o.labeled_mix_count << ':'
      << o.unlabeled_mix_count << '\n';
}

void write_adacm_rows(std::ostream& out, int step, const StepOutcome& o) {
  for (const AdaCmLogRow& row : o.adacm_rows) {
    out << step << ',' << row.unit << ','
        << (row.mode == MixMode::LabeledMix ? "labeled" : "unlabeled") << ','
        << format_g10(row.r) << ',' << format_g10(row.alpha) << ',' << row.mask.top << ','
        << row.mask.left << ',' << row.mask.rect_h << ',' << row.mask.rect_w << '\n';
  }
}

SplitPlan split_for_dataset(const Dataset& ds, const TrainConfig& cfg) {
  Rng split_rng(derive_seed(cfg.effective_data_seed(), "split"));
  SplitPlan plan =
      make_split(static_cast<int>(ds.train_ids.size()), cfg.labeled_fraction, split_rng);
  auto remap = [&](std::vector<int>& v) {
    for (int& idx : v) idx = ds.train_ids[idx];
  };
  remap(plan.labeled);
  remap(plan.unlabeled);
  remap(plan.labeled_stream);
  return plan;
}

}  // namespace

RunRecord run_training(const TrainConfig& cfg) {
  validate_config(cfg);
  if (cfg.data_dir.empty() || cfg.out_dir.empty())
    throw std::invalid_argument("run_training: data_dir and out_dir are required");

  const auto t0 = std::chrono::steady_clock::now();
  const Dataset ds = load_dataset(cfg.data_dir, cfg.classes);
  if (!ds.images.empty() &&
      (ds.images.front().height < cfg.image_size || ds.images.front().width < cfg.image_size))
    throw std::invalid_argument("run_training: dataset images smaller than image_size");

  const SplitPlan plan = split_for_dataset(ds, cfg);

  fs::create_directories(cfg.out_dir);
  std::ofstream train_log(fs::path(cfg.out_dir) / "train_log.csv", std::ios::trunc);
  if (!train_log) throw std::runtime_error(cfg.out_dir + ": cannot write train_log.csv");
  train_log << "step,l_sup,l_con,l_total,retained_fraction,alpha_mean,mode_counts\n";

  std::ofstream adacm_log;
  if (cfg.log_adacm) {
    adacm_log.open(fs::path(cfg.out_dir) / "adacm_log.csv", std::ios::trunc);
    adacm_log << "step,unit,mode,r,alpha,top,left,rect_h,rect_w\n";
  }

  SegNetParams params = init_params(derive_seed(cfg.seed, "params"), cfg.classes);
  OptimizerState opt;
  opt.lr = cfg.lr;
  opt.momentum = cfg.momentum;
  opt.weight_decay = cfg.weight_decay;

  BatchStream stream(ds, plan, cfg.image_size, derive_seed(cfg.seed, "batches"));

  RunRecord record;
  record.config = cfg;
  record.best_miou = -1.0;

  int global_step = 0;
  try {
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      EpochSummary summary;
      summary.epoch = epoch + 1;
      for (int s = 0; s < stream.steps_per_epoch(); ++s) {
        const TrainBatch batch = stream.next();
        const StepOutcome outcome = train_step(
            params, opt, batch, cfg,
            derive_seed(cfg.seed, "step", static_cast<std::uint64_t>(global_step)));
        ++global_step;
        write_train_log_row(train_log, global_step, outcome);
        if (cfg.log_adacm) write_adacm_rows(adacm_log, global_step, outcome);
        summary.mean_l_sup += outcome.loss.l_sup;
        summary.mean_l_con += outcome.loss.l_con;
        summary.mean_l_total += outcome.loss.l_total;
      }
      summary.mean_l_sup /= stream.steps_per_epoch();
      summary.mean_l_con /= stream.steps_per_epoch();
      summary.mean_l_total /= stream.steps_per_epoch();
      record.epochs.push_back(summary);

      const bool last_epoch = epoch == cfg.epochs - 1;
      if (!ds.test_ids.empty() && ((epoch + 1) % cfg.eval_every == 0 || last_epoch)) {
        const EvalReport eval = evaluate(params, ds, ds.test_ids);
        record.eval_history.emplace_back(epoch + 1, eval.miou);
        if (eval.miou > record.best_miou) {
          record.best_miou = eval.miou;
          save_checkpoint(params, (fs::path(cfg.out_dir) / "best.ckpt").string());
        }
        if (last_epoch) record.final_eval = eval;
      }
    }
  } catch (...) {
    // surface partial progress before propagating
    train_log.flush();
    if (cfg.log_adacm) adacm_log.flush();
    save_checkpoint(params, (fs::path(cfg.out_dir) / "abort.ckpt").string());
    throw;
  }

  save_checkpoint(params, (fs::path(cfg.out_dir) / "final.ckpt").string());

  if (!ds.test_ids.empty()) {
    std::ofstream eval_csv(fs::path(cfg.out_dir) / "eval.csv", std::ios::trunc);
    std::vector<std::string> names;
    if (cfg.classes == kSceneClasses) {
      names.assign(scene_class_names().begin(), scene_class_names().end());
    } else {
      for (int c = 0; c < cfg.classes; ++c) names.push_back("class" + std::to_string(c));
    }
    write_eval_csv(record.final_eval, names, eval_csv);
  }

  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ofstream run_record(fs::path(cfg.out_dir) / "run.record", std::ios::trunc);
  run_record << serialize_config(cfg);
  run_record << "# result\n";
  run_record << "# final_miou = " << format_g10(record.final_eval.miou) << '\n';
  run_record << "# best_miou = " << format_g10(record.best_miou) << '\n';
  run_record << "# steps = " << global_step << '\n';
  run_record << "# wall_seconds = " << format_g10(record.wall_seconds) << '\n';

  return record;
}

void sweep_k(const TrainConfig& base, std::ostream& csv) {
  csv << "k,seed,miou\n";
  for (int k = 1; k <= 10; ++k) {
    TrainConfig cfg = base;
    cfg.k = k;
    cfg.use_usaug = true;
    cfg.use_adacm = false;  // plain CutMix keeps the perturbation budget fixed
    cfg.supervised_only = false;
    cfg.data_seed = base.effective_data_seed();
    cfg.out_dir = (fs::path(base.out_dir) / ("sweep_k" + std::to_string(k))).string();
    const RunRecord record = run_training(cfg);
    csv << k << ',' << cfg.seed << ',' << format_g10(record.final_eval.miou) << '\n';
  }
}

void ablate(const TrainConfig& base, std::ostream& csv) {
  struct Row {
    const char* name;
    bool usaug;
    bool adacm;
  };
  const Row rows[4] = {{"neither", false, false},
                       {"usaug_only", true, false},
                       {"adacm_only", false, true},
                       {"both", true, true}};
  constexpr int kSeeds = 3;

  csv << "config,usaug,adacm,mean_miou,miou_seed1,miou_seed2,miou_seed3\n";
  for (const Row& row : rows) {
    double mious[kSeeds] = {0, 0, 0};
    for (int s = 0; s < kSeeds; ++s) {
      TrainConfig cfg = base;
      cfg.use_usaug = row.usaug;
      cfg.use_adacm = row.adacm;
      cfg.supervised_only = false;
      cfg.seed = base.seed + static_cast<std::uint64_t>(s);
      cfg.data_seed = base.effective_data_seed();  // identical split in every row
      cfg.out_dir =
          (fs::path(base.out_dir) / (std::string(row.name) + "_s" + std::to_string(s)))
              .string();
      mious[s] = run_training(cfg).final_eval.miou;
    }
    const double mean = (mious[0] + mious[1] + mious[2]) / 3.0;
    csv << row.name << ',' << (row.usaug ? "1" : "0") << ',' << (row.adacm ? "1" : "0")
        << ',' << format_g10(mean) << ',' << format_g10(mious[0]) << ','
        << format_g10(mious[1]) << ',' << format_g10(mious[2]) << '\n';
  }
}

}  // namespace aacl
