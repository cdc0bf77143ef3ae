#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "aacl/data.hpp"
#include "aacl/loss.hpp"
#include "aacl/metrics.hpp"
#include "aacl/model.hpp"

namespace aacl {

// Run configuration. File form is flat "key = value" lines with '#'
// comments; unknown keys are rejected so typos cannot silently fall back to
// defaults.
struct TrainConfig {
  int k = 8;                     // strong augmentations per recipe
  double tau_percent = 20.0;     // entropy gate percentile
  double lambda_con = 1.0;
  double lr = 1e-3;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int epochs = 100;
  double labeled_fraction = 0.125;
  std::uint64_t seed = 1;
  std::uint64_t data_seed = 0;   // 0: reuse `seed`; set to share splits across runs
  int image_size = 64;           // training crop, must be even
  int classes = 5;
  bool use_usaug = true;         // off: fixed strong augmentation baseline
  bool use_adacm = true;         // off: plain unlabeled-unlabeled CutMix
  bool supervised_only = false;
  bool alpha_norm_log_c = false; // alternate entropy divisor in the trigger
  int eval_every = 5;            // epochs between held-out evaluations
  bool log_adacm = false;
  std::string data_dir;
  std::string out_dir;

  std::uint64_t effective_data_seed() const { return data_seed == 0 ? seed : data_seed; }
};

TrainConfig parse_config_file(const std::string& path);
TrainConfig parse_config_text(const std::string& text, const std::string& origin);
// Canonical echo; parse_config_text(serialize_config(c)) reproduces c exactly.
std::string serialize_config(const TrainConfig& cfg);
void validate_config(const TrainConfig& cfg);

// Per-unit CutMix audit row (--log-adacm).
struct AdaCmLogRow {
  int unit = 0;
  MixMode mode = MixMode::UnlabeledMix;
  double r = 0.0;
  double alpha = 0.0;
  CutMask mask;
};

struct StepOutcome {
  LossReport loss;
  double alpha_mean = 0.0;
  int labeled_mix_count = 0;
  int unlabeled_mix_count = 0;
  double step_retained_fraction = 0.0;  // convenience alias of loss field
  std::vector<AdaCmLogRow> adacm_rows;
};

// One optimizer update. Per unit u of the four in a batch:
//   1. supervised branch on labeled image u;
//   2. weak forwards of the unlabeled pair (targets, no gradient);
//   3. trigger probability from the weak prediction, CutMix decision;
//   4. strong view of the primary unlabeled image, mixed with the strong
//      auxiliary view (unlabeled mix) or the weakly augmented auxiliary
//      labeled image (labeled mix);
//   5. target mixed with the same decision;
//   6. strong forward, entropy gate from the strong prediction, consistency
//      loss; 7. total loss, backward, SGD step.
// All randomness comes from step_seed; identical inputs give identical
// outcomes for any thread count.
StepOutcome train_step(SegNetParams& params, OptimizerState& opt, const TrainBatch& batch,
                       const TrainConfig& cfg, std::uint64_t step_seed);

EvalReport evaluate(const SegNetParams& params, const Dataset& dataset,
                    const std::vector<int>& ids);

struct EpochSummary {
  int epoch = 0;
  double mean_l_sup = 0.0;
  double mean_l_con = 0.0;
  double mean_l_total = 0.0;
};

struct RunRecord {
  TrainConfig config;
  std::vector<EpochSummary> epochs;
  std::vector<std::pair<int, double>> eval_history;  // (epoch, miou)
  EvalReport final_eval;
  double best_miou = 0.0;
  double wall_seconds = 0.0;
};

// Full training: dataset load, split, epochs x steps_per_epoch updates,
// periodic evaluation, checkpoints (best.ckpt, final.ckpt), train_log.csv,
// eval.csv and run.record under cfg.out_dir.
RunRecord run_training(const TrainConfig& cfg);

// Strong-augmentation sweep: one run per k in [1, 10] with plain CutMix
// forced, emitting "k,seed,miou" rows.
void sweep_k(const TrainConfig& base, std::ostream& csv);

// Component ablation: {fixed aug, USAug} x {plain CutMix, AdaCM}, three
// seeds per row, emitting per-row mean and per-seed mIoU.
void ablate(const TrainConfig& base, std::ostream& csv);

}  // namespace aacl
