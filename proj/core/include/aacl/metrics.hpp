#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "aacl/raster.hpp"

namespace aacl {

// C x C pixel counts, rows ground truth, columns prediction. Ignore pixels
// never enter. Merging shards is plain addition, so accumulation order is
// irrelevant.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes);

  void accumulate(const LabelMask& prediction, const LabelMask& ground_truth);
  void merge(const ConfusionMatrix& other);

  int classes() const { return classes_; }
  std::uint64_t at(int gt, int pred) const {
    return counts_[static_cast<std::size_t>(gt) * classes_ + pred];
  }
  std::uint64_t total() const;

 private:
  int classes_;
  std::vector<std::uint64_t> counts_;
};

// Per-class IoU with NaN marking classes absent from both prediction and
// ground truth; those classes are excluded from the mean.
struct EvalReport {
  std::vector<double> per_class_iou;  // NaN = absent
  double miou = 0.0;
  int classes_in_mean = 0;
};

EvalReport iou_report(const ConfusionMatrix& cm);

// CSV rows "class,iou" (absent classes print NAN) followed by a miou row,
// matching the per-class reporting layout used by the eval subcommand.
void write_eval_csv(const EvalReport& report, const std::vector<std::string>& class_names,
                    std::ostream& out);

}  // namespace aacl
