#include "aacl/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace aacl {

ConfusionMatrix::ConfusionMatrix(int classes)
    : classes_(classes), counts_(static_cast<std::size_t>(classes) * classes, 0) {
  if (classes < 2) throw std::invalid_argument("ConfusionMatrix: classes must be >= 2");
}

void ConfusionMatrix::accumulate(const LabelMask& prediction, const LabelMask& ground_truth) {
  if (prediction.height != ground_truth.height || prediction.width != ground_truth.width)
    throw std::invalid_argument("ConfusionMatrix::accumulate: dimension mismatch");
  for (std::size_t i = 0; i < ground_truth.data.size(); ++i) {
    const int gt = ground_truth.data[i];
    if (gt == kIgnoreLabel) continue;
    const int pred = prediction.data[i];
    if (gt >= classes_ || pred >= classes_)
      throw std::invalid_argument("ConfusionMatrix::accumulate: label out of range");
    counts_[static_cast<std::size_t>(gt) * classes_ + pred]++;
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes_ != classes_)
    throw std::invalid_argument("ConfusionMatrix::merge: class count mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

EvalReport iou_report(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw std::invalid_argument("iou_report: empty confusion matrix");

  EvalReport report;
  report.per_class_iou.assign(cm.classes(), std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  for (int c = 0; c < cm.classes(); ++c) {
    std::uint64_t tp = cm.at(c, c), fp = 0, fn = 0;
    for (int other = 0; other < cm.classes(); ++other) {
      if (other == c) continue;
      fp += cm.at(other, c);
      fn += cm.at(c, other);
    }
    const std::uint64_t uni = tp + fp + fn;
    if (uni == 0) continue;  // absent class, stays NaN and out of the mean
    report.per_class_iou[c] = static_cast<double>(tp) / static_cast<double>(uni);
    sum += report.per_class_iou[c];
    report.classes_in_mean++;
  }
  report.miou = report.classes_in_mean > 0 ? sum / report.classes_in_mean : 0.0;
  return report;
}

void write_eval_csv(const EvalReport& report, const std::vector<std::string>& class_names,
                    std::ostream& out) {
  if (class_names.size() != report.per_class_iou.size())
    throw std::invalid_argument("write_eval_csv: class name count mismatch");
  out << "class,iou\n";
  char buf[64];
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    const double v = report.per_class_iou[c];
    if (std::isnan(v)) {
      out << class_names[c] << ",NAN\n";
    } else {
      std::snprintf(buf, sizeof(buf), "%.10g", v);
      out << class_names[c] << ',' << buf << '\n';
    }
  }
  std::snprintf(buf, sizeof(buf), "%.10g", report.miou);
  out << "miou," << buf << '\n';
}

}  // namespace aacl
