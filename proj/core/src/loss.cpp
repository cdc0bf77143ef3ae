#include "aacl/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace aacl {

namespace {
constexpr double kProbFloor = 1e-12;
}

ScalarMap pixel_entropy(const ProbMap& probs) {
  ScalarMap out;
  out.height = probs.height;
  out.width = probs.width;
  out.data.resize(probs.pixel_count());
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double* p = probs.pixel(i);
    double h = 0.0;
    for (int c = 0; c < probs.classes; ++c)
      if (p[c] > 0.0) h -= p[c] * std::log(std::max(p[c], kProbFloor));
    out.data[i] = h;
  }
  return out;
}

std::vector<std::uint8_t> entropy_gate(const ScalarMap& entropy, const GateConfig& cfg) {
  const std::size_t n = entropy.data.size();
  if (n == 0) throw std::invalid_argument("entropy_gate: empty map");
  if (cfg.tau_percent < 0.0 || cfg.tau_percent > 100.0)
    throw std::invalid_argument("entropy_gate: tau_percent outside [0, 100]");

  const double raw = cfg.tau_percent * static_cast<double>(n) / 100.0;
  const std::size_t drop = static_cast<std::size_t>(
      std::max(0.0, std::ceil(raw - 1e-9)));

  std::vector<std::uint8_t> gate(n, 1);
  if (drop == 0) return gate;

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     return entropy.data[a] > entropy.data[b];
                   });
  for (std::size_t j = 0; j < std::min(drop, n); ++j) gate[order[j]] = 0;
  return gate;
}

double supervised_loss(const Logits& logits, const LabelMask& labels) {
  if (logits.height != labels.height || logits.width != labels.width)
    throw std::invalid_argument("supervised_loss: dimension mismatch");

  const ProbMap probs = softmax(logits);
  double sum = 0.0;
  std::size_t valid = 0;
  for (std::size_t i = 0; i < labels.data.size(); ++i) {
    const int label = labels.data[i];
    if (label == kIgnoreLabel) continue;
    if (label >= logits.classes)
      throw std::invalid_argument("supervised_loss: label out of range");
    sum -= std::log(std::max(probs.pixel(i)[label], kProbFloor));
    ++valid;
  }
  if (valid == 0)
    throw std::invalid_argument("supervised_loss: all pixels ignored, mean undefined");
  return sum / static_cast<double>(valid);
}

Logits supervised_loss_grad(const Logits& logits, const LabelMask& labels) {
  if (logits.height != labels.height || logits.width != labels.width)
    throw std::invalid_argument("supervised_loss_grad: dimension mismatch");

  std::size_t valid = 0;
  for (std::uint8_t l : labels.data)
    if (l != kIgnoreLabel) ++valid;
  if (valid == 0)
    throw std::invalid_argument("supervised_loss_grad: all pixels ignored");

  const ProbMap probs = softmax(logits);
  Logits grad = Logits::zeros(logits.height, logits.width, logits.classes);
  const double inv_n = 1.0 / static_cast<double>(valid);
  for (std::size_t i = 0; i < labels.data.size(); ++i) {
    const int label = labels.data[i];
    if (label == kIgnoreLabel) continue;
    const double* p = probs.pixel(i);
    double* g = grad.data.data() + i * logits.classes;
    for (int c = 0; c < logits.classes; ++c)
      g[c] = (p[c] - (c == label ? 1.0 : 0.0)) * inv_n;
  }
  return grad;
}

std::vector<std::uint8_t> effective_gate(const SoftTarget& target,
                                         const std::vector<std::uint8_t>& entropy_gate_bits) {
  if (target.flags.size() != entropy_gate_bits.size())
    throw std::invalid_argument("effective_gate: size mismatch");
  std::vector<std::uint8_t> gate(entropy_gate_bits.size());
  for (std::size_t i = 0; i < gate.size(); ++i) {
    switch (target.flag(i)) {
      case TargetFlag::Excluded: gate[i] = 0; break;
      case TargetFlag::AlwaysReliable: gate[i] = 1; break;
      case TargetFlag::Gated: gate[i] = entropy_gate_bits[i]; break;
    }
  }
  return gate;
}

ConsistencyResult consistency_loss(const Logits& strong_logits, const SoftTarget& target,
                                   const std::vector<std::uint8_t>& gate) {
  const std::size_t n = strong_logits.pixel_count();
  if (target.probs.height != strong_logits.height ||
      target.probs.width != strong_logits.width ||
      target.probs.classes != strong_logits.classes || gate.size() != n)
    throw std::invalid_argument("consistency_loss: dimension mismatch");

  const ProbMap probs = softmax(strong_logits);
  double sum = 0.0;
  std::size_t retained = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!gate[i]) continue;
    ++retained;
    const double* t = target.probs.pixel(i);
    const double* p = probs.pixel(i);
    for (int c = 0; c < strong_logits.classes; ++c)
      if (t[c] > 0.0) sum -= t[c] * std::log(std::max(p[c], kProbFloor));
  }
  ConsistencyResult result;
  result.loss = sum / static_cast<double>(n);
  result.retained_fraction = static_cast<double>(retained) / static_cast<double>(n);
  return result;
}

Logits consistency_loss_grad(const Logits& strong_logits, const SoftTarget& target,
                             const std::vector<std::uint8_t>& gate) {
  const std::size_t n = strong_logits.pixel_count();
  if (target.probs.height != strong_logits.height ||
      target.probs.width != strong_logits.width ||
      target.probs.classes != strong_logits.classes || gate.size() != n)
    throw std::invalid_argument("consistency_loss_grad: dimension mismatch");

  const ProbMap probs = softmax(strong_logits);
  Logits grad = Logits::zeros(strong_logits.height, strong_logits.width,
                              strong_logits.classes);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!gate[i]) continue;
    const double* t = target.probs.pixel(i);
    const double* p = probs.pixel(i);
    double* g = grad.data.data() + i * strong_logits.classes;
    for (int c = 0; c < strong_logits.classes; ++c) g[c] = (p[c] - t[c]) * inv_n;
  }
  return grad;
}

LossReport total_loss(double l_sup, double l_con, double lambda_con) {
  if (!std::isfinite(l_sup) || !std::isfinite(l_con) || !std::isfinite(lambda_con))
    throw std::invalid_argument("total_loss: non-finite input");
  LossReport report;
  report.l_sup = l_sup;
  report.l_con = l_con;
  report.lambda_con = lambda_con;
  report.l_total = l_sup + lambda_con * l_con;
  return report;
}

}  // namespace aacl
