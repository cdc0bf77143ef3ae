#pragma once

#include <cstdint>
#include <vector>

#include "aacl/adacm.hpp"
#include "aacl/raster.hpp"

namespace aacl {

// H x W scalar field (per-pixel entropies).
struct ScalarMap {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
};

struct GateConfig {
  double tau_percent = 20.0;  // percentile of highest-entropy pixels to drop
};

// Objective summary for one step. l_total is the exact expression
// l_sup + lambda_con * l_con, asserted as an identity by the tests.
struct LossReport {
  double l_sup = 0.0;
  double l_con = 0.0;
  double l_total = 0.0;
  double lambda_con = 1.0;
  double retained_fraction = 0.0;
};

// Natural-log entropy per pixel, 0*ln(0) := 0. Values lie in [0, ln C].
ScalarMap pixel_entropy(const ProbMap& probs);

// Reliability mask: the tau% highest-entropy pixels get 0, the rest 1.
// Exactly ceil(tau/100 * N) pixels are dropped; ties break by pixel index
// (lower index dropped first).
std::vector<std::uint8_t> entropy_gate(const ScalarMap& entropy, const GateConfig& cfg);

// Mean cross-entropy over non-ignore pixels: -ln p[label]. Throws when every
// pixel is ignored (the mean is undefined).
double supervised_loss(const Logits& logits, const LabelMask& labels);

// dLoss/dlogits for supervised_loss: (softmax - onehot) / N_valid per valid
// pixel, zero rows for ignore pixels.
Logits supervised_loss_grad(const Logits& logits, const LabelMask& labels);

struct ConsistencyResult {
  double loss = 0.0;
  double retained_fraction = 0.0;  // pixels whose effective gate is open
};

// Soft cross-entropy between the strong prediction and the mixed target,
// averaged over all N pixels; a closed gate zeroes a pixel's contribution
// without shrinking N. Effective gate per pixel: Excluded -> 0,
// AlwaysReliable -> 1, otherwise the entropy gate bit.
ConsistencyResult consistency_loss(const Logits& strong_logits, const SoftTarget& target,
                                   const std::vector<std::uint8_t>& gate);

// dLoss/dlogits for consistency_loss: gate * (softmax - target) / N.
Logits consistency_loss_grad(const Logits& strong_logits, const SoftTarget& target,
                             const std::vector<std::uint8_t>& gate);

// Combines the per-pixel flag channel of the target with the entropy gate.
std::vector<std::uint8_t> effective_gate(const SoftTarget& target,
                                         const std::vector<std::uint8_t>& entropy_gate_bits);

LossReport total_loss(double l_sup, double l_con, double lambda_con);

}  // namespace aacl
