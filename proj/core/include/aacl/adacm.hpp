#pragma once

#include <cstdint>
#include <vector>

#include "aacl/raster.hpp"
#include "aacl/rng.hpp"

namespace aacl {

// Rectangular CutMix mask. Value 1 marks pixels kept from the primary image,
// 0 marks the pasted rectangle. The rectangle is fully in-bounds and covers
// between 25% and 50% of the area.
struct CutMask {
  int height = 0;
  int width = 0;
  int top = 0;
  int left = 0;
  int rect_h = 0;
  int rect_w = 0;

  bool keeps(int y, int x) const {
    return y < top || y >= top + rect_h || x < left || x >= left + rect_w;
  }
  double area_fraction() const {
    return static_cast<double>(rect_h) * rect_w /
           (static_cast<double>(height) * width);
  }
};

enum class MixMode : std::uint8_t {
  UnlabeledMix,  // paste from the auxiliary unlabeled image
  LabeledMix,    // paste from the auxiliary labeled image
};

// The shared state applied identically to the strong input and its target:
// one random draw r, the trigger probability alpha, and one mask.
struct AdaCmDecision {
  double r = 0.0;
  double alpha = 0.0;
  CutMask mask;
  MixMode mode = MixMode::UnlabeledMix;
};

enum class TargetFlag : std::uint8_t {
  Gated = 0,           // subject to the entropy gate
  AlwaysReliable = 1,  // pasted ground truth, bypasses the gate
  Excluded = 2,        // pasted ignore pixel, contributes nothing
};

// Per-pixel soft target for the consistency loss. The distribution rows are
// constants with respect to the model parameters.
struct SoftTarget {
  ProbMap probs;
  std::vector<std::uint8_t> flags;  // TargetFlag per pixel

  TargetFlag flag(std::size_t i) const { return static_cast<TargetFlag>(flags[i]); }
};

struct AlphaConfig {
  // Entropy divisor for the trigger probability. The default divides by the
  // class count C; the alternate divides by ln C (experimentation toggle).
  bool normalize_by_log_classes = false;
};

// Trigger probability: mean over pixels of max_c p_c * (1 - H/C), with H the
// natural-log entropy. Lies in (0, 1] for any valid probability map.
double compute_alpha(const ProbMap& weak_probs, const AlphaConfig& cfg = {});

// Case selector for the mix: r < alpha pastes labeled content, r >= alpha
// pastes unlabeled content.
MixMode mix_mode_for(double r, double alpha);

// Uniform rectangle: area fraction uniform in [0.25, 0.5], position uniform
// over in-bounds placements. Requires height, width >= 4.
CutMask sample_mask(int height, int width, Rng& rng);

// Full decision from a weak prediction: draws r, computes alpha, samples the
// mask, picks the mode.
AdaCmDecision decide(const ProbMap& weak_probs, Rng& rng, const AlphaConfig& cfg = {});

// Decision with an injected alpha (gate statistics tests, forced plain
// CutMix); skips the entropy computation.
AdaCmDecision decide_with_alpha(double alpha, int height, int width, Rng& rng);

// pixel = primary where mask keeps, auxiliary inside the rectangle.
RasterImage mix_images(const RasterImage& primary, const RasterImage& auxiliary,
                       const CutMask& mask);

// Unlabeled-mix target: pasted region takes the auxiliary weak prediction.
SoftTarget mix_targets(const ProbMap& weak_primary, const ProbMap& weak_auxiliary,
                       const CutMask& mask);

// Labeled-mix target: pasted region takes one-hot ground truth and is marked
// always reliable; pasted ignore pixels are excluded.
SoftTarget mix_targets(const ProbMap& weak_primary, const LabelMask& auxiliary_labels,
                       const CutMask& mask);

}  // namespace aacl
