#include "aacl/adacm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aacl {

namespace {

constexpr double kProbFloor = 1e-12;

double pixel_entropy_nat(const double* p, int classes) {
  double h = 0.0;
  for (int c = 0; c < classes; ++c)
    if (p[c] > 0.0) h -= p[c] * std::log(std::max(p[c], kProbFloor));
  return h;
}

}  // namespace

double compute_alpha(const ProbMap& weak_probs, const AlphaConfig& cfg) {
  const std::size_t n = weak_probs.pixel_count();
  if (n == 0 || weak_probs.classes < 2)
    throw std::invalid_argument("compute_alpha: empty probability map");

  const double divisor = cfg.normalize_by_log_classes
                             ? std::log(static_cast<double>(weak_probs.classes))
                             : static_cast<double>(weak_probs.classes);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = weak_probs.pixel(i);
    double pmax = p[0];
    for (int c = 1; c < weak_probs.classes; ++c) pmax = std::max(pmax, p[c]);
    sum += pmax * (1.0 - pixel_entropy_nat(p, weak_probs.classes) / divisor);
  }
  return sum / static_cast<double>(n);
}

MixMode mix_mode_for(double r, double alpha) {
  return r < alpha ? MixMode::LabeledMix : MixMode::UnlabeledMix;
}

CutMask sample_mask(int height, int width, Rng& rng) {
  if (height < 4 || width < 4)
    throw std::invalid_argument("sample_mask: dimensions must be >= 4");

  const double total = static_cast<double>(height) * width;
  const double target_area = rng.uniform(0.25, 0.5) * total;
  const double aspect = rng.uniform(0.5, 2.0);  // rect_h / rect_w

  int rect_h = std::clamp(static_cast<int>(std::lround(std::sqrt(target_area * aspect))), 1, height);
  int rect_w = std::clamp(static_cast<int>(std::lround(target_area / rect_h)), 1, width);

  // integer rounding can push the area outside [0.25, 0.5]; nudge back in
  auto area = [&] { return static_cast<double>(rect_h) * rect_w / total; };
  while (area() < 0.25) {
    if (rect_w < width) ++rect_w;
    else if (rect_h < height) ++rect_h;
    else break;
  }
  while (area() > 0.5) {
    if (rect_w > 1 && (static_cast<double>(rect_h) * (rect_w - 1) / total) >= 0.25) --rect_w;
    else if (rect_h > 1) --rect_h;
    else break;
  }

  CutMask mask;
  mask.height = height;
  mask.width = width;
  mask.rect_h = rect_h;
  mask.rect_w = rect_w;
  mask.top = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(height - rect_h) + 1));
  mask.left = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(width - rect_w) + 1));
  return mask;
}

AdaCmDecision decide(const ProbMap& weak_probs, Rng& rng, const AlphaConfig& cfg) {
  AdaCmDecision d;
  d.alpha = compute_alpha(weak_probs, cfg);
  d.r = rng.uniform();
  d.mask = sample_mask(weak_probs.height, weak_probs.width, rng);
  d.mode = mix_mode_for(d.r, d.alpha);
  return d;
}

AdaCmDecision decide_with_alpha(double alpha, int height, int width, Rng& rng) {
  AdaCmDecision d;
  d.alpha = alpha;
  d.r = rng.uniform();
  d.mask = sample_mask(height, width, rng);
  d.mode = mix_mode_for(d.r, d.alpha);
  return d;
}

RasterImage mix_images(const RasterImage& primary, const RasterImage& auxiliary,
                       const CutMask& mask) {
  if (!primary.same_shape(auxiliary) || primary.height != mask.height ||
      primary.width != mask.width)
    throw std::invalid_argument("mix_images: dimension mismatch");

  RasterImage out = primary;
  for (int y = mask.top; y < mask.top + mask.rect_h; ++y)
    for (int x = mask.left; x < mask.left + mask.rect_w; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = auxiliary.at(y, x, c);
  return out;
}

namespace {

SoftTarget make_base_target(const ProbMap& weak_primary) {
  SoftTarget target;
  target.probs = weak_primary;
  target.flags.assign(weak_primary.pixel_count(),
                      static_cast<std::uint8_t>(TargetFlag::Gated));
  return target;
}

}  // namespace

SoftTarget mix_targets(const ProbMap& weak_primary, const ProbMap& weak_auxiliary,
                       const CutMask& mask) {
  if (weak_primary.height != weak_auxiliary.height ||
      weak_primary.width != weak_auxiliary.width ||
      weak_primary.classes != weak_auxiliary.classes ||
      weak_primary.height != mask.height || weak_primary.width != mask.width)
    throw std::invalid_argument("mix_targets: dimension mismatch");

  SoftTarget target = make_base_target(weak_primary);
  for (int y = mask.top; y < mask.top + mask.rect_h; ++y)
    for (int x = mask.left; x < mask.left + mask.rect_w; ++x)
      for (int c = 0; c < weak_primary.classes; ++c)
        target.probs.at(y, x, c) = weak_auxiliary.at(y, x, c);
  return target;
}

SoftTarget mix_targets(const ProbMap& weak_primary, const LabelMask& auxiliary_labels,
                       const CutMask& mask) {
  if (weak_primary.height != auxiliary_labels.height ||
      weak_primary.width != auxiliary_labels.width ||
      weak_primary.height != mask.height || weak_primary.width != mask.width)
    throw std::invalid_argument("mix_targets: dimension mismatch");

  SoftTarget target = make_base_target(weak_primary);
  const int classes = weak_primary.classes;
  for (int y = mask.top; y < mask.top + mask.rect_h; ++y) {
    for (int x = mask.left; x < mask.left + mask.rect_w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * mask.width + x;
      const int label = auxiliary_labels.at(y, x);
      if (label == kIgnoreLabel) {
        for (int c = 0; c < classes; ++c) target.probs.at(y, x, c) = 1.0 / classes;
        target.flags[i] = static_cast<std::uint8_t>(TargetFlag::Excluded);
        continue;
      }
      if (label >= classes)
        throw std::invalid_argument("mix_targets: label out of range");
      for (int c = 0; c < classes; ++c)
        target.probs.at(y, x, c) = (c == label) ? 1.0 : 0.0;
      target.flags[i] = static_cast<std::uint8_t>(TargetFlag::AlwaysReliable);
    }
  }
  return target;
}

}  // namespace aacl
