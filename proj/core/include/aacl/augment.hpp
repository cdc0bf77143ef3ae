#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "aacl/raster.hpp"
#include "aacl/rng.hpp"

namespace aacl {

// The ten photometric operators used for strong augmentation.
enum class AugOpKind {
  Contrast,
  Equalize,
  Blur,
  Brightness,
  Saturation,
  Sharpness,
  Posterize,
  Solarize,
  Hue,
  Grayscale,
};

inline constexpr std::array<AugOpKind, 10> kAllAugOps = {
    AugOpKind::Contrast,  AugOpKind::Equalize,  AugOpKind::Blur,
    AugOpKind::Brightness, AugOpKind::Saturation, AugOpKind::Sharpness,
    AugOpKind::Posterize, AugOpKind::Solarize,  AugOpKind::Hue,
    AugOpKind::Grayscale,
};

const char* to_string(AugOpKind kind);

// Magnitude ranges. `sample_*` is what the recipe sampler draws from;
// `valid_*` is what apply_op accepts (slightly wider, so identity settings
// like posterize 8 bits remain expressible).
struct AugParamRange {
  double sample_lo = 0.0;
  double sample_hi = 0.0;
  double valid_lo = 0.0;
  double valid_hi = 0.0;
  bool integral = false;   // posterize bit count
  bool parameterless = false;  // equalize
};

const AugParamRange& param_range(AugOpKind kind);

struct AugStep {
  AugOpKind kind;
  double param = 0.0;
};

// Replayable record of one strong-augmentation draw: k distinct ops in a
// random order with their sampled magnitudes.
struct AugRecipe {
  std::vector<AugStep> steps;
  std::uint64_t seed = 0;
};

// Applies a single operator. Output has the input's shape, values clamped to
// [0, 1]; pure function of (image, kind, param). Out-of-range params throw.
//
// Semantics per op (factor blends are (1-f)*reference + f*input, so factor 1
// is exactly the input):
//   Contrast f    reference = per-channel image mean
//   Brightness f  reference = 0
//   Saturation f  reference = per-pixel luma (0.299 r + 0.587 g + 0.114 b)
//   Grayscale b   blend toward per-pixel luma: (1-b)*input + b*luma
//   Sharpness a   unsharp mask: input + a*(input - boxblur3(input))
//   Blur sigma    3x3 Gaussian, clamp-to-edge borders
//   Posterize n   keep the top n bits of the u8 level round(v*255)
//   Solarize t    v >= t maps to 1-v
//   Hue deg       hue rotation in HSV space; 0 degrees is the identity
//   Equalize      per-channel histogram equalization on 256 u8 levels:
//                 map(L) = round((cdf(L)-cdf_min)*255/(N-cdf_min)), where
//                 cdf_min is the count of the lowest occupied level; a
//                 single-level channel is left unchanged
RasterImage apply_op(const RasterImage& image, AugOpKind kind, double param);

// Draws k distinct ops (1 <= k <= 10) in random order, each with a magnitude
// drawn uniformly from its sample range. Fully determined by the seed.
AugRecipe sample_recipe(int k, std::uint64_t seed);

// Applies the recipe steps left to right. Replay is bit-exact.
RasterImage usaug(const RasterImage& image, const AugRecipe& recipe);

// The constant strong augmentation used when USAug is toggled off
// (ablation baseline): a fixed op order with fixed magnitudes.
const AugRecipe& fixed_strong_recipe();

}  // namespace aacl
