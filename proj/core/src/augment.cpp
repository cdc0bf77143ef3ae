#include "aacl/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aacl {

const char* to_string(AugOpKind kind) {
  switch (kind) {
    case AugOpKind::Contrast: return "contrast";
    case AugOpKind::Equalize: return "equalize";
    case AugOpKind::Blur: return "blur";
    case AugOpKind::Brightness: return "brightness";
    case AugOpKind::Saturation: return "saturation";
    case AugOpKind::Sharpness: return "sharpness";
    case AugOpKind::Posterize: return "posterize";
    case AugOpKind::Solarize: return "solarize";
    case AugOpKind::Hue: return "hue";
    case AugOpKind::Grayscale: return "grayscale";
  }
  return "unknown";
}

const AugParamRange& param_range(AugOpKind kind) {
  static const std::array<AugParamRange, 10> ranges = {{
      {0.5, 1.5, 0.0, 2.0, false, false},    // Contrast
      {0.0, 0.0, 0.0, 0.0, false, true},     // Equalize
      {0.3, 1.5, 0.05, 3.0, false, false},   // Blur sigma
      {0.5, 1.5, 0.0, 2.0, false, false},    // Brightness
      {0.5, 1.5, 0.0, 2.0, false, false},    // Saturation
      {0.0, 1.0, 0.0, 1.0, false, false},    // Sharpness
      {4.0, 7.0, 1.0, 8.0, true, false},     // Posterize bits
      {0.5, 1.0, 0.0, 1.0, false, false},    // Solarize threshold
      {-18.0, 18.0, -180.0, 180.0, false, false},  // Hue degrees
      {0.5, 1.0, 0.0, 1.0, false, false},    // Grayscale blend
  }};
  return ranges[static_cast<std::size_t>(kind)];
}

namespace {

inline double luma(double r, double g, double b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

RasterImage blend_toward_channel_mean(const RasterImage& in, double f) {
  double mean[3] = {0.0, 0.0, 0.0};
  const std::size_t n = in.pixel_count();
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) mean[c] += in.data[i * 3 + c];
  for (int c = 0; c < 3; ++c) mean[c] /= static_cast<double>(n);

  RasterImage out = in;
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c)
      out.data[i * 3 + c] = clamp01((1.0 - f) * mean[c] + f * in.data[i * 3 + c]);
  return out;
}

RasterImage scale_values(const RasterImage& in, double f) {
  RasterImage out = in;
  for (double& v : out.data) v = clamp01(f * v);
  return out;
}

RasterImage blend_toward_luma(const RasterImage& in, double toward_luma_weight) {
  RasterImage out = in;
  const std::size_t n = in.pixel_count();
  const double b = toward_luma_weight;
  for (std::size_t i = 0; i < n; ++i) {
    const double* px = in.data.data() + i * 3;
    const double y = luma(px[0], px[1], px[2]);
    for (int c = 0; c < 3; ++c)
      out.data[i * 3 + c] = clamp01((1.0 - b) * px[c] + b * y);
  }
  return out;
}

// 3x3 convolution with clamp-to-edge borders; kernel is row-major.
RasterImage convolve3x3(const RasterImage& in, const double kernel[9]) {
  RasterImage out = in;
  const int h = in.height, w = in.width;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          const int sy = std::clamp(y + dy, 0, h - 1);
          for (int dx = -1; dx <= 1; ++dx) {
            const int sx = std::clamp(x + dx, 0, w - 1);
            acc += kernel[(dy + 1) * 3 + (dx + 1)] * in.at(sy, sx, c);
          }
        }
        out.at(y, x, c) = clamp01(acc);
      }
    }
  }
  return out;
}

RasterImage gaussian_blur3(const RasterImage& in, double sigma) {
  double kernel[9];
  double sum = 0.0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      kernel[(dy + 1) * 3 + (dx + 1)] = v;
      sum += v;
    }
  for (double& v : kernel) v /= sum;
  return convolve3x3(in, kernel);
}

RasterImage unsharp_mask(const RasterImage& in, double amount) {
  static const double box[9] = {1.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 9,
                                1.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 9};
  RasterImage smooth = convolve3x3(in, box);
  RasterImage out = in;
  for (std::size_t i = 0; i < in.data.size(); ++i)
    out.data[i] = clamp01(in.data[i] + amount * (in.data[i] - smooth.data[i]));
  return out;
}

RasterImage posterize(const RasterImage& in, int bits) {
  const std::uint8_t keep = static_cast<std::uint8_t>(0xFF << (8 - bits));
  RasterImage out = in;
  for (double& v : out.data) {
    const int level = static_cast<int>(std::lround(clamp01(v) * 255.0));
    v = (level & keep) / 255.0;
  }
  return out;
}

RasterImage solarize(const RasterImage& in, double threshold) {
  RasterImage out = in;
  for (double& v : out.data)
    if (v >= threshold) v = clamp01(1.0 - v);
  return out;
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d <= 0.0) {
    h = 0.0;
  } else if (mx == r) {
    h = 60.0 * std::fmod((g - b) / d + 6.0, 6.0);
  } else if (mx == g) {
    h = 60.0 * ((b - r) / d + 2.0);
  } else {
    h = 60.0 * ((r - g) / d + 4.0);
  }
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r1 = 0, g1 = 0, b1 = 0;
  switch (static_cast<int>(hp) % 6) {
    case 0: r1 = c; g1 = x; break;
    case 1: r1 = x; g1 = c; break;
    case 2: g1 = c; b1 = x; break;
    case 3: g1 = x; b1 = c; break;
    case 4: r1 = x; b1 = c; break;
    default: r1 = c; b1 = x; break;
  }
  const double m = v - c;
  r = r1 + m;
  g = g1 + m;
  b = b1 + m;
}

RasterImage rotate_hue(const RasterImage& in, double degrees) {
  if (degrees == 0.0) return in;
  RasterImage out = in;
  const std::size_t n = in.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const double* px = in.data.data() + i * 3;
    double h, s, v;
    rgb_to_hsv(px[0], px[1], px[2], h, s, v);
    h = std::fmod(h + degrees + 360.0, 360.0);
    double r, g, b;
    hsv_to_rgb(h, s, v, r, g, b);
    out.data[i * 3 + 0] = clamp01(r);
    out.data[i * 3 + 1] = clamp01(g);
    out.data[i * 3 + 2] = clamp01(b);
  }
  return out;
}

RasterImage equalize(const RasterImage& in) {
  RasterImage out = in;
  const std::size_t n = in.pixel_count();
  for (int c = 0; c < 3; ++c) {
    std::array<std::size_t, 256> hist{};
    for (std::size_t i = 0; i < n; ++i)
      hist[static_cast<std::size_t>(std::lround(clamp01(in.data[i * 3 + c]) * 255.0))]++;

    std::array<std::size_t, 256> cdf{};
    std::size_t run = 0;
    std::size_t cdf_min = 0;
    bool seen = false;
    for (int level = 0; level < 256; ++level) {
      run += hist[level];
      cdf[level] = run;
      if (!seen && hist[level] > 0) {
        cdf_min = run;
        seen = true;
      }
    }
    if (cdf_min == n) continue;  // single-level channel

    std::array<std::uint8_t, 256> map{};
    for (int level = 0; level < 256; ++level) {
      const double mapped =
          static_cast<double>(cdf[level] - std::min(cdf[level], cdf_min)) * 255.0 /
          static_cast<double>(n - cdf_min);
      map[level] = static_cast<std::uint8_t>(std::lround(mapped));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const int level = static_cast<int>(std::lround(clamp01(in.data[i * 3 + c]) * 255.0));
      out.data[i * 3 + c] = map[level] / 255.0;
    }
  }
  return out;
}

}  // namespace

RasterImage apply_op(const RasterImage& image, AugOpKind kind, double param) {
  const AugParamRange& range = param_range(kind);
  if (!range.parameterless) {
    if (param < range.valid_lo || param > range.valid_hi)
      throw std::invalid_argument(std::string(to_string(kind)) + ": parameter " +
                                  std::to_string(param) + " out of range");
    if (range.integral && param != std::floor(param))
      throw std::invalid_argument(std::string(to_string(kind)) +
                                  ": parameter must be integral");
  }

  switch (kind) {
    case AugOpKind::Contrast: return blend_toward_channel_mean(image, param);
    case AugOpKind::Equalize: return equalize(image);
    case AugOpKind::Blur: return gaussian_blur3(image, param);
    case AugOpKind::Brightness: return scale_values(image, param);
    case AugOpKind::Saturation: {
      // saturation factor f: (1-f)*luma + f*input, same as blending away
      // from the grayscale image
      RasterImage out = image;
      const std::size_t n = image.pixel_count();
      for (std::size_t i = 0; i < n; ++i) {
        const double* px = image.data.data() + i * 3;
        const double y = luma(px[0], px[1], px[2]);
        for (int c = 0; c < 3; ++c)
          out.data[i * 3 + c] = clamp01((1.0 - param) * y + param * px[c]);
      }
      return out;
    }
    case AugOpKind::Sharpness: return unsharp_mask(image, param);
    case AugOpKind::Posterize: return posterize(image, static_cast<int>(param));
    case AugOpKind::Solarize: return solarize(image, param);
    case AugOpKind::Hue: return rotate_hue(image, param);
    case AugOpKind::Grayscale: return blend_toward_luma(image, param);
  }
  throw std::invalid_argument("apply_op: unknown op");
}

AugRecipe sample_recipe(int k, std::uint64_t seed) {
  if (k < 1 || k > 10)
    throw std::invalid_argument("sample_recipe: k must be in [1, 10], got " +
                                std::to_string(k));
  Rng rng(seed);
  std::array<AugOpKind, 10> pool = kAllAugOps;
  // partial Fisher-Yates: the first k entries are a uniform draw without
  // replacement, already in random order
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.uniform_index(10 - i));
    std::swap(pool[i], pool[j]);
  }

  AugRecipe recipe;
  recipe.seed = seed;
  recipe.steps.reserve(k);
  for (int i = 0; i < k; ++i) {
    const AugParamRange& range = param_range(pool[i]);
    AugStep step{pool[i], 0.0};
    if (range.integral) {
      step.param = static_cast<double>(
          rng.uniform_int(static_cast<int>(range.sample_lo), static_cast<int>(range.sample_hi)));
    } else if (!range.parameterless) {
      step.param = rng.uniform(range.sample_lo, range.sample_hi);
    }
    recipe.steps.push_back(step);
  }
  return recipe;
}

RasterImage usaug(const RasterImage& image, const AugRecipe& recipe) {
  RasterImage out = image;
  for (const AugStep& step : recipe.steps) out = apply_op(out, step.kind, step.param);
  return out;
}

const AugRecipe& fixed_strong_recipe() {
  static const AugRecipe recipe = [] {
    AugRecipe r;
    r.steps = {
        {AugOpKind::Contrast, 1.25},
        {AugOpKind::Brightness, 0.8},
        {AugOpKind::Blur, 0.8},
        {AugOpKind::Saturation, 1.2},
    };
    return r;
  }();
  return recipe;
}

}  // namespace aacl
