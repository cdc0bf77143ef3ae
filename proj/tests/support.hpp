#pragma once

// Shared helpers for the test suites: independent brute-force oracles and
// finite-difference utilities. Nothing here calls back into the production
// code paths it is used to check.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "aacl/model.hpp"
#include "aacl/raster.hpp"
#include "aacl/rng.hpp"

namespace aacl_test {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("aacl_test_" + tag + "_" + std::to_string(++counter) + "_" +
             std::to_string(static_cast<std::uint64_t>(
                 std::random_device{}())));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& leaf = "") const {
    return leaf.empty() ? path_.string() : (path_ / leaf).string();
  }

 private:
  std::filesystem::path path_;
};

inline double luma_ref(double r, double g, double b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

// Brute-force histogram equalization on one channel: per pixel, counts are
// derived by direct comparison against every other pixel (no histogram, no
// cdf array), then mapped with the canonical formula.
inline std::vector<double> equalize_channel_bruteforce(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<int> levels(n);
  for (std::size_t i = 0; i < n; ++i)
    levels[i] = static_cast<int>(std::lround(std::min(1.0, std::max(0.0, values[i])) * 255.0));

  int min_level = 256;
  for (int l : levels) min_level = std::min(min_level, l);
  std::size_t count_min = 0;
  for (int l : levels)
    if (l == min_level) ++count_min;

  std::vector<double> out(n);
  if (count_min == n) return values;  // single-level channel stays put
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t count_le = 0;
    for (int l : levels)
      if (l <= levels[i]) ++count_le;
    const double mapped = static_cast<double>(count_le - count_min) * 255.0 /
                          static_cast<double>(n - count_min);
    out[i] = std::lround(mapped) / 255.0;
  }
  return out;
}

// Central finite differences of a scalar function of a Logits field.
template <typename LossFn>
aacl::Logits fd_logit_grad(const LossFn& loss, aacl::Logits point, double eps = 1e-4) {
  aacl::Logits grad = aacl::Logits::zeros(point.height, point.width, point.classes);
  for (std::size_t i = 0; i < point.data.size(); ++i) {
    const double orig = point.data[i];
    point.data[i] = orig + eps;
    const double up = loss(point);
    point.data[i] = orig - eps;
    const double down = loss(point);
    point.data[i] = orig;
    grad.data[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

// Central finite differences over every f32 model parameter. The divisor is
// the actually-representable difference between the two perturbed values, so
// f32 rounding of the probe points does not bias the estimate.
template <typename LossFn>
std::vector<double> fd_param_grads(const LossFn& loss, aacl::SegNetParams params,
                                   double eps = 1e-5) {
  const std::size_t n = params.parameter_count();
  std::vector<double> grads(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const float orig = params.flat(i);
    const float plus = static_cast<float>(static_cast<double>(orig) + eps);
    const float minus = static_cast<float>(static_cast<double>(orig) - eps);
    params.flat(i) = plus;
    const double up = loss(params);
    params.flat(i) = minus;
    const double down = loss(params);
    params.flat(i) = orig;
    grads[i] = (up - down) / (static_cast<double>(plus) - static_cast<double>(minus));
  }
  return grads;
}

inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

// Pearson chi-squared statistic against a uniform expectation.
inline double chi_squared_uniform(const std::vector<std::size_t>& observed,
                                  double total) {
  const double expected = total / static_cast<double>(observed.size());
  double stat = 0.0;
  for (std::size_t o : observed) {
    const double d = static_cast<double>(o) - expected;
    stat += d * d / expected;
  }
  return stat;
}

inline aacl::RasterImage random_image(int h, int w, aacl::Rng& rng, bool snap_u8 = false) {
  aacl::RasterImage img = aacl::RasterImage::filled(h, w, 0.0);
  for (double& v : img.data) {
    v = rng.uniform();
    if (snap_u8) v = std::lround(v * 255.0) / 255.0;
  }
  return img;
}

inline aacl::Logits random_logits(int h, int w, int c, aacl::Rng& rng, double scale = 2.0) {
  aacl::Logits logits = aacl::Logits::zeros(h, w, c);
  for (double& v : logits.data) v = rng.uniform(-scale, scale);
  return logits;
}

inline aacl::ProbMap random_probs(int h, int w, int c, aacl::Rng& rng) {
  aacl::ProbMap probs = aacl::ProbMap::uniform(h, w, c);
  for (std::size_t i = 0; i < probs.pixel_count(); ++i) {
    double sum = 0.0;
    double* p = probs.pixel(i);
    for (int k = 0; k < c; ++k) {
      p[k] = 0.05 + rng.uniform();
      sum += p[k];
    }
    for (int k = 0; k < c; ++k) p[k] /= sum;
  }
  return probs;
}

}  // namespace aacl_test
