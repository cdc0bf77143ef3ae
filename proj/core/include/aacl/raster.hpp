#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace aacl {

// Label value that marks pixels excluded from every loss and metric.
inline constexpr int kIgnoreLabel = 255;

// H x W x 3 image, row-major, channel-interleaved, values in [0, 1].
// u8 exists only at the file boundary; everything in memory is floating
// point so photometric math stays continuous.
struct RasterImage {
  int height = 0;
  int width = 0;
  std::vector<double> data;  // size = height * width * 3

  static RasterImage filled(int h, int w, double value);

  double& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
  bool same_shape(const RasterImage& o) const { return height == o.height && width == o.width; }
};

// H x W class map; values in [0, C-1] or kIgnoreLabel.
struct LabelMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;  // size = height * width

  static LabelMask filled(int h, int w, std::uint8_t value);

  std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
};

// H x W x C per-pixel probability simplex, pixel-major layout.
struct ProbMap {
  int height = 0;
  int width = 0;
  int classes = 0;
  std::vector<double> data;  // size = height * width * classes

  static ProbMap uniform(int h, int w, int c);

  double& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * classes + c]; }
  double at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * classes + c]; }
  const double* pixel(std::size_t i) const { return data.data() + i * classes; }
  double* pixel(std::size_t i) { return data.data() + i * classes; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
};

// Pre-softmax model output, same layout as ProbMap but unbounded.
struct Logits {
  int height = 0;
  int width = 0;
  int classes = 0;
  std::vector<double> data;

  static Logits zeros(int h, int w, int c);

  double& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * classes + c]; }
  double at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * classes + c]; }
  const double* pixel(std::size_t i) const { return data.data() + i * classes; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
};

// Per-pixel softmax, stabilized by max subtraction. Throws on NaN/Inf input.
ProbMap softmax(const Logits& logits);

// Argmax class per pixel; ties go to the lowest class index.
LabelMask argmax_labels(const ProbMap& probs);

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// u8 <-> [0,1] mapping used by the codecs.
std::uint8_t to_byte(double v);
inline double from_byte(std::uint8_t b) { return b / 255.0; }

// Binary PPM (P6) and PGM (P5) codecs, maxval 255. The header is the strict
// canonical form "P6\n<w> <h>\n255\n" (each separator a single whitespace
// byte), which makes write(read(f)) byte-identical for every accepted file.
RasterImage read_ppm(const std::string& path);
void write_ppm(const RasterImage& image, const std::string& path);

// num_classes validates stored bytes: value < num_classes or kIgnoreLabel.
LabelMask read_pgm(const std::string& path, int num_classes);
void write_pgm(const LabelMask& mask, const std::string& path);

}  // namespace aacl
