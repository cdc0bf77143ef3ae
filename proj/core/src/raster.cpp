#include "aacl/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace aacl {

RasterImage RasterImage::filled(int h, int w, double value) {
  RasterImage img;
  img.height = h;
  img.width = w;
  img.data.assign(static_cast<std::size_t>(h) * w * 3, value);
  return img;
}

LabelMask LabelMask::filled(int h, int w, std::uint8_t value) {
  LabelMask m;
  m.height = h;
  m.width = w;
  m.data.assign(static_cast<std::size_t>(h) * w, value);
  return m;
}

ProbMap ProbMap::uniform(int h, int w, int c) {
  ProbMap p;
  p.height = h;
  p.width = w;
  p.classes = c;
  p.data.assign(static_cast<std::size_t>(h) * w * c, 1.0 / c);
  return p;
}

Logits Logits::zeros(int h, int w, int c) {
  Logits l;
  l.height = h;
  l.width = w;
  l.classes = c;
  l.data.assign(static_cast<std::size_t>(h) * w * c, 0.0);
  return l;
}

ProbMap softmax(const Logits& logits) {
  ProbMap probs;
  probs.height = logits.height;
  probs.width = logits.width;
  probs.classes = logits.classes;
  probs.data.resize(logits.data.size());

  const int c_count = logits.classes;
  const std::size_t n = logits.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = logits.data.data() + i * c_count;
    double* p = probs.data.data() + i * c_count;
    double zmax = z[0];
    for (int c = 0; c < c_count; ++c) {
      if (!std::isfinite(z[c]))
        throw std::invalid_argument("softmax: non-finite logit at pixel " +
                                    std::to_string(i));
      zmax = std::max(zmax, z[c]);
    }
    double sum = 0.0;
    for (int c = 0; c < c_count; ++c) {
      p[c] = std::exp(z[c] - zmax);
      sum += p[c];
    }
    for (int c = 0; c < c_count; ++c) p[c] /= sum;
  }
  return probs;
}

LabelMask argmax_labels(const ProbMap& probs) {
  LabelMask out;
  out.height = probs.height;
  out.width = probs.width;
  out.data.resize(probs.pixel_count());
  const int c_count = probs.classes;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double* p = probs.pixel(i);
    int best = 0;
    for (int c = 1; c < c_count; ++c)
      if (p[c] > p[best]) best = c;
    out.data[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(clamp01(v) * 255.0));
}

namespace {

bool is_pnm_ws(int c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// Reads one decimal integer followed by exactly one whitespace byte.
// Leading zeros are rejected so that re-encoding reproduces the input.
int read_header_int(std::istream& in, const std::string& path) {
  std::string digits;
  int c;
  while ((c = in.get()) != EOF && c >= '0' && c <= '9') digits.push_back(static_cast<char>(c));
  if (digits.empty() || !is_pnm_ws(c))
    throw std::runtime_error(path + ": malformed header");
  if (digits.size() > 1 && digits[0] == '0')
    throw std::runtime_error(path + ": malformed header (leading zeros)");
  if (digits.size() > 7) throw std::runtime_error(path + ": header value out of range");
  return std::stoi(digits);
}

std::vector<std::uint8_t> read_pnm_payload(const std::string& path, const char* magic,
                                           int& height, int& width) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  int sep = in.get();
  if (m0 != magic[0] || m1 != magic[1] || !is_pnm_ws(sep))
    throw std::runtime_error(path + ": not a " + magic + " file");
  width = read_header_int(in, path);
  height = read_header_int(in, path);
  const int maxval = read_header_int(in, path);
  if (width <= 0 || height <= 0)
    throw std::runtime_error(path + ": invalid dimensions");
  if (maxval != 255)
    throw std::runtime_error(path + ": unsupported maxval " + std::to_string(maxval));
  const std::size_t count =
      static_cast<std::size_t>(height) * width * (magic[1] == '6' ? 3 : 1);
  std::vector<std::uint8_t> payload(count);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count)
    throw std::runtime_error(path + ": truncated payload");
  return payload;
}

void write_pnm(const std::string& path, const char* magic, int height, int width,
               const std::vector<std::uint8_t>& payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  char header[64];
  const int len = std::snprintf(header, sizeof(header), "%s\n%d %d\n255\n", magic, width, height);
  out.write(header, len);
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace

RasterImage read_ppm(const std::string& path) {
  RasterImage img;
  const auto payload = read_pnm_payload(path, "P6", img.height, img.width);
  img.data.resize(payload.size());
  for (std::size_t i = 0; i < payload.size(); ++i) img.data[i] = from_byte(payload[i]);
  return img;
}

void write_ppm(const RasterImage& image, const std::string& path) {
  if (image.data.size() != image.pixel_count() * 3)
    throw std::invalid_argument(path + ": image data/shape mismatch");
  std::vector<std::uint8_t> payload(image.data.size());
  for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = to_byte(image.data[i]);
  write_pnm(path, "P6", image.height, image.width, payload);
}

LabelMask read_pgm(const std::string& path, int num_classes) {
  LabelMask mask;
  auto payload = read_pnm_payload(path, "P5", mask.height, mask.width);
  for (std::size_t i = 0; i < payload.size(); ++i) {
    if (payload[i] >= num_classes && payload[i] != kIgnoreLabel)
      throw std::runtime_error(path + ": label " + std::to_string(payload[i]) +
                               " out of range for " + std::to_string(num_classes) +
                               " classes at pixel " + std::to_string(i));
  }
  mask.data = std::move(payload);
  return mask;
}

void write_pgm(const LabelMask& mask, const std::string& path) {
  if (mask.data.size() != mask.pixel_count())
    throw std::invalid_argument(path + ": mask data/shape mismatch");
  write_pnm(path, "P5", mask.height, mask.width, mask.data);
}

}  // namespace aacl
