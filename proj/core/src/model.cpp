#include "aacl/model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "aacl/rng.hpp"

namespace aacl {

namespace {

std::array<std::vector<float> SegNetParams::*, 8> tensor_members() {
  return {&SegNetParams::conv1_w, &SegNetParams::conv1_b,
          &SegNetParams::conv2_w, &SegNetParams::conv2_b,
          &SegNetParams::conv3_w, &SegNetParams::conv3_b,
          &SegNetParams::head_w,  &SegNetParams::head_b};
}

std::array<std::vector<double> ParamGrads::*, 8> grad_members() {
  return {&ParamGrads::conv1_w, &ParamGrads::conv1_b,
          &ParamGrads::conv2_w, &ParamGrads::conv2_b,
          &ParamGrads::conv3_w, &ParamGrads::conv3_b,
          &ParamGrads::head_w,  &ParamGrads::head_b};
}

std::array<std::size_t, 8> tensor_sizes(int classes) {
  const std::size_t c1 = SegNetParams::kC1, c2 = SegNetParams::kC2,
                    c3 = SegNetParams::kC3;
  return {c1 * 3 * 9, c1, c2 * c1 * 9, c2, c3 * c2 * 9, c3,
          static_cast<std::size_t>(classes) * c3, static_cast<std::size_t>(classes)};
}

// 3x3 convolution, zero padding 1, stride s. Planes are [c][y][x].
void conv3x3_forward(const double* in, int in_ch, int h, int w, const float* weights,
                     const float* bias, int out_ch, int stride, double* out) {
  const int oh = h / stride, ow = w / stride;
  const std::size_t in_plane = static_cast<std::size_t>(h) * w;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;

  for (int co = 0; co < out_ch; ++co) {
    double* out_c = out + co * out_plane;
    std::fill(out_c, out_c + out_plane, static_cast<double>(bias[co]));
    for (int ci = 0; ci < in_ch; ++ci) {
      const double* in_c = in + ci * in_plane;
      const float* w_base = weights + ((co * in_ch) + ci) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double wv = w_base[ky * 3 + kx];
          const int dy = ky - 1, dx = kx - 1;
          int x_lo = 0, x_hi = ow;
          while (x_lo < ow && x_lo * stride + dx < 0) ++x_lo;
          while (x_hi > x_lo && (x_hi - 1) * stride + dx >= w) --x_hi;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride + dy;
            if (iy < 0 || iy >= h) continue;
            const double* in_row = in_c + static_cast<std::size_t>(iy) * w + dx;
            double* out_row = out_c + static_cast<std::size_t>(oy) * ow;
            if (stride == 1) {
              for (int ox = x_lo; ox < x_hi; ++ox) out_row[ox] += wv * in_row[ox];
            } else {
              for (int ox = x_lo; ox < x_hi; ++ox)
                out_row[ox] += wv * in_row[static_cast<std::size_t>(ox) * stride];
            }
          }
        }
      }
    }
  }
}

// Gradients of conv3x3_forward w.r.t. weights, bias and (optionally) input.
void conv3x3_backward(const double* in, int in_ch, int h, int w, const float* weights,
                      int out_ch, int stride, const double* grad_out, double* grad_w,
                      double* grad_b, double* grad_in) {
  const int oh = h / stride, ow = w / stride;
  const std::size_t in_plane = static_cast<std::size_t>(h) * w;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;

  for (int co = 0; co < out_ch; ++co) {
    const double* g_out = grad_out + co * out_plane;
    double bsum = 0.0;
    for (std::size_t i = 0; i < out_plane; ++i) bsum += g_out[i];
    grad_b[co] += bsum;

    for (int ci = 0; ci < in_ch; ++ci) {
      const double* in_c = in + ci * in_plane;
      double* g_in_c = grad_in ? grad_in + ci * in_plane : nullptr;
      const float* w_base = weights + ((co * in_ch) + ci) * 9;
      double* gw_base = grad_w + ((co * in_ch) + ci) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const int dy = ky - 1, dx = kx - 1;
          const double wv = w_base[ky * 3 + kx];
          double wsum = 0.0;
          int x_lo = 0, x_hi = ow;
          while (x_lo < ow && x_lo * stride + dx < 0) ++x_lo;
          while (x_hi > x_lo && (x_hi - 1) * stride + dx >= w) --x_hi;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride + dy;
            if (iy < 0 || iy >= h) continue;
            const double* in_row = in_c + static_cast<std::size_t>(iy) * w + dx;
            const double* g_row = g_out + static_cast<std::size_t>(oy) * ow;
            if (g_in_c) {
              double* gi_row = g_in_c + static_cast<std::size_t>(iy) * w + dx;
              for (int ox = x_lo; ox < x_hi; ++ox) {
                const std::size_t ix = static_cast<std::size_t>(ox) * stride;
                wsum += g_row[ox] * in_row[ix];
                gi_row[ix] += wv * g_row[ox];
              }
            } else {
              for (int ox = x_lo; ox < x_hi; ++ox)
                wsum += g_row[ox] * in_row[static_cast<std::size_t>(ox) * stride];
            }
          }
          gw_base[ky * 3 + kx] += wsum;
        }
      }
    }
  }
}

void relu_inplace(std::vector<double>& v) {
  for (double& x : v)
    if (x < 0.0) x = 0.0;
}

// Sampling weights for x2 bilinear interpolation (half-pixel centers):
// output row 2m draws from input rows m-1, m with weights 0.25/0.75; output
// row 2m+1 from rows m, m+1 with weights 0.75/0.25; indices clamp at edges.
struct UpsampleAxis {
  std::vector<int> i0, i1;
  std::vector<double> t;  // weight of i1
};

UpsampleAxis upsample_axis(int in_size) {
  UpsampleAxis axis;
  const int out_size = in_size * 2;
  axis.i0.resize(out_size);
  axis.i1.resize(out_size);
  axis.t.resize(out_size);
  for (int o = 0; o < out_size; ++o) {
    const double src = (o + 0.5) / 2.0 - 0.5;
    const double f = std::floor(src);
    const int i0 = static_cast<int>(f);
    axis.t[o] = src - f;
    axis.i0[o] = std::clamp(i0, 0, in_size - 1);
    axis.i1[o] = std::clamp(i0 + 1, 0, in_size - 1);
  }
  return axis;
}

void bilinear_up2(const double* in, int ch, int h, int w, double* out) {
  const UpsampleAxis ya = upsample_axis(h);
  const UpsampleAxis xa = upsample_axis(w);
  const int oh = h * 2, ow = w * 2;
  const std::size_t in_plane = static_cast<std::size_t>(h) * w;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
  for (int c = 0; c < ch; ++c) {
    const double* in_c = in + c * in_plane;
    double* out_c = out + c * out_plane;
    for (int oy = 0; oy < oh; ++oy) {
      const double ty = ya.t[oy];
      const double* r0 = in_c + static_cast<std::size_t>(ya.i0[oy]) * w;
      const double* r1 = in_c + static_cast<std::size_t>(ya.i1[oy]) * w;
      double* out_row = out_c + static_cast<std::size_t>(oy) * ow;
      for (int ox = 0; ox < ow; ++ox) {
        const double tx = xa.t[ox];
        const int x0 = xa.i0[ox], x1 = xa.i1[ox];
        out_row[ox] = (1.0 - ty) * ((1.0 - tx) * r0[x0] + tx * r0[x1]) +
                      ty * ((1.0 - tx) * r1[x0] + tx * r1[x1]);
      }
    }
  }
}

void bilinear_up2_backward(const double* grad_out, int ch, int h, int w,
                           double* grad_in) {
  const UpsampleAxis ya = upsample_axis(h);
  const UpsampleAxis xa = upsample_axis(w);
  const int oh = h * 2, ow = w * 2;
  const std::size_t in_plane = static_cast<std::size_t>(h) * w;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
  for (int c = 0; c < ch; ++c) {
    const double* g_out = grad_out + c * out_plane;
    double* g_in = grad_in + c * in_plane;
    for (int oy = 0; oy < oh; ++oy) {
      const double ty = ya.t[oy];
      double* r0 = g_in + static_cast<std::size_t>(ya.i0[oy]) * w;
      double* r1 = g_in + static_cast<std::size_t>(ya.i1[oy]) * w;
      const double* g_row = g_out + static_cast<std::size_t>(oy) * ow;
      for (int ox = 0; ox < ow; ++ox) {
        const double tx = xa.t[ox];
        const double g = g_row[ox];
        const int x0 = xa.i0[ox], x1 = xa.i1[ox];
        r0[x0] += (1.0 - ty) * (1.0 - tx) * g;
        r0[x1] += (1.0 - ty) * tx * g;
        r1[x0] += ty * (1.0 - tx) * g;
        r1[x1] += ty * tx * g;
      }
    }
  }
}

void put_u32_le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

bool get_u32_le(std::istream& in, std::uint32_t& v) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

std::size_t SegNetParams::parameter_count() const {
  std::size_t total = 0;
  for (auto size : tensor_sizes(classes)) total += size;
  return total;
}

float& SegNetParams::flat(std::size_t index) {
  for (auto member : tensor_members()) {
    auto& t = this->*member;
    if (index < t.size()) return t[index];
    index -= t.size();
  }
  throw std::out_of_range("SegNetParams::flat");
}

float SegNetParams::flat(std::size_t index) const {
  return const_cast<SegNetParams*>(this)->flat(index);
}

ParamGrads ParamGrads::zeros_like(const SegNetParams& params) {
  ParamGrads g;
  const auto sizes = tensor_sizes(params.classes);
  auto members = grad_members();
  for (std::size_t i = 0; i < members.size(); ++i) (g.*members[i]).assign(sizes[i], 0.0);
  return g;
}

double& ParamGrads::flat(std::size_t index) {
  for (auto member : grad_members()) {
    auto& t = this->*member;
    if (index < t.size()) return t[index];
    index -= t.size();
  }
  throw std::out_of_range("ParamGrads::flat");
}

double ParamGrads::flat(std::size_t index) const {
  return const_cast<ParamGrads*>(this)->flat(index);
}

std::size_t ParamGrads::count() const {
  std::size_t total = 0;
  for (auto member : grad_members()) total += (this->*member).size();
  return total;
}

SegNetParams init_params(std::uint64_t seed, int classes) {
  if (classes < 2) throw std::invalid_argument("init_params: classes must be >= 2");
  SegNetParams p;
  p.classes = classes;
  const auto sizes = tensor_sizes(classes);
  auto members = tensor_members();
  for (std::size_t i = 0; i < members.size(); ++i) (p.*members[i]).assign(sizes[i], 0.0f);

  Rng rng(derive_seed(seed, "segnet-init"));
  auto he_uniform = [&](std::vector<float>& w, int fan_in) {
    const double limit = std::sqrt(6.0 / fan_in);
    for (float& v : w) v = static_cast<float>(rng.uniform(-limit, limit));
  };
  he_uniform(p.conv1_w, 3 * 9);
  he_uniform(p.conv2_w, SegNetParams::kC1 * 9);
  he_uniform(p.conv3_w, SegNetParams::kC2 * 9);
  he_uniform(p.head_w, SegNetParams::kC3);
  return p;
}

Logits forward(const SegNetParams& params, const RasterImage& image, ForwardCache* cache) {
  const int h = image.height, w = image.width;
  if (h < 2 || w < 2 || h % 2 != 0 || w % 2 != 0)
    throw std::invalid_argument("forward: image dimensions must be even and >= 2");
  if (image.data.size() != image.pixel_count() * 3)
    throw std::invalid_argument("forward: image data/shape mismatch");

  const int h2 = h / 2, w2 = w / 2;
  ForwardCache local;
  ForwardCache& cc = cache ? *cache : local;
  cc.height = h;
  cc.width = w;

  // HWC image -> CHW planes, standardized with fixed nominal statistics
  // (mean 0.35, std 0.15 across typical scenes at this scale)
  cc.input.assign(static_cast<std::size_t>(3) * h * w, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        cc.input[(static_cast<std::size_t>(c) * h + y) * w + x] =
            (image.at(y, x, c) - 0.35) / 0.15;

  cc.act1.assign(static_cast<std::size_t>(SegNetParams::kC1) * h * w, 0.0);
  conv3x3_forward(cc.input.data(), 3, h, w, params.conv1_w.data(), params.conv1_b.data(),
                  SegNetParams::kC1, 1, cc.act1.data());
  relu_inplace(cc.act1);

  cc.act2.assign(static_cast<std::size_t>(SegNetParams::kC2) * h2 * w2, 0.0);
  conv3x3_forward(cc.act1.data(), SegNetParams::kC1, h, w, params.conv2_w.data(),
                  params.conv2_b.data(), SegNetParams::kC2, 2, cc.act2.data());
  relu_inplace(cc.act2);

  cc.act3.assign(static_cast<std::size_t>(SegNetParams::kC3) * h2 * w2, 0.0);
  conv3x3_forward(cc.act2.data(), SegNetParams::kC2, h2, w2, params.conv3_w.data(),
                  params.conv3_b.data(), SegNetParams::kC3, 1, cc.act3.data());
  relu_inplace(cc.act3);

  cc.upsampled.assign(static_cast<std::size_t>(SegNetParams::kC3) * h * w, 0.0);
  bilinear_up2(cc.act3.data(), SegNetParams::kC3, h2, w2, cc.upsampled.data());

  Logits logits = Logits::zeros(h, w, params.classes);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t i = 0; i < plane; ++i) {
    double* out = logits.data.data() + i * params.classes;
    for (int c = 0; c < params.classes; ++c) {
      double acc = params.head_b[c];
      const float* wrow = params.head_w.data() + static_cast<std::size_t>(c) * SegNetParams::kC3;
      for (int ci = 0; ci < SegNetParams::kC3; ++ci) acc += wrow[ci] * cc.upsampled[ci * plane + i];
      out[c] = acc;
    }
  }
  return logits;
}

void backward(const SegNetParams& params, const ForwardCache& cache,
              const Logits& logit_grad, ParamGrads& accum) {
  const int h = cache.height, w = cache.width;
  const int h2 = h / 2, w2 = w / 2;
  if (logit_grad.height != h || logit_grad.width != w ||
      logit_grad.classes != params.classes)
    throw std::invalid_argument("backward: logit grad shape mismatch");

  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t plane2 = static_cast<std::size_t>(h2) * w2;

  // head (1x1 conv): weight/bias grads plus the gradient into the upsampled map
  std::vector<double> g_up(static_cast<std::size_t>(SegNetParams::kC3) * plane, 0.0);
  for (std::size_t i = 0; i < plane; ++i) {
    const double* g = logit_grad.data.data() + i * params.classes;
    for (int c = 0; c < params.classes; ++c) {
      const double gv = g[c];
      if (gv == 0.0) continue;
      accum.head_b[c] += gv;
      const float* wrow = params.head_w.data() + static_cast<std::size_t>(c) * SegNetParams::kC3;
      double* gwrow = accum.head_w.data() + static_cast<std::size_t>(c) * SegNetParams::kC3;
      for (int ci = 0; ci < SegNetParams::kC3; ++ci) {
        gwrow[ci] += gv * cache.upsampled[ci * plane + i];
        g_up[ci * plane + i] += gv * wrow[ci];
      }
    }
  }

  std::vector<double> g_act3(static_cast<std::size_t>(SegNetParams::kC3) * plane2, 0.0);
  bilinear_up2_backward(g_up.data(), SegNetParams::kC3, h2, w2, g_act3.data());
  for (std::size_t i = 0; i < g_act3.size(); ++i)
    if (cache.act3[i] <= 0.0) g_act3[i] = 0.0;

  std::vector<double> g_act2(static_cast<std::size_t>(SegNetParams::kC2) * plane2, 0.0);
  conv3x3_backward(cache.act2.data(), SegNetParams::kC2, h2, w2, params.conv3_w.data(),
                   SegNetParams::kC3, 1, g_act3.data(), accum.conv3_w.data(),
                   accum.conv3_b.data(), g_act2.data());
  for (std::size_t i = 0; i < g_act2.size(); ++i)
    if (cache.act2[i] <= 0.0) g_act2[i] = 0.0;

  std::vector<double> g_act1(static_cast<std::size_t>(SegNetParams::kC1) * plane, 0.0);
  conv3x3_backward(cache.act1.data(), SegNetParams::kC1, h, w, params.conv2_w.data(),
                   SegNetParams::kC2, 2, g_act2.data(), accum.conv2_w.data(),
                   accum.conv2_b.data(), g_act1.data());
  for (std::size_t i = 0; i < g_act1.size(); ++i)
    if (cache.act1[i] <= 0.0) g_act1[i] = 0.0;

  conv3x3_backward(cache.input.data(), 3, h, w, params.conv1_w.data(), SegNetParams::kC1,
                   1, g_act1.data(), accum.conv1_w.data(), accum.conv1_b.data(), nullptr);
}

void sgd_step(SegNetParams& params, const ParamGrads& grads, OptimizerState& state) {
  const std::size_t n = params.parameter_count();
  if (grads.count() != n) throw std::invalid_argument("sgd_step: gradient shape mismatch");
  if (state.velocity.count() != n) state.velocity = ParamGrads::zeros_like(params);

  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(grads.flat(i)))
      throw std::runtime_error("sgd_step: non-finite gradient at parameter " +
                               std::to_string(i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double p = params.flat(i);
    double& v = state.velocity.flat(i);
    v = state.momentum * v + (grads.flat(i) + state.weight_decay * p);
    params.flat(i) = static_cast<float>(p - state.lr * v);
  }
}

void save_checkpoint(const SegNetParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out.write("AACL", 4);
  put_u32_le(out, kCheckpointVersion);
  put_u32_le(out, static_cast<std::uint32_t>(params.classes));
  for (auto member : tensor_members()) {
    const auto& t = params.*member;
    for (float v : t) put_u32_le(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

SegNetParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "AACL", 4) != 0)
    throw std::runtime_error(path + ": bad checkpoint magic");
  std::uint32_t version = 0, classes = 0;
  if (!get_u32_le(in, version) || version != kCheckpointVersion)
    throw std::runtime_error(path + ": unsupported checkpoint version");
  if (!get_u32_le(in, classes) || classes < 2 || classes > 255)
    throw std::runtime_error(path + ": invalid class count");

  SegNetParams p;
  p.classes = static_cast<int>(classes);
  const auto sizes = tensor_sizes(p.classes);
  auto members = tensor_members();
  for (std::size_t i = 0; i < members.size(); ++i) {
    auto& t = p.*members[i];
    t.resize(sizes[i]);
    for (float& v : t) {
      std::uint32_t bits = 0;
      if (!get_u32_le(in, bits)) throw std::runtime_error(path + ": truncated checkpoint");
      v = std::bit_cast<float>(bits);
    }
  }
  char extra;
  in.read(&extra, 1);
  if (in.gcount() == 1)
    throw std::runtime_error(path + ": trailing bytes after tensors");
  return p;
}

}  // namespace aacl
