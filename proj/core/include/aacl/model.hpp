#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aacl/raster.hpp"

namespace aacl {

// Small encoder-decoder segmentation net:
//   conv 3->16 3x3 s1 - ReLU - conv 16->32 3x3 s2 - ReLU -
//   conv 32->32 3x3 s1 - ReLU - bilinear x2 - conv 32->C 1x1
// Parameters are stored as f32 (the checkpoint payload type); all arithmetic
// runs in double so gradients can be validated against finite differences.
struct SegNetParams {
  static constexpr int kC1 = 16;
  static constexpr int kC2 = 32;
  static constexpr int kC3 = 32;

  int classes = 0;
  std::vector<float> conv1_w, conv1_b;  // [16*3*3*3], [16]
  std::vector<float> conv2_w, conv2_b;  // [32*16*3*3], [32]
  std::vector<float> conv3_w, conv3_b;  // [32*32*3*3], [32]
  std::vector<float> head_w, head_b;    // [C*32], [C]

  std::size_t parameter_count() const;

  // Flat view over every tensor in checkpoint order; index [0, count).
  float& flat(std::size_t index);
  float flat(std::size_t index) const;
};

// He-style scaled uniform init, biases zero, deterministic per seed.
SegNetParams init_params(std::uint64_t seed, int classes);

// Activations retained for the backward pass. Layout is channel-major
// planes, [c][y][x].
struct ForwardCache {
  int height = 0, width = 0;       // input resolution
  std::vector<double> input;       // [3][H][W]
  std::vector<double> act1;        // [16][H][W]
  std::vector<double> act2;        // [32][H/2][W/2]
  std::vector<double> act3;        // [32][H/2][W/2]
  std::vector<double> upsampled;   // [32][H][W]
};

// Requires even dimensions (stride-2 stage). Pure function of
// (params, image).
Logits forward(const SegNetParams& params, const RasterImage& image,
               ForwardCache* cache = nullptr);

struct ParamGrads {
  std::vector<double> conv1_w, conv1_b;
  std::vector<double> conv2_w, conv2_b;
  std::vector<double> conv3_w, conv3_b;
  std::vector<double> head_w, head_b;

  static ParamGrads zeros_like(const SegNetParams& params);
  double& flat(std::size_t index);
  double flat(std::size_t index) const;
  std::size_t count() const;
};

// Reverse-mode gradients for every parameter, accumulated into `accum`
// (callers zero it or chain batches). `logit_grad` is dLoss/dlogits.
void backward(const SegNetParams& params, const ForwardCache& cache,
              const Logits& logit_grad, ParamGrads& accum);

struct OptimizerState {
  double lr = 1e-3;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  ParamGrads velocity;  // sized lazily on first step
};

// v <- momentum*v + (grad + weight_decay*param); param <- param - lr*v.
// Non-finite gradients abort the step.
void sgd_step(SegNetParams& params, const ParamGrads& grads, OptimizerState& state);

// Versioned binary checkpoint: magic "AACL", format version u32, class count
// u32, then the raw little-endian f32 tensors in declared order. Loading
// rejects bad magic, version, or payload size.
void save_checkpoint(const SegNetParams& params, const std::string& path);
SegNetParams load_checkpoint(const std::string& path);

}  // namespace aacl
