#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "aacl/raster.hpp"
#include "aacl/rng.hpp"

namespace aacl {

// Class palette for the synthetic scenes. Index order is fixed:
// 0 background, 1 field, 2 water, 3 building, 4 road.
inline constexpr int kSceneClasses = 5;
const std::array<std::string, kSceneClasses>& scene_class_names();

// Recipe for one synthetic remote-sensing-like scene. Scenes are layered:
// textured background, then field/water blobs, building rectangles and road
// strips, each painted into both the image and the mask in the same order.
struct SceneSpec {
  int size = 64;              // square images, must stay even for the model
  double noise_sigma = 0.05;  // per-channel Gaussian texture noise
  double color_jitter = 0.12; // per-scene perturbation of the class palette
  int min_field_blobs = 1, max_field_blobs = 3;
  int min_water_blobs = 0, max_water_blobs = 2;
  int min_buildings = 1, max_buildings = 4;
  int min_roads = 1, max_roads = 2;
};

struct Scene {
  RasterImage image;
  LabelMask mask;
};

// Deterministic per rng state. Image values are snapped to the u8 grid so a
// PPM round trip is lossless.
Scene generate_scene(const SceneSpec& spec, Rng& rng);

// Labeled/unlabeled partition with the labeled side oversampled by cycling:
// the oversampled stream length lands in [unlabeled_count,
// unlabeled_count + labeled_count).
struct SplitPlan {
  int labeled_count = 0;
  int unlabeled_count = 0;
  int oversample_factor = 0;
  std::vector<int> labeled;         // disjoint index sets
  std::vector<int> unlabeled;
  std::vector<int> labeled_stream;  // oversample_factor copies of `labeled`
};

SplitPlan make_split(int total, double labeled_fraction, Rng& rng);

// Weak augmentation: random crop to crop_size plus horizontal flip with
// probability 1/2; mask transformed identically.
RasterImage hflip(const RasterImage& image);
LabelMask hflip(const LabelMask& mask);
RasterImage crop(const RasterImage& image, int top, int left, int size);
LabelMask crop(const LabelMask& mask, int top, int left, int size);

struct WeakAugPlan {
  int top = 0;
  int left = 0;
  bool flip = false;
};
WeakAugPlan sample_weak_aug(int height, int width, int crop_size, Rng& rng);
RasterImage apply_weak_aug(const RasterImage& image, const WeakAugPlan& plan, int crop_size);
LabelMask apply_weak_aug(const LabelMask& mask, const WeakAugPlan& plan, int crop_size);

// On-disk dataset: images/<id>.ppm, masks/<id>.pgm and split.txt with one
// "<id> <role>" line per item, role train or test. The trainer consumes only
// this layout, so any dataset converted to PPM/PGM plugs in.
struct Dataset {
  std::vector<RasterImage> images;
  std::vector<LabelMask> masks;
  std::vector<int> train_ids;
  std::vector<int> test_ids;
  int classes = kSceneClasses;
};

void write_dataset(const std::string& dir, const SceneSpec& spec, int train_count,
                   int test_count, std::uint64_t seed);
Dataset load_dataset(const std::string& dir, int classes);

// One training step's inputs: 8 weakly augmented labeled pairs (first four
// the supervised role, last four the paste-in auxiliary role) and 8 weakly
// augmented unlabeled images (first four primary, last four auxiliary).
struct TrainBatch {
  std::vector<RasterImage> labeled_images;
  std::vector<LabelMask> labeled_masks;
  std::vector<RasterImage> unlabeled_images;

  static constexpr int kLabeledPerBatch = 8;
  static constexpr int kUnlabeledPerBatch = 8;
  static constexpr int kUnitsPerBatch = 4;
};

// Deterministic batch source: reshuffles both streams every epoch from seeds
// derived per (seed, epoch), draws weak augmentations per slot.
class BatchStream {
 public:
  BatchStream(const Dataset& dataset, const SplitPlan& split, int crop_size,
              std::uint64_t seed);

  TrainBatch next();
  int steps_per_epoch() const { return steps_per_epoch_; }
  int epoch() const { return epoch_; }

 private:
  void start_epoch(int epoch);

  const Dataset& dataset_;
  const SplitPlan& split_;
  int crop_size_;
  std::uint64_t seed_;
  int epoch_ = -1;
  int step_in_epoch_ = 0;
  int steps_per_epoch_ = 0;
  std::size_t labeled_cursor_ = 0;
  std::size_t unlabeled_cursor_ = 0;
  std::vector<int> labeled_order_;
  std::vector<int> unlabeled_order_;
};

}  // namespace aacl
