#include "aacl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace aacl {

const std::array<std::string, kSceneClasses>& scene_class_names() {
  static const std::array<std::string, kSceneClasses> names = {
      "background", "field", "water", "building", "road"};
  return names;
}

namespace {

constexpr double kPalette[kSceneClasses][3] = {
    {0.38, 0.33, 0.26},  // background: bare soil
    {0.30, 0.55, 0.22},  // field
    {0.10, 0.28, 0.52},  // water
    {0.62, 0.24, 0.18},  // building
    {0.46, 0.46, 0.48},  // road
};

double snap_u8(double v) { return std::lround(clamp01(v) * 255.0) / 255.0; }

void paint_ellipse(LabelMask& mask, double cy, double cx, double ry, double rx,
                   std::uint8_t cls) {
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - ry)));
  const int y1 = std::min(mask.height - 1, static_cast<int>(std::ceil(cy + ry)));
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - rx)));
  const int x1 = std::min(mask.width - 1, static_cast<int>(std::ceil(cx + rx)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dy = (y - cy) / ry, dx = (x - cx) / rx;
      if (dy * dy + dx * dx <= 1.0) mask.at(y, x) = cls;
    }
}

void paint_rect(LabelMask& mask, int top, int left, int h, int w, std::uint8_t cls) {
  for (int y = top; y < std::min(top + h, mask.height); ++y)
    for (int x = left; x < std::min(left + w, mask.width); ++x) mask.at(y, x) = cls;
}

// Quadratic bezier strip of the given half width, sampled densely enough
// that consecutive stamps overlap.
void paint_strip(LabelMask& mask, double p0y, double p0x, double p1y, double p1x,
                 double p2y, double p2x, double half_width, std::uint8_t cls) {
  const int steps = 4 * (mask.height + mask.width);
  for (int s = 0; s <= steps; ++s) {
    const double t = static_cast<double>(s) / steps;
    const double u = 1.0 - t;
    const double y = u * u * p0y + 2 * u * t * p1y + t * t * p2y;
    const double x = u * u * p0x + 2 * u * t * p1x + t * t * p2x;
    const int y0 = std::max(0, static_cast<int>(std::floor(y - half_width)));
    const int y1 = std::min(mask.height - 1, static_cast<int>(std::ceil(y + half_width)));
    const int x0 = std::max(0, static_cast<int>(std::floor(x - half_width)));
    const int x1 = std::min(mask.width - 1, static_cast<int>(std::ceil(x + half_width)));
    for (int yy = y0; yy <= y1; ++yy)
      for (int xx = x0; xx <= x1; ++xx) {
        const double dy = yy - y, dx = xx - x;
        if (dy * dy + dx * dx <= half_width * half_width) mask.at(yy, xx) = cls;
      }
  }
}

}  // namespace

Scene generate_scene(const SceneSpec& spec, Rng& rng) {
  if (spec.size < 8 || spec.size % 2 != 0)
    throw std::invalid_argument("generate_scene: size must be even and >= 8");
  const int n = spec.size;

  // per-scene palette: jittered copy of the base colors
  double palette[kSceneClasses][3];
  for (int c = 0; c < kSceneClasses; ++c)
    for (int ch = 0; ch < 3; ++ch)
      palette[c][ch] =
          clamp01(kPalette[c][ch] + spec.color_jitter * rng.uniform(-1.0, 1.0));

  Scene scene;
  scene.mask = LabelMask::filled(n, n, 0);

  const int fields = rng.uniform_int(spec.min_field_blobs, spec.max_field_blobs);
  for (int i = 0; i < fields; ++i) {
    const double cy = rng.uniform(0.0, n), cx = rng.uniform(0.0, n);
    const double ry = rng.uniform(n / 8.0, n / 3.0), rx = rng.uniform(n / 8.0, n / 3.0);
    paint_ellipse(scene.mask, cy, cx, ry, rx, 1);
  }
  const int waters = rng.uniform_int(spec.min_water_blobs, spec.max_water_blobs);
  for (int i = 0; i < waters; ++i) {
    const double cy = rng.uniform(0.0, n), cx = rng.uniform(0.0, n);
    const double ry = rng.uniform(n / 10.0, n / 4.0), rx = rng.uniform(n / 10.0, n / 4.0);
    paint_ellipse(scene.mask, cy, cx, ry, rx, 2);
  }
  const int buildings = rng.uniform_int(spec.min_buildings, spec.max_buildings);
  for (int i = 0; i < buildings; ++i) {
    const int bh = rng.uniform_int(n / 10, n / 4);
    const int bw = rng.uniform_int(n / 10, n / 4);
    const int top = rng.uniform_int(0, n - bh);
    const int left = rng.uniform_int(0, n - bw);
    paint_rect(scene.mask, top, left, bh, bw, 3);
  }
  const int roads = rng.uniform_int(spec.min_roads, spec.max_roads);
  for (int i = 0; i < roads; ++i) {
    const double half_width = rng.uniform(1.0, n / 24.0 + 1.0);
    paint_strip(scene.mask, rng.uniform(0.0, n), rng.uniform(0.0, n),
                rng.uniform(0.0, n), rng.uniform(0.0, n), rng.uniform(0.0, n),
                rng.uniform(0.0, n), half_width, 4);
  }

  // Per-class texture signatures, scaled by noise_sigma so that a zero
  // noise level paints pure palette colors. The patterns modulate luminance
  // (same offset on all channels), so class identity survives photometric
  // perturbation the way real surface texture does: fields carry row
  // stripes, buildings a fine checkerboard, water stays calm.
  const double kNoiseScale[kSceneClasses] = {1.0, 0.8, 0.25, 0.5, 0.5};
  scene.image = RasterImage::filled(n, n, 0.0);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const int cls = scene.mask.at(y, x);
      double pattern = 0.0;
      if (cls == 1) pattern = (y % 2 == 0 ? 1.6 : -1.6) * spec.noise_sigma;
      if (cls == 3) pattern = ((x + y) % 2 == 0 ? 1.6 : -1.6) * spec.noise_sigma;
      for (int c = 0; c < 3; ++c) {
        const double noise =
            spec.noise_sigma > 0.0 ? spec.noise_sigma * kNoiseScale[cls] * rng.gaussian()
                                   : 0.0;
        scene.image.at(y, x, c) = snap_u8(palette[cls][c] + pattern + noise);
      }
    }
  return scene;
}

SplitPlan make_split(int total, double labeled_fraction, Rng& rng) {
  if (labeled_fraction <= 0.0 || labeled_fraction >= 1.0)
    throw std::invalid_argument("make_split: labeled_fraction must be in (0, 1)");
  SplitPlan plan;
  plan.labeled_count = static_cast<int>(std::llround(total * labeled_fraction));
  plan.labeled_count = std::clamp(plan.labeled_count, 1, total - 1);
  plan.unlabeled_count = total - plan.labeled_count;

  std::vector<int> order(total);
  for (int i = 0; i < total; ++i) order[i] = i;
  rng.shuffle(order);
  plan.labeled.assign(order.begin(), order.begin() + plan.labeled_count);
  plan.unlabeled.assign(order.begin() + plan.labeled_count, order.end());

  plan.oversample_factor =
      (plan.unlabeled_count + plan.labeled_count - 1) / plan.labeled_count;
  plan.labeled_stream.reserve(static_cast<std::size_t>(plan.oversample_factor) *
                              plan.labeled_count);
  for (int rep = 0; rep < plan.oversample_factor; ++rep)
    plan.labeled_stream.insert(plan.labeled_stream.end(), plan.labeled.begin(),
                               plan.labeled.end());
  return plan;
}

RasterImage hflip(const RasterImage& image) {
  RasterImage out = image;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = image.at(y, image.width - 1 - x, c);
  return out;
}

LabelMask hflip(const LabelMask& mask) {
  LabelMask out = mask;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) out.at(y, x) = mask.at(y, mask.width - 1 - x);
  return out;
}

RasterImage crop(const RasterImage& image, int top, int left, int size) {
  if (top < 0 || left < 0 || top + size > image.height || left + size > image.width)
    throw std::invalid_argument("crop: window out of bounds");
  RasterImage out = RasterImage::filled(size, size, 0.0);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = image.at(top + y, left + x, c);
  return out;
}

LabelMask crop(const LabelMask& mask, int top, int left, int size) {
  if (top < 0 || left < 0 || top + size > mask.height || left + size > mask.width)
    throw std::invalid_argument("crop: window out of bounds");
  LabelMask out = LabelMask::filled(size, size, 0);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) out.at(y, x) = mask.at(top + y, left + x);
  return out;
}

WeakAugPlan sample_weak_aug(int height, int width, int crop_size, Rng& rng) {
  if (crop_size > height || crop_size > width)
    throw std::invalid_argument("sample_weak_aug: image smaller than crop size");
  WeakAugPlan plan;
  plan.top = static_cast<int>(rng.uniform_index(height - crop_size + 1));
  plan.left = static_cast<int>(rng.uniform_index(width - crop_size + 1));
  plan.flip = rng.bernoulli(0.5);
  return plan;
}

RasterImage apply_weak_aug(const RasterImage& image, const WeakAugPlan& plan,
                           int crop_size) {
  RasterImage out = crop(image, plan.top, plan.left, crop_size);
  if (plan.flip) out = hflip(out);
  return out;
}

LabelMask apply_weak_aug(const LabelMask& mask, const WeakAugPlan& plan, int crop_size) {
  LabelMask out = crop(mask, plan.top, plan.left, crop_size);
  if (plan.flip) out = hflip(out);
  return out;
}

namespace {

std::string id_name(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", id);
  return buf;
}

}  // namespace

void write_dataset(const std::string& dir, const SceneSpec& spec, int train_count,
                   int test_count, std::uint64_t seed) {
  if (train_count < 2 || test_count < 1)
    throw std::invalid_argument("write_dataset: need at least 2 train and 1 test image");
  fs::create_directories(fs::path(dir) / "images");
  fs::create_directories(fs::path(dir) / "masks");

  std::ofstream split(fs::path(dir) / "split.txt", std::ios::trunc);
  if (!split) throw std::runtime_error(dir + ": cannot write split.txt");

  const int total = train_count + test_count;
  for (int id = 0; id < total; ++id) {
    Rng rng(derive_seed(seed, "scene", static_cast<std::uint64_t>(id)));
    const Scene scene = generate_scene(spec, rng);
    write_ppm(scene.image, (fs::path(dir) / "images" / (id_name(id) + ".ppm")).string());
    write_pgm(scene.mask, (fs::path(dir) / "masks" / (id_name(id) + ".pgm")).string());
    split << id_name(id) << ' ' << (id < train_count ? "train" : "test") << '\n';
  }
}

Dataset load_dataset(const std::string& dir, int classes) {
  std::ifstream split(fs::path(dir) / "split.txt");
  if (!split) throw std::runtime_error(dir + ": missing split.txt");

  Dataset ds;
  ds.classes = classes;
  std::string id, role;
  while (split >> id >> role) {
    const int index = static_cast<int>(ds.images.size());
    ds.images.push_back(read_ppm((fs::path(dir) / "images" / (id + ".ppm")).string()));
    ds.masks.push_back(
        read_pgm((fs::path(dir) / "masks" / (id + ".pgm")).string(), classes));
    if (!ds.images.back().same_shape(ds.images.front()))
      throw std::runtime_error(dir + ": inconsistent image sizes");
    if (role == "train") {
      ds.train_ids.push_back(index);
    } else if (role == "test") {
      ds.test_ids.push_back(index);
    } else {
      throw std::runtime_error(dir + ": unknown role '" + role + "' in split.txt");
    }
  }
  if (ds.train_ids.empty()) throw std::runtime_error(dir + ": no training images");
  return ds;
}

BatchStream::BatchStream(const Dataset& dataset, const SplitPlan& split, int crop_size,
                         std::uint64_t seed)
    : dataset_(dataset), split_(split), crop_size_(crop_size), seed_(seed) {
  steps_per_epoch_ = (split.unlabeled_count + TrainBatch::kUnlabeledPerBatch - 1) /
                     TrainBatch::kUnlabeledPerBatch;
  start_epoch(0);
}

void BatchStream::start_epoch(int epoch) {
  epoch_ = epoch;
  step_in_epoch_ = 0;
  labeled_order_ = split_.labeled_stream;
  unlabeled_order_ = split_.unlabeled;
  Rng shuffle_rng(derive_seed(seed_, "epoch-shuffle", static_cast<std::uint64_t>(epoch)));
  shuffle_rng.shuffle(labeled_order_);
  shuffle_rng.shuffle(unlabeled_order_);
  labeled_cursor_ = 0;
  unlabeled_cursor_ = 0;
}

TrainBatch BatchStream::next() {
  TrainBatch batch;
  Rng aug_rng(derive_seed(seed_, "weak-aug",
                          (static_cast<std::uint64_t>(epoch_) << 20) +
                              static_cast<std::uint64_t>(step_in_epoch_)));

  auto next_labeled = [&]() -> int {
    if (labeled_cursor_ >= labeled_order_.size()) labeled_cursor_ = 0;
    return labeled_order_[labeled_cursor_++];
  };
  auto next_unlabeled = [&]() -> int {
    if (unlabeled_cursor_ >= unlabeled_order_.size()) unlabeled_cursor_ = 0;
    return unlabeled_order_[unlabeled_cursor_++];
  };

  for (int i = 0; i < TrainBatch::kLabeledPerBatch; ++i) {
    const int id = next_labeled();
    const auto& img = dataset_.images[id];
    const WeakAugPlan plan = sample_weak_aug(img.height, img.width, crop_size_, aug_rng);
    batch.labeled_images.push_back(apply_weak_aug(img, plan, crop_size_));
    batch.labeled_masks.push_back(apply_weak_aug(dataset_.masks[id], plan, crop_size_));
  }
  for (int i = 0; i < TrainBatch::kUnlabeledPerBatch; ++i) {
    const int id = next_unlabeled();
    const auto& img = dataset_.images[id];
    const WeakAugPlan plan = sample_weak_aug(img.height, img.width, crop_size_, aug_rng);
    batch.unlabeled_images.push_back(apply_weak_aug(img, plan, crop_size_));
  }

  ++step_in_epoch_;
  if (step_in_epoch_ >= steps_per_epoch_) start_epoch(epoch_ + 1);
  return batch;
}

}  // namespace aacl
