/* Copyright 2026 The MSwin Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "mswin/data.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <iostream>
#include <map>

#include "mswin/error.hpp"
#include "mswin/ops.hpp"

namespace mswin {
namespace {

constexpr std::array<std::array<float, 3>, 9> kPalette{{
    {0.92f, 0.20f, 0.18f},
    {0.20f, 0.85f, 0.25f},
    {0.22f, 0.35f, 0.95f},
    {0.95f, 0.85f, 0.15f},
    {0.85f, 0.25f, 0.90f},
    {0.15f, 0.90f, 0.90f},
    {0.98f, 0.60f, 0.20f},
    {0.60f, 0.95f, 0.60f},
    {0.95f, 0.95f, 0.95f},
}};
constexpr float kShapeNoise = 0.08f;
constexpr float kBackgroundNoise = 0.10f;

struct Layout {
  std::int64_t grid = 1;
  std::int64_t cell_h = 0, cell_w = 0;
  std::vector<std::int64_t> sizes;  // bounding-box side lengths
};

Layout make_layout(std::int64_t height, std::int64_t width, std::int64_t classes) {
  if (classes < 2) throw ConfigError("gen_synthetic: need K >= 2 classes (background + shapes)");
  if (classes > 255) throw ConfigError("gen_synthetic: K must be at most 255");
  Layout l;
  while (l.grid * l.grid < classes - 1) ++l.grid;
  l.cell_h = height / l.grid;
  l.cell_w = width / l.grid;
  if (height <= 0 || width <= 0 || l.cell_h < 8 || l.cell_w < 8) {
    throw ConfigError("gen_synthetic: " + std::to_string(height) + "x" + std::to_string(width) +
                      " leaves cells smaller than 8x8 for " + std::to_string(classes) +
                      " classes");
  }
  const auto side = std::min(l.cell_h, l.cell_w);
  const auto lo = std::max<std::int64_t>(3, side * 2 / 5);
  const auto hi = std::max(lo, side * 4 / 5);
  for (auto s = lo; s <= hi; ++s) l.sizes.push_back(s);
  return l;
}

// Whether pixel (y, x) of an h x w bounding box belongs to the shape.
bool inside(int family, std::int64_t h, std::int64_t w, std::int64_t y, std::int64_t x) {
  const double cy = static_cast<double>(y) + 0.5;
  const double cx = static_cast<double>(x) + 0.5;
  switch (family) {
    case 0:
      return true;
    case 1: {
      const double r = 0.5 * static_cast<double>(std::min(h, w));
      const double dy = cy - 0.5 * static_cast<double>(h);
      const double dx = cx - 0.5 * static_cast<double>(w);
      return dy * dy + dx * dx <= r * r;
    }
    default:
      return std::abs(cx - 0.5 * static_cast<double>(w)) <=
             0.5 * static_cast<double>(w) * cy / static_cast<double>(h);
  }
}

std::int64_t shape_area(int family, std::int64_t h, std::int64_t w) {
  std::int64_t area = 0;
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) area += inside(family, h, w, y, x) ? 1 : 0;
  }
  return area;
}

std::array<float, 3> class_color(std::int64_t k) {
  return kPalette[static_cast<std::size_t>((k - 1) % static_cast<std::int64_t>(kPalette.size()))];
}

}  // namespace

std::vector<Sample> gen_synthetic(std::uint64_t seed, std::int64_t count, std::int64_t height,
                                  std::int64_t width, std::int64_t classes) {
  if (count < 0) throw ConfigError("gen_synthetic: negative count");
  const auto layout = make_layout(height, width, classes);
  Rng rng(seed);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  std::uniform_real_distribution<float> bg_base(0.05f, 0.45f);
  std::uniform_int_distribution<std::size_t> pick_size(0, layout.sizes.size() - 1);

  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    Sample s;
    char name[32];
    std::snprintf(name, sizeof(name), "synth_%06lld", static_cast<long long>(i));
    s.name = name;
    s.mask = LabelMap(height, width, 0);
    const std::array<float, 3> bg{bg_base(rng), bg_base(rng), bg_base(rng)};

    for (std::int64_t k = 1; k < classes; ++k) {
      if (unit(rng) >= static_cast<float>(kShapePresence)) continue;
      const int family = static_cast<int>((k - 1) % 3);
      const auto h = layout.sizes[pick_size(rng)];
      const auto w = family == 1 ? h : layout.sizes[pick_size(rng)];
      const auto cell_y = ((k - 1) / layout.grid) * layout.cell_h;
      const auto cell_x = ((k - 1) % layout.grid) * layout.cell_w;
      const auto oy = cell_y + std::uniform_int_distribution<std::int64_t>(0, layout.cell_h - h)(rng);
      const auto ox = cell_x + std::uniform_int_distribution<std::int64_t>(0, layout.cell_w - w)(rng);
      for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
          if (inside(family, h, w, y, x)) s.mask.at(oy + y, ox + x) = static_cast<std::uint8_t>(k);
        }
      }
    }

    s.image = Tensor<float>({height, width, 3});
    auto px = s.image.values();
    for (std::int64_t p = 0; p < height * width; ++p) {
      const auto label = s.mask.labels[p];
      const auto base = label == 0 ? bg : class_color(label);
      const float amp = label == 0 ? kBackgroundNoise : kShapeNoise;
      for (int c = 0; c < 3; ++c) {
        px[p * 3 + c] = std::clamp(base[c] + amp * (2.0f * unit(rng) - 1.0f), 0.0f, 1.0f);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> synthetic_class_fractions(std::int64_t height, std::int64_t width,
                                              std::int64_t classes) {
  const auto layout = make_layout(height, width, classes);
  const double total = static_cast<double>(height) * static_cast<double>(width);
  std::vector<double> fractions(static_cast<std::size_t>(classes), 0.0);
  double shapes = 0;
  for (std::int64_t k = 1; k < classes; ++k) {
    const int family = static_cast<int>((k - 1) % 3);
    double mean_area = 0;
    if (family == 1) {
      for (const auto h : layout.sizes) mean_area += static_cast<double>(shape_area(family, h, h));
      mean_area /= static_cast<double>(layout.sizes.size());
    } else {
      for (const auto h : layout.sizes) {
        for (const auto w : layout.sizes) {
          mean_area += static_cast<double>(shape_area(family, h, w));
        }
      }
      mean_area /= static_cast<double>(layout.sizes.size() * layout.sizes.size());
    }
    fractions[k] = kShapePresence * mean_area / total;
    shapes += fractions[k];
  }
  fractions[0] = 1.0 - shapes;
  return fractions;
}

// ---------------------------------------------------------------------------
// PNG I/O

Tensor<float> read_png_rgb(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw DataError("cannot decode PNG " + path.string() + ": " + message);
  }
  Tensor<float> out({static_cast<std::int64_t>(image.height),
                     static_cast<std::int64_t>(image.width), 3});
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(buffer[i]) / 255.0f;
  return out;
}

namespace {

struct RawLabels {
  png_uint_32 width = 0, height = 0;
  int color_type = 0;
  png_bytepp rows = nullptr;
};

// libpng reports errors with longjmp, so this function keeps only trivially
// destructible locals between setjmp and the read.
bool read_label_rows(std::FILE* file, png_structp png, png_infop info, RawLabels* out) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, file);
  png_read_png(png, info, PNG_TRANSFORM_PACKING | PNG_TRANSFORM_STRIP_16, nullptr);
  out->width = png_get_image_width(png, info);
  out->height = png_get_image_height(png, info);
  out->color_type = png_get_color_type(png, info);
  out->rows = png_get_rows(png, info);
  return true;
}

}  // namespace

LabelMap read_png_labels(const std::filesystem::path& path) {
  std::FILE* file = std::fopen(path.c_str(), "rb");
  if (file == nullptr) throw DataError("cannot open mask " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(file);
    throw DataError("libpng initialisation failed for " + path.string());
  }
  RawLabels raw;
  const bool ok = read_label_rows(file, png, info, &raw);
  std::fclose(file);
  if (!ok) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("cannot decode mask PNG " + path.string());
  }
  if (raw.color_type != PNG_COLOR_TYPE_GRAY && raw.color_type != PNG_COLOR_TYPE_PALETTE) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("mask " + path.string() + " is not an 8-bit palette or grayscale PNG");
  }
  LabelMap labels(raw.height, raw.width);
  for (png_uint_32 y = 0; y < raw.height; ++y) {
    std::copy(raw.rows[y], raw.rows[y] + raw.width, labels.labels.begin() + y * raw.width);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return labels;
}

void write_png_rgb(const std::filesystem::path& path, const Tensor<float>& image) {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw DimensionError("write_png_rgb: expected [H, W, 3], got " + shape_string(image.shape()));
  }
  std::vector<png_byte> buffer(static_cast<std::size_t>(image.numel()));
  auto v = image.values();
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    buffer[i] = static_cast<png_byte>(std::lround(std::clamp(v[i], 0.0f, 1.0f) * 255.0f));
  }
  png_image out{};
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(image.dim(1));
  out.height = static_cast<png_uint_32>(image.dim(0));
  out.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&out, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw DataError("cannot write PNG " + path.string() + ": " + out.message);
  }
}

void write_png_labels(const std::filesystem::path& path, const LabelMap& labels) {
  png_image out{};
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(labels.width);
  out.height = static_cast<png_uint_32>(labels.height);
  out.format = PNG_FORMAT_GRAY;
  // Linear 8-bit gray: values are stored verbatim.
  if (!png_image_write_to_file(&out, path.c_str(), 0, labels.labels.data(), 0, nullptr)) {
    throw DataError("cannot write PNG " + path.string() + ": " + out.message);
  }
}

std::vector<Sample> load_directory(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  const auto image_dir = root / "images";
  const auto mask_dir = root / "masks";
  std::map<std::string, fs::path> images, masks;
  auto scan = [](const fs::path& dir, std::map<std::string, fs::path>& into) {
    if (!fs::is_directory(dir)) return;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".png") {
        into[entry.path().stem().string()] = entry.path();
      }
    }
  };
  scan(image_dir, images);
  scan(mask_dir, masks);
  for (const auto& [name, path] : images) {
    if (!masks.count(name)) throw DataError("image " + path.string() + " has no matching mask");
  }
  for (const auto& [name, path] : masks) {
    if (!images.count(name)) throw DataError("mask " + path.string() + " has no matching image");
  }
  if (images.empty()) {
    std::cerr << "warning: no image/mask pairs under " << root.string() << '\n';
    return {};
  }
  std::vector<Sample> out;
  for (const auto& [name, path] : images) {
    Sample s;
    s.name = name;
    s.image = read_png_rgb(path);
    s.mask = read_png_labels(masks.at(name));
    if (s.image.dim(0) != s.mask.height || s.image.dim(1) != s.mask.width) {
      throw DataError("size mismatch for " + name + ": image " + shape_string(s.image.shape()) +
                      ", mask " + std::to_string(s.mask.height) + "x" +
                      std::to_string(s.mask.width));
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_dataset(const std::filesystem::path& root, std::span<const Sample> samples) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(root / "images", ec);
  fs::create_directories(root / "masks", ec);
  if (ec) throw DataError("cannot create " + root.string() + ": " + ec.message());
  for (const auto& s : samples) {
    write_png_rgb(root / "images" / (s.name + ".png"), s.image);
    write_png_labels(root / "masks" / (s.name + ".png"), s.mask);
  }
}

// ---------------------------------------------------------------------------

Sample flip_sample(const Sample& sample) {
  Sample out;
  out.name = sample.name;
  out.image = flip_horizontal(sample.image);
  out.mask = LabelMap(sample.mask.height, sample.mask.width);
  for (std::int64_t y = 0; y < sample.mask.height; ++y) {
    for (std::int64_t x = 0; x < sample.mask.width; ++x) {
      out.mask.at(y, x) = sample.mask.at(y, sample.mask.width - 1 - x);
    }
  }
  return out;
}

Sample augment(const Sample& sample, std::int64_t crop_h, std::int64_t crop_w, double flip_p,
               Rng& rng) {
  const auto H = sample.height(), W = sample.width();
  const auto oy = H > crop_h ? std::uniform_int_distribution<std::int64_t>(0, H - crop_h)(rng) : 0;
  const auto ox = W > crop_w ? std::uniform_int_distribution<std::int64_t>(0, W - crop_w)(rng) : 0;
  const bool flip = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < flip_p;

  Sample out;
  out.name = sample.name;
  out.image = Tensor<float>({crop_h, crop_w, 3});
  out.mask = LabelMap(crop_h, crop_w, kIgnoreLabel);
  auto dst = out.image.values();
  auto src = sample.image.values();
  for (std::int64_t y = 0; y < std::min(crop_h, H - oy); ++y) {
    for (std::int64_t x = 0; x < std::min(crop_w, W - ox); ++x) {
      out.mask.at(y, x) = sample.mask.at(oy + y, ox + x);
      for (int c = 0; c < 3; ++c) {
        dst[(y * crop_w + x) * 3 + c] = src[((oy + y) * W + ox + x) * 3 + c];
      }
    }
  }
  return flip ? flip_sample(out) : out;
}

Batch make_batch(std::span<const Sample> samples) {
  if (samples.empty()) throw DataError("make_batch: no samples");
  const auto H = samples.front().height(), W = samples.front().width();
  Batch b;
  b.images = Tensor<float>({static_cast<std::int64_t>(samples.size()), H, W, 3});
  b.labels.reserve(samples.size() * H * W);
  auto dst = b.images.values();
  std::size_t offset = 0;
  for (const auto& s : samples) {
    if (s.height() != H || s.width() != W) throw DataError("make_batch: samples differ in size");
    auto src = s.image.values();
    std::copy(src.begin(), src.end(), dst.begin() + offset);
    offset += src.size();
    b.labels.insert(b.labels.end(), s.mask.labels.begin(), s.mask.labels.end());
  }
  return b;
}

}  // namespace mswin
