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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mswin/metrics.hpp"
#include "mswin/params.hpp"
#include "mswin/tensor.hpp"

namespace mswin {

struct Sample {
  std::string name;
  Tensor<float> image;  // [H, W, 3], values in [0, 1]
  LabelMap mask;

  std::int64_t height() const { return mask.height; }
  std::int64_t width() const { return mask.width; }
};

// Procedural scenes. The image is split into a g x g grid of cells,
// g = ceil(sqrt(K - 1)); class k >= 1 lives in cell k - 1 and is drawn there
// with probability kShapePresence as a textured shape of family (k - 1) % 3:
// 0 axis-aligned rectangle, 1 disc, 2 upright triangle. The size is uniform
// over a small discrete set, the position uniform among placements that keep
// the shape inside its cell. Everything else is noisy background (class 0).
inline constexpr double kShapePresence = 0.8;

std::vector<Sample> gen_synthetic(std::uint64_t seed, std::int64_t count, std::int64_t height,
                                  std::int64_t width, std::int64_t classes);

/// Closed-form expected fraction of pixels carrying each class label.
std::vector<double> synthetic_class_fractions(std::int64_t height, std::int64_t width,
                                              std::int64_t classes);

/// Reads images/<name>.png with masks/<name>.png, sorted by name. An empty or
/// missing image directory yields an empty dataset with a warning on stderr.
std::vector<Sample> load_directory(const std::filesystem::path& root);

/// Writes images/<name>.png (RGB8) and masks/<name>.png (gray8).
void write_dataset(const std::filesystem::path& root, std::span<const Sample> samples);

Tensor<float> read_png_rgb(const std::filesystem::path& path);
LabelMap read_png_labels(const std::filesystem::path& path);
void write_png_rgb(const std::filesystem::path& path, const Tensor<float>& image);
void write_png_labels(const std::filesystem::path& path, const LabelMap& labels);

/// Random crop_h x crop_w window (padding with zeros / ignore when the image
/// is smaller), then a horizontal flip with probability flip_p.
Sample augment(const Sample& sample, std::int64_t crop_h, std::int64_t crop_w, double flip_p,
               Rng& rng);

Sample flip_sample(const Sample& sample);

/// Stacks equally sized samples into [N, H, W, 3] images and flat labels.
struct Batch {
  Tensor<float> images;
  std::vector<std::uint8_t> labels;
};
Batch make_batch(std::span<const Sample> samples);

}  // namespace mswin
