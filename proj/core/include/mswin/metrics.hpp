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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mswin {

// Row-major H x W map of class indices; 255 marks ignored pixels.
struct LabelMap {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<std::uint8_t> labels;

  LabelMap() = default;
  LabelMap(std::int64_t h, std::int64_t w, std::uint8_t fill = 0)
      : height(h), width(w), labels(static_cast<std::size_t>(h * w), fill) {}

  std::uint8_t& at(std::int64_t y, std::int64_t x) { return labels[y * width + x]; }
  std::uint8_t at(std::int64_t y, std::int64_t x) const { return labels[y * width + x]; }
  bool operator==(const LabelMap&) const = default;
};

// Rows are ground truth, columns prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::int64_t classes = 0);

  std::int64_t classes() const { return classes_; }
  std::uint64_t count(std::int64_t gt, std::int64_t pred) const {
    return counts_[gt * classes_ + pred];
  }
  std::uint64_t total() const;

  /// Throws DataError on unequal sizes or labels outside [0, K) other than
  /// an ignored ground truth.
  void update(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt);
  void update(const LabelMap& pred, const LabelMap& gt);
  void merge(const ConfusionMatrix& other);

  /// IoU of class k, or nullopt when k is absent from both prediction and truth.
  std::optional<double> iou(std::int64_t k) const;
  /// Mean IoU over classes with a nonzero union; DataError when there are none.
  double miou() const;
  double pixel_accuracy() const;

  std::string to_csv() const;
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::int64_t classes_ = 0;
  std::vector<std::uint64_t> counts_;
};

// "key=value key=value", keys in insertion order.
std::string format_record(const std::vector<std::pair<std::string, std::string>>& fields);
std::map<std::string, std::string> parse_record(const std::string& line);

}  // namespace mswin
