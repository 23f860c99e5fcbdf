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

#include "mswin/metrics.hpp"

#include <numeric>
#include <sstream>

#include "mswin/error.hpp"
#include "mswin/ops.hpp"

namespace mswin {

ConfusionMatrix::ConfusionMatrix(std::int64_t classes)
    : classes_(classes), counts_(static_cast<std::size_t>(classes * classes), 0) {
  if (classes < 0) throw ConfigError("confusion matrix: negative class count");
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

void ConfusionMatrix::update(std::span<const std::uint8_t> pred,
                             std::span<const std::uint8_t> gt) {
  if (pred.size() != gt.size()) {
    throw DataError("confusion update: prediction has " + std::to_string(pred.size()) +
                    " pixels, ground truth " + std::to_string(gt.size()));
  }
  // Validate before touching the counts so a bad map leaves the matrix intact.
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == kIgnoreLabel) continue;
    if (gt[i] >= classes_ || pred[i] >= classes_) {
      throw DataError("confusion update: label " +
                      std::to_string(gt[i] >= classes_ ? gt[i] : pred[i]) + " at pixel " +
                      std::to_string(i) + " outside [0, " + std::to_string(classes_) + ")");
    }
  }
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == kIgnoreLabel) continue;
    ++counts_[gt[i] * classes_ + pred[i]];
  }
}

void ConfusionMatrix::update(const LabelMap& pred, const LabelMap& gt) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw DataError("confusion update: prediction " + std::to_string(pred.height) + "x" +
                    std::to_string(pred.width) + " vs ground truth " +
                    std::to_string(gt.height) + "x" + std::to_string(gt.width));
  }
  update(pred.labels, gt.labels);
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw DataError("confusion merge: class counts differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::optional<double> ConfusionMatrix::iou(std::int64_t k) const {
  std::uint64_t row = 0, col = 0;
  for (std::int64_t j = 0; j < classes_; ++j) {
    row += count(k, j);
    col += count(j, k);
  }
  const auto diag = count(k, k);
  const auto uni = row + col - diag;
  if (uni == 0) return std::nullopt;
  return static_cast<double>(diag) / static_cast<double>(uni);
}

double ConfusionMatrix::miou() const {
  double sum = 0;
  int present = 0;
  for (std::int64_t k = 0; k < classes_; ++k) {
    if (auto v = iou(k)) {
      sum += *v;
      ++present;
    }
  }
  if (present == 0) throw DataError("mIoU undefined: no class has a nonzero union");
  return sum / present;
}

double ConfusionMatrix::pixel_accuracy() const {
  const auto all = total();
  if (all == 0) throw DataError("pixel accuracy undefined: no evaluated pixels");
  std::uint64_t diag = 0;
  for (std::int64_t k = 0; k < classes_; ++k) diag += count(k, k);
  return static_cast<double>(diag) / static_cast<double>(all);
}

std::string ConfusionMatrix::to_csv() const {
  std::ostringstream os;
  os << "gt\\pred";
  for (std::int64_t k = 0; k < classes_; ++k) os << ',' << k;
  os << '\n';
  for (std::int64_t g = 0; g < classes_; ++g) {
    os << g;
    for (std::int64_t p = 0; p < classes_; ++p) os << ',' << count(g, p);
    os << '\n';
  }
  return os.str();
}

std::string format_record(const std::vector<std::pair<std::string, std::string>>& fields) {
  std::string out;
  for (const auto& [key, value] : fields) {
    if (!out.empty()) out += ' ';
    out += key + "=" + value;
  }
  return out;
}

std::map<std::string, std::string> parse_record(const std::string& line) {
  std::map<std::string, std::string> out;
  std::istringstream is(line);
  std::string token;
  while (is >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) continue;
    out[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return out;
}

}  // namespace mswin
