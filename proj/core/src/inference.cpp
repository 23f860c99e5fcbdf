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

#include "mswin/inference.hpp"

#include <algorithm>
#include <cmath>

#include "mswin/error.hpp"
#include "mswin/ops.hpp"

namespace mswin {
namespace {

Tensor<float> batched(const Tensor<float>& image) {
  return reshape(image, Shape{1, image.dim(0), image.dim(1), image.dim(2)});
}

// Probabilities of one image whose extents fit in a single forward pass.
Tensor<float> forward_probabilities(SegmentationModel<float>& model, const Tensor<float>& image) {
  const auto H = image.dim(0), W = image.dim(1);
  const auto stride = model.config().stride();
  const auto pad_h = (stride - H % stride) % stride;
  const auto pad_w = (stride - W % stride) % stride;
  auto input = (pad_h > 0 || pad_w > 0) ? pad2d(image, pad_h, pad_w) : image;
  auto logits = model.forward(batched(input), Mode::kEval).logits;
  const auto K = logits.dim(3);
  logits = reshape(logits, Shape{H + pad_h, W + pad_w, K});
  if (pad_h > 0 || pad_w > 0) logits = crop2d(logits, H, W);
  return softmax(logits, -1);
}

std::vector<std::int64_t> tile_origins(std::int64_t extent, std::int64_t crop) {
  std::vector<std::int64_t> out;
  if (extent <= crop) return {0};
  const auto stride = std::max<std::int64_t>(1, crop / 2);
  for (std::int64_t o = 0;; o += stride) {
    if (o + crop >= extent) {
      out.push_back(extent - crop);
      break;
    }
    out.push_back(o);
  }
  return out;
}

Tensor<float> copy_window(const Tensor<float>& image, std::int64_t oy, std::int64_t ox,
                          std::int64_t h, std::int64_t w) {
  const auto W = image.dim(1), C = image.dim(2);
  Tensor<float> out({h, w, C});
  auto src = image.values();
  auto dst = out.values();
  for (std::int64_t y = 0; y < h; ++y) {
    std::copy_n(src.begin() + ((oy + y) * W + ox) * C, w * C, dst.begin() + y * w * C);
  }
  return out;
}

}  // namespace

Tensor<float> predict_probabilities(SegmentationModel<float>& model, const Tensor<float>& image,
                                    const InferenceOptions& options) {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw DimensionError("predict: expected [H, W, 3] image, got " + shape_string(image.shape()));
  }
  const auto H = image.dim(0), W = image.dim(1);
  const bool tile = (options.crop_h > 0 && H > options.crop_h) ||
                    (options.crop_w > 0 && W > options.crop_w);
  if (!tile) return forward_probabilities(model, image);

  const auto ch = options.crop_h > 0 ? std::min(options.crop_h, H) : H;
  const auto cw = options.crop_w > 0 ? std::min(options.crop_w, W) : W;
  const auto K = model.config().classes;
  std::vector<double> sum(static_cast<std::size_t>(H * W * K), 0.0);
  std::vector<int> hits(static_cast<std::size_t>(H * W), 0);
  for (const auto oy : tile_origins(H, ch)) {
    for (const auto ox : tile_origins(W, cw)) {
      const auto probs = forward_probabilities(model, copy_window(image, oy, ox, ch, cw));
      auto pv = probs.values();
      for (std::int64_t y = 0; y < ch; ++y) {
        for (std::int64_t x = 0; x < cw; ++x) {
          const auto p = (oy + y) * W + ox + x;
          ++hits[p];
          for (std::int64_t k = 0; k < K; ++k) sum[p * K + k] += pv[(y * cw + x) * K + k];
        }
      }
    }
  }
  Tensor<float> out({H, W, K});
  auto ov = out.values();
  for (std::int64_t p = 0; p < H * W; ++p) {
    for (std::int64_t k = 0; k < K; ++k) {
      ov[p * K + k] = static_cast<float>(sum[p * K + k] / hits[p]);
    }
  }
  return out;
}

LabelMap argmax_labels(const Tensor<float>& probabilities) {
  if (probabilities.rank() != 3) {
    throw DimensionError("argmax: expected [H, W, K], got " +
                         shape_string(probabilities.shape()));
  }
  const auto H = probabilities.dim(0), W = probabilities.dim(1), K = probabilities.dim(2);
  LabelMap out(H, W);
  auto v = probabilities.values();
  for (std::int64_t p = 0; p < H * W; ++p) {
    const auto* row = v.data() + p * K;
    // max_element returns the first maximum, i.e. the lowest index on ties.
    out.labels[p] = static_cast<std::uint8_t>(std::max_element(row, row + K) - row);
  }
  return out;
}

LabelMap infer_ss(SegmentationModel<float>& model, const Tensor<float>& image,
                  const InferenceOptions& options) {
  // Argmax over probabilities rather than logits: softmax is monotone, and
  // rounding ties then resolve the same way as in the averaged path.
  return argmax_labels(predict_probabilities(model, image, options));
}

LabelMap infer_ms(SegmentationModel<float>& model, const Tensor<float>& image,
                  std::span<const double> scales, bool flip, const InferenceOptions& options) {
  if (scales.empty()) throw ConfigError("infer_ms: scale list is empty");
  const auto H = image.dim(0), W = image.dim(1);
  Tensor<float> sum;
  int terms = 0;
  for (const double s : scales) {
    if (!(s > 0)) throw ConfigError("infer_ms: scales must be positive");
    const auto h = std::max<std::int64_t>(1, std::llround(static_cast<double>(H) * s));
    const auto w = std::max<std::int64_t>(1, std::llround(static_cast<double>(W) * s));
    const auto scaled = (h == H && w == W) ? image : bilinear_resize(image, h, w);
    for (int f = 0; f < (flip ? 2 : 1); ++f) {
      const auto input = f == 1 ? flip_horizontal(scaled) : scaled;
      auto probs = predict_probabilities(model, input, options);
      if (f == 1) probs = flip_horizontal(probs);
      if (h != H || w != W) probs = bilinear_resize(probs, H, W);
      sum = sum.defined() ? add(sum, probs) : probs;
      ++terms;
    }
  }
  const auto mean = terms == 1 ? sum : scale(sum, 1.0f / static_cast<float>(terms));
  return argmax_labels(mean);
}

ConfusionMatrix evaluate(SegmentationModel<float>& model, std::span<const Sample> samples,
                         const EvalSettings& settings) {
  ConfusionMatrix cm(model.config().classes);
  for (const auto& s : samples) {
    const auto pred = settings.multi_scale
                          ? infer_ms(model, s.image, settings.scales, settings.flip,
                                     settings.options)
                          : infer_ss(model, s.image, settings.options);
    cm.update(pred, s.mask);
  }
  return cm;
}

}  // namespace mswin
