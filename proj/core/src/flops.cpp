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

#include "mswin/flops.hpp"

#include <array>
#include <cmath>

#include "mswin/error.hpp"
#include "mswin/window.hpp"

namespace mswin {

double FlopsReport::total() const {
  double t = 0;
  for (const auto& [name, value] : parts) t += value;
  return t;
}

double FlopsReport::part(const std::string& name) const {
  for (const auto& [n, value] : parts) {
    if (n == name) return value;
  }
  return 0;
}

double linear_flops(double rows, std::int64_t d_in, std::int64_t d_out) {
  return 2.0 * rows * static_cast<double>(d_in) * static_cast<double>(d_out);
}

double window_attention_flops(std::int64_t h, std::int64_t w, std::int64_t embed,
                              std::int64_t window, std::int64_t shift, bool query_projection) {
  const auto grid = WindowGrid::make(h, w, window, shift);
  const double windows = static_cast<double>(grid.num_windows());
  const double tokens = static_cast<double>(grid.tokens_per_window());
  const int projections = query_projection ? 4 : 3;
  return projections * linear_flops(windows * tokens, embed, embed) +
         windows * 4.0 * tokens * tokens * static_cast<double>(embed);
}

namespace {

struct Extent {
  std::int64_t h, w;
  double positions() const { return static_cast<double>(h) * static_cast<double>(w); }
};

double block_flops(Extent e, std::int64_t embed, std::int64_t window, std::int64_t shift,
                   std::int64_t hidden) {
  const double pos = e.positions();
  return pos * embed                                             // norm1
         + window_attention_flops(e.h, e.w, embed, window, shift, true)
         + pos * embed                                           // norm2
         + linear_flops(pos, embed, hidden) + pos * hidden        // fc1 + GELU
         + linear_flops(pos, hidden, embed);
}

double resize_flops(Extent out, std::int64_t channels) {
  return 8.0 * out.positions() * static_cast<double>(channels);
}

}  // namespace

FlopsReport flops_estimate(const ModelConfig& config, std::int64_t height, std::int64_t width) {
  config.validate();
  const auto& bb = config.backbone;
  if (height <= 0 || width <= 0 || height % config.stride() != 0 ||
      width % config.stride() != 0) {
    throw ConfigError("flops: input " + std::to_string(height) + "x" + std::to_string(width) +
                      " is not a positive multiple of " + std::to_string(config.stride()));
  }

  // Backbone.
  std::array<Extent, 4> stage_extent;
  double backbone = 0;
  Extent e{height / bb.patch, width / bb.patch};
  backbone += linear_flops(e.positions(), bb.patch * bb.patch * 3, bb.embed_dim);
  backbone += e.positions() * bb.embed_dim;
  for (int s = 0; s < 4; ++s) {
    const auto c = bb.stage_channels(s + 1);
    const auto hidden = static_cast<std::int64_t>(std::llround(bb.mlp_ratio * c));
    for (std::int64_t b = 0; b < bb.depths[s]; ++b) {
      const auto shift = (b % 2 == 1) ? bb.window / 2 : 0;
      backbone += block_flops(e, c, bb.window, shift, hidden);
    }
    stage_extent[s] = e;
    backbone += e.positions() * c;  // output norm
    if (s < 3) {
      e = Extent{(e.h + 1) / 2, (e.w + 1) / 2};
      backbone += e.positions() * 4 * c + linear_flops(e.positions(), 4 * c, 2 * c);
    }
  }

  // Encoder: laterals (linear, batch norm, ReLU), top-down resizes, W-MSA per
  // level and the resizes to the finest level.
  const auto d = config.decoder.channels;
  double encoder = 0;
  for (int level = 0; level < 4; ++level) {
    const int stage = 4 - level;
    const auto x = stage_extent[stage - 1];
    encoder += linear_flops(x.positions(), bb.stage_channels(stage), d) + 2 * x.positions() * d;
    if (level > 0) encoder += resize_flops(x, d);
    encoder += window_attention_flops(x.h, x.w, d, config.fusion_window, 0, true);
    if (level < 3) encoder += resize_flops(stage_extent[0], d);
  }

  // Decoder.
  const Extent y0 = stage_extent[0];
  const double pos = y0.positions();
  const auto& dec = config.decoder;
  const auto hidden = dec.mlp_hidden();
  const auto L = static_cast<std::int64_t>(dec.schedule.size());
  double decoder = 0;
  switch (dec.kind) {
    case DecoderKind::kTFpn:
      break;
    case DecoderKind::kMSwinP:
      decoder += pos * d;
      for (const auto& b : dec.schedule.blocks) {
        decoder += window_attention_flops(y0.h, y0.w, d, b.window, b.shift, true);
      }
      decoder += linear_flops(pos, L * d, d);
      decoder += pos * d + linear_flops(pos, d, hidden) + pos * hidden +
                 linear_flops(pos, hidden, d);
      break;
    case DecoderKind::kMSwinS:
      for (const auto& b : dec.schedule.blocks) {
        decoder += block_flops(y0, d, b.window, b.shift, hidden);
      }
      break;
    case DecoderKind::kMSwinC:
      for (const auto& b : dec.schedule.blocks) {
        decoder += window_attention_flops(y0.h, y0.w, d, b.window, b.shift, false);
      }
      break;
  }

  const double head =
      linear_flops(pos, d, config.classes) + resize_flops(Extent{height, width}, config.classes);

  FlopsReport report;
  report.parts = {{"backbone", backbone}, {"encoder", encoder}, {"decoder", decoder},
                  {"head", head}};
  return report;
}

}  // namespace mswin
