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
#include <string>
#include <vector>

#include "mswin/model.hpp"

namespace mswin {

struct OptimizerConfig {
  double lr = 6e-5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t warmup = 100;
  std::int64_t steps = 2000;
  std::int64_t batch = 2;
};

enum class DataSource { kSynthetic, kDirectory };

struct DataConfig {
  DataSource source = DataSource::kSynthetic;
  std::string path;  // directory source
  std::int64_t count = 64;
  std::int64_t height = 64;
  std::int64_t width = 64;
  std::int64_t crop_h = 64;
  std::int64_t crop_w = 64;
  double flip = 0.5;
  std::uint64_t seed = 0;
};

struct EvalConfig {
  std::vector<double> scales{0.75, 1.0, 1.25};
  bool flip = true;
  std::int64_t interval = 100;  // training steps between train-set evaluations
};

struct TrainConfig {
  std::string log;         // metrics log path; empty = stdout only
  std::string checkpoint;  // saved at the end of training when set
  double target_miou = 0;  // stop early once train mIoU reaches it (0 = never)
};

// Flat "section.key = value" text; '#' starts a comment. Unknown keys are
// rejected so a typo cannot silently fall back to a default.
//
//   model.backbone          swin-nano | swin-s | swin-b
//   model.embed_dim, model.depths (a,b,c,d), model.heads (a,b,c,d),
//   model.window, model.patch, model.mlp_ratio   backbone overrides
//   model.decoder           tfpn | mswin-p | mswin-s | mswin-c
//   model.schedule          5:0,5:2,7:0,7:3,12:0,12:6
//   model.d_enc, model.decoder_heads, model.decoder_mlp_ratio,
//   model.fusion_window, model.aux_hidden, model.classes, model.seed
//   optimizer.lr, .weight_decay, .beta1, .beta2, .eps, .warmup, .steps, .batch
//   data.source (synthetic | directory), .path, .count, .height, .width,
//   data.crop (N or HxW), .flip, .seed
//   eval.scales (0.75,1,1.25), eval.flip, eval.interval
//   train.log, train.checkpoint, train.target_miou
struct RunConfig {
  ModelConfig model;
  OptimizerConfig optimizer;
  DataConfig data;
  EvalConfig eval;
  TrainConfig train;

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
  /// Round-trips through parse().
  std::string to_text() const;
  void validate() const;
};

/// "512x512" -> {512, 512}.
std::pair<std::int64_t, std::int64_t> parse_size(const std::string& text);

}  // namespace mswin
