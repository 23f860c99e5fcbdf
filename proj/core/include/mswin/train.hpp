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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mswin/config.hpp"
#include "mswin/data.hpp"
#include "mswin/model.hpp"

namespace mswin {

struct TrainResult {
  std::int64_t steps = 0;       // optimizer steps actually taken
  double last_loss = 0;
  double last_miou = 0;         // train-set mIoU at the last evaluation
  bool reached_target = false;  // stopped early on train.target_miou
  std::vector<std::string> log; // metrics log, header lines included
};

/// Synthetic or directory dataset as selected by the data section.
std::vector<Sample> load_dataset(const RunConfig& config);

/// Replaces every batch-norm running estimate with the average of the batch
/// statistics over `samples`, taken in order in chunks of `batch` images with
/// the current parameters. No gradients are recorded.
void recompute_batch_norm_stats(SegmentationModel<float>& model, std::span<const Sample> samples,
                                std::int64_t batch);

/// Runs the configured schedule. Each step draws a random batch, augments it,
/// and minimises CE(main) + 0.4 CE(aux) with AdamW. Every eval.interval steps
/// (and after the last) the batch-norm estimates are recomputed over the
/// training set and the train-set single-scale mIoU is logged. A
/// non-finite value in a step or in the evaluation after it restores the
/// parameters from before that step, writes them to train.checkpoint (when
/// set) and throws NumericError.
///
/// `model` is trained in place; log lines are echoed to `echo` when given and
/// written to train.log when set.
TrainResult train(const RunConfig& config, SegmentationModel<float>& model,
                  std::ostream* echo = nullptr);

/// Convenience overload that builds the model from config.model.
TrainResult train(const RunConfig& config, std::ostream* echo = nullptr);

}  // namespace mswin
