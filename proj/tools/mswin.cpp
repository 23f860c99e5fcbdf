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

// Command-line entry point: train, eval, flops, gen-data, selfcheck.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mswin/config.hpp"
#include "mswin/data.hpp"
#include "mswin/error.hpp"
#include "mswin/flops.hpp"
#include "mswin/inference.hpp"
#include "mswin/metrics.hpp"
#include "mswin/model.hpp"
#include "mswin/selfcheck.hpp"
#include "mswin/train.hpp"

namespace {

std::string num(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

int cmd_train(const std::string& config_path) {
  const auto config = mswin::RunConfig::load(config_path);
  const auto result = mswin::train(config, &std::cout);
  std::cout << mswin::format_record({{"steps", std::to_string(result.steps)},
                                     {"final_loss", num(result.last_loss)},
                                     {"final_miou", num(result.last_miou)},
                                     {"reached_target", result.reached_target ? "1" : "0"}})
            << '\n';
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint, bool ms,
             const std::string& cm_csv) {
  const auto config = mswin::RunConfig::load(config_path);
  mswin::SegmentationModel<float> model(config.model);
  auto params = model.parameters();
  mswin::load_checkpoint(checkpoint, params);
  const auto samples = mswin::load_dataset(config);
  if (samples.empty()) throw mswin::DataError("evaluation dataset is empty");

  mswin::EvalSettings settings;
  settings.multi_scale = ms;
  settings.scales = config.eval.scales;
  settings.flip = config.eval.flip;
  settings.options = {config.data.crop_h, config.data.crop_w};
  const auto cm = mswin::evaluate(model, samples, settings);

  std::vector<std::pair<std::string, std::string>> fields{
      {"images", std::to_string(samples.size())},
      {"mode", ms ? "ms" : "ss"},
      {"miou", num(cm.miou())},
      {"pixel_acc", num(cm.pixel_accuracy())}};
  for (std::int64_t k = 0; k < cm.classes(); ++k) {
    const auto iou = cm.iou(k);
    fields.emplace_back("iou_" + std::to_string(k), iou ? num(*iou) : "nan");
  }
  std::cout << mswin::format_record(fields) << '\n';
  if (!cm_csv.empty()) {
    std::ofstream out(cm_csv);
    if (!out) throw mswin::DataError("cannot write " + cm_csv);
    out << cm.to_csv();
  }
  return 0;
}

int cmd_flops(const std::string& config_path, const std::string& size) {
  const auto config = mswin::RunConfig::load(config_path);
  const auto [h, w] = mswin::parse_size(size);
  const auto report = mswin::flops_estimate(config.model, h, w);
  std::vector<std::pair<std::string, std::string>> fields{
      {"decoder", mswin::decoder_name(config.model.decoder.kind)},
      {"size", std::to_string(h) + "x" + std::to_string(w)}};
  for (const auto& [name, value] : report.parts) fields.emplace_back(name, num(value, "%.0f"));
  fields.emplace_back("total", num(report.total(), "%.0f"));
  fields.emplace_back("total_gflops", num(report.total() / 1e9, "%.3f"));
  std::cout << mswin::format_record(fields) << '\n';
  return 0;
}

int cmd_gen_data(std::uint64_t seed, std::int64_t count, const std::string& out,
                 const std::string& size, std::int64_t classes) {
  const auto [h, w] = mswin::parse_size(size);
  const auto samples = mswin::gen_synthetic(seed, count, h, w, classes);
  mswin::write_dataset(out, samples);
  std::cout << mswin::format_record({{"written", std::to_string(samples.size())}, {"out", out}})
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-shifted window transformer segmentation toolkit"};
  app.require_subcommand(1);

  std::string config_path, checkpoint, cm_csv, size = "512x512", out_dir;
  std::string data_size = "64x64";
  bool ms = false;
  std::uint64_t seed = 0;
  std::int64_t count = 16, classes = 4;

  auto* train = app.add_subcommand("train", "Train a model from a config file");
  train->add_option("--config", config_path, "Config file")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the configured data");
  eval->add_option("--config", config_path, "Config file")->required();
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_flag("--ms", ms, "Multi-scale + flip inference (eval.scales, eval.flip)");
  eval->add_option("--cm-csv", cm_csv, "Write the confusion matrix as CSV");

  auto* flops = app.add_subcommand("flops", "Analytic FLOPs of the configured model");
  flops->add_option("--config", config_path, "Config file")->required();
  flops->add_option("--size", size, "Input size HxW")->capture_default_str();

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic dataset as PNG pairs");
  gen->add_option("--seed", seed, "Generator seed")->required();
  gen->add_option("--count", count, "Number of samples")->required();
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--size", data_size, "Image size HxW")->capture_default_str();
  gen->add_option("--classes", classes, "Class count K (background included)")
      ->capture_default_str();

  auto* selfcheck = app.add_subcommand("selfcheck", "Run the oracle and gradient suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(mswin::ExitCode::kConfigError);
  }

  try {
    if (train->parsed()) return cmd_train(config_path);
    if (eval->parsed()) return cmd_eval(config_path, checkpoint, ms, cm_csv);
    if (flops->parsed()) return cmd_flops(config_path, size);
    if (gen->parsed()) return cmd_gen_data(seed, count, out_dir, data_size, classes);
    if (selfcheck->parsed()) {
      return mswin::run_selfcheck(std::cout) == 0
                 ? 0
                 : static_cast<int>(mswin::ExitCode::kNumericFailure);
    }
  } catch (const mswin::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(mswin::ExitCode::kDataError);
  }
  return 0;
}
