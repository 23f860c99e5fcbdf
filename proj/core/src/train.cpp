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

#include "mswin/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "mswin/error.hpp"
#include "mswin/inference.hpp"
#include "mswin/ops.hpp"
#include "mswin/optim.hpp"

namespace mswin {
namespace {

std::string fmt_double(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

class MetricsLog {
 public:
  MetricsLog(const RunConfig& config, std::ostream* echo) : echo_(echo) {
    if (!config.train.log.empty()) {
      file_.open(config.train.log);
      if (!file_) throw ConfigError("cannot open metrics log " + config.train.log);
    }
  }

  void write(std::string line) {
    if (echo_ != nullptr) *echo_ << line << '\n' << std::flush;
    if (file_.is_open()) file_ << line << '\n' << std::flush;
    lines_.push_back(std::move(line));
  }

  std::vector<std::string> take() { return std::move(lines_); }

 private:
  std::ostream* echo_;
  std::ofstream file_;
  std::vector<std::string> lines_;
};

// Values of every tensor in a parameter list, for restoring a good state.
std::vector<std::vector<float>> snapshot(const ParamList<float>& params) {
  std::vector<std::vector<float>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
  return out;
}

void restore(ParamList<float>& params, const std::vector<std::vector<float>>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::copy(values[i].begin(), values[i].end(), params[i].tensor.values().begin());
  }
}

}  // namespace

std::vector<Sample> load_dataset(const RunConfig& config) {
  const auto& d = config.data;
  if (d.source == DataSource::kDirectory) return load_directory(d.path);
  return gen_synthetic(d.seed, d.count, d.height, d.width, config.model.classes);
}

void recompute_batch_norm_stats(SegmentationModel<float>& model, std::span<const Sample> samples,
                                std::int64_t batch) {
  if (samples.empty() || batch <= 0) return;
  const auto stats = model.batch_norm_stats();
  std::vector<double> momentum;
  for (auto* s : stats) momentum.push_back(s->momentum);
  // With momentum 1/(k+1) on the k-th chunk the estimate is the plain mean of
  // the chunk statistics.
  std::int64_t k = 0;
  for (std::size_t i = 0; i < samples.size(); i += static_cast<std::size_t>(batch), ++k) {
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(batch), samples.size() - i);
    for (auto* s : stats) s->momentum = 1.0 / static_cast<double>(k + 1);
    model.forward(make_batch(samples.subspan(i, n)).images, Mode::kTrain);
  }
  for (std::size_t j = 0; j < stats.size(); ++j) stats[j]->momentum = momentum[j];
}

TrainResult train(const RunConfig& config, std::ostream* echo) {
  SegmentationModel<float> model(config.model);
  return train(config, model, echo);
}

TrainResult train(const RunConfig& config, SegmentationModel<float>& model, std::ostream* echo) {
  config.validate();
  const auto dataset = load_dataset(config);
  if (dataset.empty()) throw DataError("training dataset is empty");

  const auto& opt = config.optimizer;
  MetricsLog log(config, echo);
  log.write("# mswin train decoder=" + decoder_name(config.model.decoder.kind) +
            " backbone=" + config.model.backbone.name +
            " schedule=" + config.model.decoder.schedule.to_string() +
            " d_enc=" + std::to_string(config.model.decoder.channels) +
            " classes=" + std::to_string(config.model.classes) +
            " model_seed=" + std::to_string(config.model.seed) +
            " data_seed=" + std::to_string(config.data.seed));
  log.write("# optimizer=adamw lr=" + fmt_double("%g", opt.lr) +
            " weight_decay=" + fmt_double("%g", opt.weight_decay) +
            " beta1=" + fmt_double("%g", opt.beta1) + " beta2=" + fmt_double("%g", opt.beta2) +
            " eps=" + fmt_double("%g", opt.eps) + " warmup=" + std::to_string(opt.warmup) +
            " lr_schedule=constant batch=" + std::to_string(opt.batch) +
            " aux_weight=" + fmt_double("%g", kAuxLossWeight));

  auto params = model.parameters();
  AdamW<float> optimizer(params, AdamWConfig{opt.lr, opt.weight_decay, opt.beta1, opt.beta2,
                                             opt.eps});
  Rng rng(config.data.seed ^ 0x5DEECE66DULL);
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  EvalSettings eval_settings;
  eval_settings.options = {config.data.crop_h, config.data.crop_w};

  auto last_good = snapshot(params);
  auto abort_numeric = [&](const std::string& what, std::int64_t step) {
    restore(params, last_good);
    std::string where;
    if (!config.train.checkpoint.empty()) {
      save_checkpoint(config.train.checkpoint, params);
      where = "; last good parameters saved to " + config.train.checkpoint;
    }
    throw NumericError(what + " at step " + std::to_string(step) + where);
  };

  TrainResult result;
  double loss_sum = 0;
  std::int64_t loss_terms = 0;
  for (std::int64_t step = 1; step <= opt.steps; ++step) {
    std::vector<Sample> batch_samples;
    for (std::int64_t b = 0; b < opt.batch; ++b) {
      batch_samples.push_back(
          augment(dataset[pick(rng)], config.data.crop_h, config.data.crop_w, config.data.flip, rng));
    }
    const auto batch = make_batch(batch_samples);

    double loss_value = 0;
    // Any non-finite value met during the step or the evaluation after it
    // rolls the parameters back to the state before the step.
    try {
      {
        Tape<float> tape;
        TapeGuard guard(tape);
        const auto out = model.forward(batch.images, Mode::kTrain, /*with_aux=*/true);
        const auto main_loss = cross_entropy(out.logits, batch.labels);
        const auto aux_loss = cross_entropy(out.aux_logits, batch.labels);
        const auto loss = add(main_loss, scale(aux_loss, static_cast<float>(kAuxLossWeight)));
        loss_value = loss.item();
        if (!std::isfinite(loss_value)) throw NumericError("non-finite loss");
        last_good = snapshot(params);
        tape.backward(loss);
      }
      optimizer.step(warmup_lr(opt.lr, step, opt.warmup));
      optimizer.zero_grad();
      result.steps = step;
      result.last_loss = loss_value;
      loss_sum += loss_value;
      ++loss_terms;

      if (step % config.eval.interval == 0 || step == opt.steps) {
        recompute_batch_norm_stats(model, dataset, opt.batch);
        const double miou = evaluate(model, dataset, eval_settings).miou();
        result.last_miou = miou;
        log.write("step=" + std::to_string(step) + " loss=" + fmt_double("%.6f", loss_value) +
                  " loss_avg=" + fmt_double("%.6f", loss_sum / loss_terms) +
                  " miou=" + fmt_double("%.6f", miou) +
                  " lr=" + fmt_double("%.6g", warmup_lr(opt.lr, step, opt.warmup)));
        loss_sum = 0;
        loss_terms = 0;
        if (config.train.target_miou > 0 && miou >= config.train.target_miou) {
          result.reached_target = true;
          break;
        }
      }
    } catch (const NumericError& e) {
      abort_numeric(e.what(), step);
    }
  }
  if (!config.train.checkpoint.empty()) save_checkpoint(config.train.checkpoint, params);
  result.log = log.take();
  return result;
}

}  // namespace mswin
