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

// Acceptance gate. `acceptance <criterion> [variant]` runs one criterion and
// prints "criterion N PASS|FAIL detail"; without arguments every criterion
// runs. Exit status is the number of failed criteria.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "mswin/attention.hpp"
#include "mswin/backbone.hpp"
#include "mswin/config.hpp"
#include "mswin/data.hpp"
#include "mswin/decoders.hpp"
#include "mswin/error.hpp"
#include "mswin/flops.hpp"
#include "mswin/grad_check.hpp"
#include "mswin/inference.hpp"
#include "mswin/model.hpp"
#include "mswin/ops.hpp"
#include "mswin/reference.hpp"
#include "mswin/tfpn.hpp"
#include "mswin/train.hpp"
#include "mswin/window.hpp"
#include "test_util.hpp"

namespace mswin {
namespace {

using testing::random_tensor;
using testing::weighted_sum;
namespace fs = std::filesystem;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

bool report(const std::string& id, bool ok, const std::string& detail) {
  std::cout << "criterion " << id << ' ' << (ok ? "PASS" : "FAIL") << ' ' << detail << std::endl;
  return ok;
}

// ---------------------------------------------------------------------------

bool shifted_attention_oracle() {
  Stopwatch clock;
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    for (const std::int64_t m : {2, 3}) {
      for (const std::int64_t hw : {4, 6}) {
        Rng rng(seed);
        const auto params = testing::random_attention(8, 2, m, 1, rng);
        const auto x = random_tensor({hw, hw, 8}, rng);
        worst = std::max(worst, testing::max_abs_diff(sw_msa(x, params),
                                                      reference_window_attention(x, params)));
      }
    }
  }
  const double secs = clock.seconds();
  return report("1", worst < 1e-5 && secs < 10.0,
                "max_abs_diff=" + fmt("%.3e", worst) + " seconds=" + fmt("%.2f", secs));
}

// ---------------------------------------------------------------------------

struct GradCase {
  std::string name;
  bool composite;
  std::function<GradCheckReport(Rng&, const GradCheckOptions&)> run;
};

template <class P>
std::vector<Tensor<double>> randomized(const P& p, Rng& rng, double stddev = 0.3) {
  ParamList<double> params;
  p.collect("p", params);
  testing::randomize(params, rng, stddev);
  return testing::trainable(params);
}

std::vector<GradCase> gradient_cases() {
  std::vector<GradCase> cases;
  auto unary = [&](std::string name, Shape in, std::function<Tensor<double>(const Tensor<double>&)> op,
                   bool away_from_zero = false) {
    cases.push_back({std::move(name), false, [in, op, away_from_zero](Rng& rng, const GradCheckOptions& o) {
                       auto x = random_tensor(in, rng);
                       if (away_from_zero) {
                         for (auto& v : x.values()) {
                           if (std::abs(v) < 0.05) v += 0.2;
                         }
                       }
                       const auto wt = random_tensor(op(x).shape(), rng);
                       return grad_check([&](const Tensor<double>& t) { return weighted_sum(op(t), wt); },
                                         x, o);
                     }});
  };

  cases.push_back({"linear", false, [](Rng& rng, const GradCheckOptions& o) {
                     auto x = random_tensor({3, 4}, rng), w = random_tensor({4, 5}, rng);
                     auto b = random_tensor({5}, rng), wt = random_tensor({3, 5}, rng);
                     std::vector<Tensor<double>> wrt{x, w, b};
                     return grad_check([&] { return weighted_sum(linear(x, w, b), wt); }, wrt, o);
                   }});
  cases.push_back({"add_mul_concat", false, [](Rng& rng, const GradCheckOptions& o) {
                     auto a = random_tensor({2, 3}, rng), b = random_tensor({2, 3}, rng);
                     auto wt = random_tensor({2, 6}, rng);
                     std::vector<Tensor<double>> wrt{a, b};
                     return grad_check([&] {
                       std::vector<Tensor<double>> parts{add(a, b), scale(mul(a, b), -1.5)};
                       return weighted_sum(concat_channels(std::span<const Tensor<double>>(parts)), wt);
                     }, wrt, o);
                   }});
  cases.push_back({"add_n", false, [](Rng& rng, const GradCheckOptions& o) {
                     auto a = random_tensor({2, 3}, rng), b = random_tensor({2, 3}, rng);
                     auto wt = random_tensor({2, 3}, rng);
                     std::vector<Tensor<double>> wrt{a, b};
                     return grad_check([&] {
                       std::vector<Tensor<double>> terms{a, b, a};
                       return weighted_sum(add_n(std::span<const Tensor<double>>(terms)), wt);
                     }, wrt, o);
                   }});
  unary("relu", {4, 5}, [](const Tensor<double>& t) { return relu(t); }, true);
  unary("gelu", {4, 5}, [](const Tensor<double>& t) { return gelu(t); });
  unary("softmax", {4, 5}, [](const Tensor<double>& t) { return softmax(t); });
  unary("softmax_axis0", {4, 5}, [](const Tensor<double>& t) { return softmax(t, 0); });
  unary("reshape", {4, 5}, [](const Tensor<double>& t) { return reshape(t, {5, 4}); });
  unary("bilinear_up", {1, 3, 4, 2}, [](const Tensor<double>& t) { return bilinear_resize(t, 7, 9); });
  unary("bilinear_down", {1, 3, 4, 2}, [](const Tensor<double>& t) { return bilinear_resize(t, 2, 3); });
  unary("pad_zero", {1, 3, 4, 2}, [](const Tensor<double>& t) { return pad2d(t, 2, 1); });
  unary("pad_replicate", {1, 3, 4, 2},
        [](const Tensor<double>& t) { return pad2d(t, 1, 2, PadMode::kReplicate); });
  unary("crop", {1, 3, 4, 2}, [](const Tensor<double>& t) { return crop2d(t, 2, 3); });
  unary("flip", {1, 3, 4, 2}, [](const Tensor<double>& t) { return flip_horizontal(t); });
  unary("cyclic_shift", {1, 3, 4, 2}, [](const Tensor<double>& t) { return cyclic_shift(t, 1, 2); });
  unary("patchify", {1, 4, 4, 3}, [](const Tensor<double>& t) { return patchify(t, 2); });
  unary("merge_neighbors", {1, 4, 4, 3}, [](const Tensor<double>& t) { return merge_neighbors(t); });
  {
    const auto grid = WindowGrid::make(4, 4, 3, 1);
    unary("window_partition", {1, 4, 4, 3},
          [grid](const Tensor<double>& t) { return window_partition(t, grid); });
    unary("window_reverse", {4, 9, 3},
          [grid](const Tensor<double>& t) { return window_reverse(t, grid); });
  }
  cases.push_back({"norms", false, [](Rng& rng, const GradCheckOptions& o) {
                     auto x = random_tensor({3, 6}, rng), g = random_tensor({6}, rng);
                     auto b = random_tensor({6}, rng), w1 = random_tensor({3, 6}, rng);
                     auto w2 = random_tensor({3, 6}, rng);
                     BatchNormStats<double> stats{Tensor<double>({6}), Tensor<double>({6}, 1.0)};
                     std::vector<Tensor<double>> wrt{x, g, b};
                     return grad_check([&] {
                       return add(weighted_sum(layer_norm(x, g, b), w1),
                                  weighted_sum(batch_norm(x, g, b, stats, true), w2));
                     }, wrt, o);
                   }});
  cases.push_back({"window_attention", false, [](Rng& rng, const GradCheckOptions& o) {
                     const auto grid = WindowGrid::make(5, 4, 3, 1);
                     const auto mask = shift_attention_mask(grid);
                     auto q = random_tensor({grid.num_windows(), 9, 4}, rng);
                     auto k = random_tensor(q.shape(), rng), v = random_tensor(q.shape(), rng);
                     auto bias = random_tensor({25, 2}, rng, 0.3), wt = random_tensor(q.shape(), rng);
                     std::vector<Tensor<double>> wrt{q, k, v, bias};
                     return grad_check([&] {
                       return weighted_sum(window_attention(q, k, v, bias, 3, 2, &mask), wt);
                     }, wrt, o);
                   }});
  cases.push_back({"cross_entropy", false, [](Rng& rng, const GradCheckOptions& o) {
                     auto logits = random_tensor({5, 3}, rng);
                     const std::vector<std::uint8_t> labels{0, 2, kIgnoreLabel, 1, 1};
                     return grad_check([&](const Tensor<double>& t) { return cross_entropy(t, labels); },
                                       logits, o);
                   }});

  for (const std::int64_t shift : {0, 1}) {
    const bool cross = false;
    cases.push_back({shift ? "sw_msa" : "w_msa", true, [shift, cross](Rng& rng, const GradCheckOptions& o) {
                       const auto p = testing::random_attention(4, 2, 3, shift, rng, !cross);
                       ParamList<double> params;
                       p.collect("a", params);
                       auto wrt = testing::trainable(params);
                       auto x = random_tensor({5, 5, 4}, rng), wt = random_tensor({5, 5, 4}, rng);
                       wrt.push_back(x);
                       return grad_check([&] { return weighted_sum(windowed_self_attention(x, p), wt); },
                                         wrt, o);
                     }});
  }
  cases.push_back({"cross_sw_msa", true, [](Rng& rng, const GradCheckOptions& o) {
                     const auto p = testing::random_attention(4, 2, 3, 1, rng, false);
                     ParamList<double> params;
                     p.collect("a", params);
                     auto wrt = testing::trainable(params);
                     auto x = random_tensor({5, 5, 4}, rng), wt = random_tensor({5, 5, 4}, rng);
                     wrt.push_back(x);
                     return grad_check([&] { return weighted_sum(cross_sw_msa(x, p), wt); }, wrt, o);
                   }});
  cases.push_back({"patch_embed_merging", true, [](Rng& rng, const GradCheckOptions& o) {
                     auto embed = PatchEmbedParams<double>::init(2, 4, rng);
                     auto merge = PatchMergingParams<double>::init(4, rng);
                     auto wrt = randomized(embed, rng);
                     for (auto& t : randomized(merge, rng)) wrt.push_back(t);
                     auto image = random_tensor({1, 8, 6, 3}, rng), wt = random_tensor({1, 2, 2, 8}, rng);
                     wrt.push_back(image);
                     return grad_check([&] {
                       return weighted_sum(patch_merging(patch_embed(image, embed, 2), merge), wt);
                     }, wrt, o);
                   }});
  for (const std::int64_t shift : {0, 1}) {
    cases.push_back({shift ? "swin_block_shifted" : "swin_block", true,
                     [shift](Rng& rng, const GradCheckOptions& o) {
                       auto p = SwinBlockParams<double>::init(4, 2, 3, shift, 8, rng);
                       auto wrt = randomized(p, rng);
                       auto x = random_tensor({1, 5, 4, 4}, rng), wt = random_tensor({1, 5, 4, 4}, rng);
                       wrt.push_back(x);
                       return grad_check([&] { return weighted_sum(swin_block(x, p), wt); }, wrt, o);
                     }});
  }
  cases.push_back({"tfpn", true, [](Rng& rng, const GradCheckOptions& o) {
                     BackboneConfig cfg = BackboneConfig::swin_nano();
                     cfg.embed_dim = 4;
                     cfg.heads = {1, 1, 2, 2};
                     cfg.depths = {1, 1, 1, 1};
                     auto bb = BackboneParams<double>::init(cfg, rng);
                     auto enc = EncoderParams<double>::init(cfg, 16, 2, 3, rng);
                     ParamList<double> params;
                     bb.collect("backbone", params);
                     enc.collect("encoder", params);
                     testing::randomize(params, rng, 0.3);
                     auto wrt = testing::trainable(params);
                     auto image = random_tensor({2, 32, 32, 3}, rng), wt = random_tensor({2, 8, 8, 16}, rng);
                     wrt.push_back(image);
                     auto sampled = o;
                     sampled.max_entries_per_tensor = 3;
                     return grad_check([&] {
                       return weighted_sum(tfpn_forward(image, bb, enc, Mode::kTrain), wt);
                     }, wrt, sampled);
                   }});
  for (const auto kind : {DecoderKind::kMSwinP, DecoderKind::kMSwinS, DecoderKind::kMSwinC}) {
    cases.push_back({decoder_name(kind), true, [kind](Rng& rng, const GradCheckOptions& o) {
                       DecoderConfig cfg;
                       cfg.kind = kind;
                       cfg.schedule = WindowSchedule::parse(kind == DecoderKind::kMSwinC ? "3:0,3:1,2:1"
                                                                                          : "3:0,3:1,4:2");
                       cfg.channels = 4;
                       cfg.heads = 2;
                       auto p = DecoderParams<double>::init(cfg, rng);
                       auto wrt = randomized(p, rng);
                       auto y0 = random_tensor({1, 5, 4, 4}, rng), wt = random_tensor({1, 5, 4, 4}, rng);
                       wrt.push_back(y0);
                       return grad_check([&] { return weighted_sum(decode(y0, p), wt); }, wrt, o);
                     }});
  }
  cases.push_back({"heads", true, [](Rng& rng, const GradCheckOptions& o) {
                     auto seg = SegHeadParams<double>::init(4, 3, rng);
                     auto aux = AuxHeadParams<double>::init(4, 5, 3, rng);
                     auto wrt = randomized(seg, rng, 0.5);
                     for (auto& t : randomized(aux, rng, 0.5)) wrt.push_back(t);
                     auto z = random_tensor({1, 2, 3, 4}, rng);
                     wrt.push_back(z);
                     std::vector<std::uint8_t> labels(8 * 12);
                     for (auto& l : labels) l = static_cast<std::uint8_t>(rng() % 3);
                     return grad_check([&] {
                       return add(cross_entropy(seg_head(z, seg, 8, 12), labels),
                                  scale(cross_entropy(aux_head(z, aux, 8, 12), labels), kAuxLossWeight));
                     }, wrt, o);
                   }});
  return cases;
}

bool gradient_suite() {
  Stopwatch clock;
  Rng rng(900);
  int failed = 0;
  double worst_op = 0, worst_composite = 0;
  const auto cases = gradient_cases();
  for (const auto& c : cases) {
    GradCheckOptions o;
    o.tolerance = c.composite ? 1e-3 : 1e-4;
    const auto r = c.run(rng, o);
    (c.composite ? worst_composite : worst_op) =
        std::max(c.composite ? worst_composite : worst_op, r.max_relative_error);
    if (!r.passed) {
      ++failed;
      std::cout << "  grad " << c.name << " FAIL " << r.max_relative_error << ' ' << r.worst_entry
                << ' ' << r.diagnostic << '\n';
    }
  }
  const double secs = clock.seconds();
  return report("2", failed == 0 && secs < 300.0,
                "cases=" + std::to_string(cases.size()) + " failed=" + std::to_string(failed) +
                    " worst_op_rel=" + fmt("%.2e", worst_op) +
                    " worst_composite_rel=" + fmt("%.2e", worst_composite) +
                    " seconds=" + fmt("%.1f", secs));
}

// ---------------------------------------------------------------------------

bool round_trip_and_masks() {
  Rng rng(31);
  std::int64_t trips = 0, bad_trips = 0;
  for (const std::int64_t m : {2, 3, 5, 7, 12}) {
    for (std::int64_t h = 1; h <= 16; ++h) {
      for (std::int64_t w = 1; w <= 16; ++w) {
        const auto x = random_tensor({h, w, 2}, rng);
        for (const std::int64_t n : {std::int64_t{0}, m / 2}) {
          const auto grid = WindowGrid::make(h, w, m, n);
          ++trips;
          const auto back = window_reverse(window_partition(x, grid), grid, true, false);
          if (!testing::bit_equal(back, x)) ++bad_trips;
        }
      }
    }
  }

  std::int64_t patterns = 0, bad_masks = 0;
  for (const std::int64_t m : {2, 3, 5, 7, 12}) {
    for (std::int64_t n = 1; n < m; ++n) {
      for (std::int64_t h = 1; h <= 16; ++h) {
        for (std::int64_t w = 1; w <= 16; ++w) {
          const auto mask = shift_attention_mask(WindowGrid::make(h, w, m, n));
          const auto T = mask.tokens;
          for (std::int64_t p = 0; p < mask.num_patterns(); ++p) {
            const float* a = mask.pattern(p);
            ++patterns;
            bool ok = true;
            for (std::int64_t i = 0; i < T && ok; ++i) {
              ok = a[i * T + i] == 0.0f;
              for (std::int64_t j = 0; j < T && ok; ++j) ok = a[i * T + j] == a[j * T + i];
            }
            bad_masks += ok ? 0 : 1;
          }
        }
      }
    }
  }

  double worst_row = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_tensor({16, 31}, rng, 1.0 + 10.0 * trial);
    const auto s = softmax(x);
    for (std::int64_t r = 0; r < 16; ++r) {
      double sum = 0;
      for (std::int64_t c = 0; c < 31; ++c) sum += s.values()[r * 31 + c];
      worst_row = std::max(worst_row, std::abs(sum - 1.0));
    }
  }
  return report("3", bad_trips == 0 && bad_masks == 0 && worst_row <= 1e-6,
                "round_trips=" + std::to_string(trips) + " failed=" + std::to_string(bad_trips) +
                    " mask_patterns=" + std::to_string(patterns) +
                    " asymmetric_or_nonzero_diag=" + std::to_string(bad_masks) +
                    " softmax_row_dev=" + fmt("%.1e", worst_row));
}

// ---------------------------------------------------------------------------

bool shape_laws() {
  Rng rng(41);
  BackboneConfig cfg = BackboneConfig::swin_nano();
  cfg.embed_dim = 4;
  cfg.heads = {1, 1, 2, 2};
  cfg.depths = {1, 1, 1, 1};
  const auto bb = BackboneParams<float>::init(cfg, rng);
  auto enc = EncoderParams<float>::init(cfg, 8, 2, 7, rng);
  ModelConfig mc;
  mc.backbone = cfg;
  mc.decoder.channels = 8;
  mc.decoder.heads = 2;
  mc.classes = 3;
  SegmentationModel<float> model(mc);
  int checked = 0, bad = 0;
  for (std::int64_t h = 32; h <= 160; h += 32) {
    for (std::int64_t w = 32; w <= 160; w += 32) {
      const auto image = random_tensor<float>({1, h, w, 3}, rng);
      const auto stages = backbone_forward(image, bb);
      for (int s = 1; s <= 4; ++s) {
        const auto stride = cfg.stage_stride(s);
        ++checked;
        bad += stages[s - 1].shape() == Shape{1, h / stride, w / stride, cfg.stage_channels(s)} ? 0 : 1;
      }
      ++checked;
      bad += tfpn_forward(image, bb, enc, Mode::kEval).shape() == Shape{1, h / 4, w / 4, 8} ? 0 : 1;
      ++checked;
      bad += model.forward(image, Mode::kEval).logits.shape() == Shape{1, h, w, 3} ? 0 : 1;
    }
  }
  bool rejects = false;
  try {
    model.forward(random_tensor<float>({1, 48, 64, 3}, rng), Mode::kEval);
  } catch (const DimensionError&) {
    rejects = true;
  }

  // Lateral and top-down shapes on the default backbone.
  const auto nano = BackboneParams<float>::init(BackboneConfig::swin_nano(), rng);
  auto nano_enc = EncoderParams<float>::init(nano.config, 32, 4, 7, rng);
  for (auto [h, w] : {std::pair<std::int64_t, std::int64_t>{64, 64}, {96, 64}}) {
    const auto stages = backbone_forward(random_tensor<float>({2, h, w, 3}, rng), nano);
    const auto laterals = top_down(stages, nano_enc, Mode::kTrain);
    for (int level = 0; level < 4; ++level) {
      const auto stride = nano.config.stage_stride(4 - level);
      ++checked;
      bad += laterals[level].shape() == Shape{2, h / stride, w / stride, 32} ? 0 : 1;
      ++checked;
      bad += lateral_project(stages[3 - level], nano_enc.laterals[level], Mode::kEval).shape() ==
                     Shape{2, h / stride, w / stride, 32}
                 ? 0
                 : 1;
    }
    ++checked;
    bad += pyramid_fuse(laterals, nano_enc).shape() == Shape{2, h / 4, w / 4, 32} ? 0 : 1;
  }
  return report("4", bad == 0 && rejects,
                "shape_checks=" + std::to_string(checked) + " mismatches=" + std::to_string(bad) +
                    " rejects_indivisible=" + (rejects ? std::string("yes") : std::string("no")));
}

// ---------------------------------------------------------------------------

bool convolution_free() {
  const std::set<OpCategory> allowed{OpCategory::kLinear,    OpCategory::kNorm,
                                     OpCategory::kActivation, OpCategory::kAttention,
                                     OpCategory::kResize,    OpCategory::kReshape,
                                     OpCategory::kArithmetic, OpCategory::kLoss};
  std::size_t nodes = 0;
  std::set<std::string> kinds;
  std::string offenders;
  for (const auto kind : {DecoderKind::kTFpn, DecoderKind::kMSwinP, DecoderKind::kMSwinS,
                          DecoderKind::kMSwinC}) {
    ModelConfig cfg;
    cfg.decoder.kind = kind;
    cfg.decoder.channels = 32;
    cfg.decoder.heads = 2;
    cfg.aux_hidden = 16;
    SegmentationModel<float> model(cfg);
    Rng rng(51);
    const auto image = random_tensor<float>({1, 64, 64, 3}, rng);
    std::vector<std::uint8_t> labels(64 * 64, 1);
    Tape<float> tape;
    TapeGuard<float> guard(tape);
    const auto out = model.forward(image, Mode::kTrain, true);
    add(cross_entropy(out.logits, labels), cross_entropy(out.aux_logits, labels));
    for (const auto& node : tape.nodes()) {
      ++nodes;
      const std::string name(op_name(node.kind));
      kinds.insert(name);
      if (!allowed.count(op_category(node.kind)) || name.find("conv") != std::string::npos) {
        offenders += " " + name;
      }
    }
  }
  std::string kind_list;
  for (const auto& k : kinds) kind_list += (kind_list.empty() ? "" : ",") + k;
  return report("5", offenders.empty() && nodes > 0,
                "tape_nodes=" + std::to_string(nodes) + " op_kinds=" + kind_list +
                    (offenders.empty() ? "" : " offenders=" + offenders));
}

// ---------------------------------------------------------------------------

bool flops_structure() {
  Stopwatch clock;
  auto total = [](DecoderKind kind) {
    ModelConfig c;
    c.backbone = BackboneConfig::swin_s();
    c.decoder.kind = kind;
    c.decoder.channels = 512;
    c.decoder.heads = 8;
    c.decoder.schedule = WindowSchedule::standard();
    c.classes = 150;
    return flops_estimate(c, 512, 512).total();
  };
  const double t = total(DecoderKind::kTFpn), p = total(DecoderKind::kMSwinP);
  const double s = total(DecoderKind::kMSwinS), c = total(DecoderKind::kMSwinC);
  const double ratio = p / t, expected = 230.0 / 87.0;
  const double secs = clock.seconds();
  const bool ordered = s > p && p > c && c > t;
  return report("6", ordered && std::abs(ratio - expected) <= 0.2 * expected && secs < 1.0,
                "gflops tfpn=" + fmt("%.1f", t / 1e9) + " p=" + fmt("%.1f", p / 1e9) +
                    " s=" + fmt("%.1f", s / 1e9) + " c=" + fmt("%.1f", c / 1e9) +
                    " ordering=" + (ordered ? "S>P>C>T" : "violated") +
                    " p_over_t=" + fmt("%.3f", ratio) + " target=" + fmt("%.3f", expected) +
                    " seconds=" + fmt("%.3f", secs));
}

// ---------------------------------------------------------------------------

std::string toy_config_text(const std::string& variant, std::uint64_t seed,
                            std::int64_t count = 64, std::int64_t steps = 2000,
                            std::int64_t interval = 100) {
  return "model.backbone = swin-nano\n"
         "model.decoder = " + variant + "\n"
         "model.d_enc = 32\n"
         "model.decoder_heads = 2\n"
         "model.aux_hidden = 32\n"
         "model.classes = 4\n"
         "model.seed = " + std::to_string(seed) + "\n"
         "data.count = " + std::to_string(count) + "\n"
         "data.height = 64\n"
         "data.width = 64\n"
         "data.crop = 64\n"
         "data.seed = " + std::to_string(seed) + "\n"
         "optimizer.lr = 2e-3\n"
         "optimizer.steps = " + std::to_string(steps) + "\n"
         "optimizer.batch = 4\n"
         "eval.interval = " + std::to_string(interval) + "\n"
         "train.target_miou = 0.8\n";
}

bool learning(const std::string& variant) {
  Stopwatch clock;
  bool ok = true;
  std::string detail = "variant=" + variant;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto config = RunConfig::parse(toy_config_text(variant, seed));
    try {
      const auto r = train(config);
      ok = ok && r.reached_target && r.steps <= 2000;
      detail += " seed" + std::to_string(seed) + "=" + fmt("%.3f", r.last_miou) + "@" +
                std::to_string(r.steps);
    } catch (const NumericError& e) {
      ok = false;
      detail += " seed" + std::to_string(seed) + "=nan(" + e.what() + ")";
    }
  }
  const double secs = clock.seconds();
  ok = ok && secs <= 1800.0;
  return report("7." + variant, ok, detail + " seconds=" + fmt("%.0f", secs));
}

// ---------------------------------------------------------------------------

bool protocol_equivalences() {
  const auto dir = fs::temp_directory_path() / "mswin_acceptance_8";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto ckpt = (dir / "model.bin").string();
  const auto config = RunConfig::parse(toy_config_text("mswin-p", 4, 8, 30, 10) +
                                       "train.checkpoint = " + ckpt + "\n");

  SegmentationModel<float> model(config.model);
  const auto first = train(config, model);
  const auto second = train(config);
  const bool log_same = first.log == second.log && !first.log.empty();

  SegmentationModel<float> restored(config.model);
  auto params = restored.parameters();
  for (const auto& p : params) {
    for (auto& v : p.tensor.values()) v = 0.0f;
  }
  load_checkpoint(ckpt, params);
  const auto samples = load_dataset(config);
  EvalSettings ss;
  EvalSettings ms;
  ms.multi_scale = true;
  const bool ckpt_same = evaluate(model, samples, ss) == evaluate(restored, samples, ss) &&
                         evaluate(model, samples, ms) == evaluate(restored, samples, ms);

  const std::array<double, 1> one{1.0};
  bool ms_same = true;
  for (const auto& s : samples) {
    ms_same = ms_same && infer_ms(model, s.image, one, false) == infer_ss(model, s.image);
  }
  fs::remove_all(dir);
  return report("8", log_same && ckpt_same && ms_same,
                std::string("infer_ms_identity==infer_ss:") + (ms_same ? "yes" : "no") +
                    " checkpoint_metrics_equal:" + (ckpt_same ? "yes" : "no") +
                    " log_deterministic:" + (log_same ? "yes" : "no") +
                    " log_lines=" + std::to_string(first.log.size()));
}

}  // namespace
}  // namespace mswin

int main(int argc, char** argv) {
  using namespace mswin;
  const std::vector<std::string> variants{"tfpn", "mswin-p", "mswin-s", "mswin-c"};
  const std::string which = argc > 1 ? argv[1] : "all";
  int failures = 0;
  auto run = [&](const std::string& id, const std::function<bool()>& f) {
    if (which != "all" && which != id) return;
    try {
      failures += f() ? 0 : 1;
    } catch (const std::exception& e) {
      report(id, false, std::string("exception: ") + e.what());
      ++failures;
    }
  };
  run("1", shifted_attention_oracle);
  run("2", gradient_suite);
  run("3", round_trip_and_masks);
  run("4", shape_laws);
  run("5", convolution_free);
  run("6", flops_structure);
  for (const auto& v : variants) {
    if (argc > 2 && v != argv[2]) continue;
    run("7", [&] { return learning(v); });
  }
  run("8", protocol_equivalences);
  return failures;
}
