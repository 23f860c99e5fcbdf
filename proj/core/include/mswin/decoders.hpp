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
#include <string>
#include <vector>

#include "mswin/attention.hpp"
#include "mswin/backbone.hpp"
#include "mswin/params.hpp"

namespace mswin {

struct WindowSpec {
  std::int64_t window = 0;
  std::int64_t shift = 0;
  bool operator==(const WindowSpec&) const = default;
};

// Ordered (m, n) pairs of the multi-shifted-window decoder.
struct WindowSchedule {
  std::vector<WindowSpec> blocks;

  // (5,0) (5,2) (7,0) (7,3) (12,0) (12,6)
  static WindowSchedule standard();
  // "5:0,5:2,7:0"
  static WindowSchedule parse(const std::string& text);
  std::string to_string() const;

  std::size_t size() const { return blocks.size(); }
  // Non-empty; every n is 0 or floor(m / 2) unless `any_shift`.
  void validate(bool any_shift = false) const;
};

enum class DecoderKind { kTFpn, kMSwinP, kMSwinS, kMSwinC };

DecoderKind parse_decoder_kind(const std::string& name);  // tfpn, mswin-p, mswin-s, mswin-c
std::string decoder_name(DecoderKind kind);

struct DecoderConfig {
  DecoderKind kind = DecoderKind::kMSwinP;
  WindowSchedule schedule = WindowSchedule::standard();
  std::int64_t channels = 512;
  std::int64_t heads = 8;
  double mlp_ratio = 1.0;

  std::int64_t mlp_hidden() const;
};

template <class Real>
struct DecoderParams {
  DecoderKind kind = DecoderKind::kTFpn;

  // MSwin-P: shared LN(Y0), parallel attention, concat reduction, LN + MLP.
  Tensor<Real> norm_g, norm_b;
  std::vector<AttentionParams<Real>> attention;  // also MSwin-C (no query projection)
  Tensor<Real> reduce_w, reduce_b;               // [L * d, d]
  Tensor<Real> mlp_norm_g, mlp_norm_b;
  Tensor<Real> fc1_w, fc1_b, fc2_w, fc2_b;

  // MSwin-S: one transformer block per schedule entry.
  std::vector<SwinBlockParams<Real>> blocks;

  static DecoderParams init(const DecoderConfig& config, Rng& rng);
  void collect(const std::string& prefix, ParamList<Real>& out) const;
};

/// Y1_l = A_l(LN(Y0)) + Y0; Y2 = Linear([Y1_1 .. Y1_L]); Z = MLP(LN(Y2)) + Y2.
template <class Real>
Tensor<Real> mswin_p(const Tensor<Real>& y0, const DecoderParams<Real>& params);

/// L pre-norm blocks applied in sequence; Z is the last block's output.
template <class Real>
Tensor<Real> mswin_s(const Tensor<Real>& y0, const DecoderParams<Real>& params);

/// Y_l = cross_sw_msa_l(Y_0 + ... + Y_{l-1}); Z = Y_L.
template <class Real>
Tensor<Real> mswin_c(const Tensor<Real>& y0, const DecoderParams<Real>& params);

/// Dispatches on params.kind; the T-FPN baseline returns Y0 unchanged.
template <class Real>
Tensor<Real> decode(const Tensor<Real>& y0, const DecoderParams<Real>& params);

template <class Real>
struct SegHeadParams {
  Tensor<Real> w, b;  // [d, K]

  static SegHeadParams init(std::int64_t channels, std::int64_t classes, Rng& rng);
  void collect(const std::string& prefix, ParamList<Real>& out) const;
};

/// Per-position classifier followed by bilinear upsampling to out_h x out_w.
template <class Real>
Tensor<Real> seg_head(const Tensor<Real>& z, const SegHeadParams<Real>& params,
                      std::int64_t out_h, std::int64_t out_w);

template <class Real>
struct AuxHeadParams {
  Tensor<Real> w1, b1;  // [in, hidden]
  Tensor<Real> w2, b2;  // [hidden, K]

  static AuxHeadParams init(std::int64_t in_channels, std::int64_t hidden, std::int64_t classes,
                            Rng& rng);
  void collect(const std::string& prefix, ParamList<Real>& out) const;
};

inline constexpr double kAuxLossWeight = 0.4;

/// linear -> ReLU -> linear, upsampled to out_h x out_w.
template <class Real>
Tensor<Real> aux_head(const Tensor<Real>& x3, const AuxHeadParams<Real>& params,
                      std::int64_t out_h, std::int64_t out_w);

}  // namespace mswin
