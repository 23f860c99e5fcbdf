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

#include "mswin/decoders.hpp"

#include <cmath>
#include <sstream>

#include "autograd.hpp"
#include "mswin/error.hpp"
#include "mswin/ops.hpp"

namespace mswin {

WindowSchedule WindowSchedule::standard() {
  return WindowSchedule{{{5, 0}, {5, 2}, {7, 0}, {7, 3}, {12, 0}, {12, 6}}};
}

WindowSchedule WindowSchedule::parse(const std::string& text) {
  WindowSchedule schedule;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("window schedule entry '" + item + "' is not m:n");
    }
    try {
      schedule.blocks.push_back(
          {std::stoll(item.substr(0, colon)), std::stoll(item.substr(colon + 1))});
    } catch (const std::logic_error&) {
      throw ConfigError("window schedule entry '" + item + "' is not m:n");
    }
  }
  return schedule;
}

std::string WindowSchedule::to_string() const {
  std::string out;
  for (const auto& b : blocks) {
    if (!out.empty()) out += ',';
    out += std::to_string(b.window) + ":" + std::to_string(b.shift);
  }
  return out;
}

void WindowSchedule::validate(bool any_shift) const {
  if (blocks.empty()) throw ConfigError("window schedule is empty");
  for (const auto& b : blocks) {
    if (b.window <= 0 || b.shift < 0 || b.shift >= b.window) {
      throw ConfigError("window schedule entry " + std::to_string(b.window) + ":" +
                        std::to_string(b.shift) + " violates 0 <= n < m");
    }
    if (!any_shift && b.shift != 0 && b.shift != b.window / 2) {
      throw ConfigError("window schedule entry " + std::to_string(b.window) + ":" +
                        std::to_string(b.shift) + " must use n = 0 or n = floor(m/2)");
    }
  }
}

DecoderKind parse_decoder_kind(const std::string& name) {
  if (name == "tfpn") return DecoderKind::kTFpn;
  if (name == "mswin-p") return DecoderKind::kMSwinP;
  if (name == "mswin-s") return DecoderKind::kMSwinS;
  if (name == "mswin-c") return DecoderKind::kMSwinC;
  throw ConfigError("unknown decoder '" + name + "' (expected tfpn, mswin-p, mswin-s, mswin-c)");
}

std::string decoder_name(DecoderKind kind) {
  switch (kind) {
    case DecoderKind::kTFpn: return "tfpn";
    case DecoderKind::kMSwinP: return "mswin-p";
    case DecoderKind::kMSwinS: return "mswin-s";
    case DecoderKind::kMSwinC: return "mswin-c";
  }
  return "unknown";
}

std::int64_t DecoderConfig::mlp_hidden() const {
  return static_cast<std::int64_t>(std::llround(mlp_ratio * static_cast<double>(channels)));
}

// ---------------------------------------------------------------------------

template <class Real>
DecoderParams<Real> DecoderParams<Real>::init(const DecoderConfig& config, Rng& rng) {
  DecoderParams p;
  p.kind = config.kind;
  const auto d = config.channels;
  const auto hidden = config.mlp_hidden();
  const auto L = static_cast<std::int64_t>(config.schedule.size());
  switch (config.kind) {
    case DecoderKind::kTFpn:
      break;
    case DecoderKind::kMSwinP:
      p.norm_g = make_param(Tensor<Real>({d}, Real(1)));
      p.norm_b = make_param(Tensor<Real>({d}));
      for (const auto& b : config.schedule.blocks) {
        p.attention.push_back(AttentionParams<Real>::init(d, config.heads, b.window, b.shift, rng));
      }
      p.reduce_w = make_param(trunc_normal<Real>({L * d, d}, rng));
      p.reduce_b = make_param(Tensor<Real>({d}));
      p.mlp_norm_g = make_param(Tensor<Real>({d}, Real(1)));
      p.mlp_norm_b = make_param(Tensor<Real>({d}));
      p.fc1_w = make_param(trunc_normal<Real>({d, hidden}, rng));
      p.fc1_b = make_param(Tensor<Real>({hidden}));
      p.fc2_w = make_param(trunc_normal<Real>({hidden, d}, rng));
      p.fc2_b = make_param(Tensor<Real>({d}));
      break;
    case DecoderKind::kMSwinS:
      for (const auto& b : config.schedule.blocks) {
        p.blocks.push_back(
            SwinBlockParams<Real>::init(d, config.heads, b.window, b.shift, hidden, rng));
      }
      break;
    case DecoderKind::kMSwinC:
      for (const auto& b : config.schedule.blocks) {
        p.attention.push_back(AttentionParams<Real>::init(d, config.heads, b.window, b.shift, rng,
                                                          /*query_projection=*/false));
      }
      break;
  }
  return p;
}

template <class Real>
void DecoderParams<Real>::collect(const std::string& prefix, ParamList<Real>& out) const {
  if (norm_g.defined()) {
    out.push_back({join_name(prefix, "norm_g"), norm_g});
    out.push_back({join_name(prefix, "norm_b"), norm_b});
  }
  for (std::size_t l = 0; l < attention.size(); ++l) {
    attention[l].collect(join_name(prefix, "attn" + std::to_string(l + 1)), out);
  }
  if (reduce_w.defined()) {
    out.push_back({join_name(prefix, "reduce_w"), reduce_w});
    out.push_back({join_name(prefix, "reduce_b"), reduce_b});
    out.push_back({join_name(prefix, "mlp_norm_g"), mlp_norm_g});
    out.push_back({join_name(prefix, "mlp_norm_b"), mlp_norm_b});
    out.push_back({join_name(prefix, "fc1_w"), fc1_w});
    out.push_back({join_name(prefix, "fc1_b"), fc1_b});
    out.push_back({join_name(prefix, "fc2_w"), fc2_w});
    out.push_back({join_name(prefix, "fc2_b"), fc2_b});
  }
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    blocks[l].collect(join_name(prefix, "block" + std::to_string(l + 1)), out);
  }
}

template <class Real>
Tensor<Real> mswin_p(const Tensor<Real>& y0, const DecoderParams<Real>& params) {
  if (params.attention.empty() || !params.reduce_w.defined()) {
    throw ConfigError("mswin_p: parameters are not an MSwin-P decoder");
  }
  const auto normed = layer_norm(y0, params.norm_g, params.norm_b);
  std::vector<Tensor<Real>> branches;
  for (std::size_t l = 0; l < params.attention.size(); ++l) {
    NamedScope scope("block" + std::to_string(l + 1));
    branches.push_back(add(windowed_self_attention(normed, params.attention[l]), y0));
  }
  const auto y2 = linear(concat_channels(std::span<const Tensor<Real>>(branches)), params.reduce_w,
                         params.reduce_b);
  NamedScope scope("mlp");
  const auto hidden = gelu(linear(layer_norm(y2, params.mlp_norm_g, params.mlp_norm_b),
                                  params.fc1_w, params.fc1_b));
  return add(linear(hidden, params.fc2_w, params.fc2_b), y2);
}

template <class Real>
Tensor<Real> mswin_s(const Tensor<Real>& y0, const DecoderParams<Real>& params) {
  if (params.blocks.empty()) throw ConfigError("mswin_s: parameters are not an MSwin-S decoder");
  auto y = y0;
  for (std::size_t l = 0; l < params.blocks.size(); ++l) {
    NamedScope scope("block" + std::to_string(l + 1));
    y = swin_block(y, params.blocks[l]);
  }
  return y;
}

template <class Real>
Tensor<Real> mswin_c(const Tensor<Real>& y0, const DecoderParams<Real>& params) {
  if (params.attention.empty() || params.attention.front().has_query_projection()) {
    throw ConfigError("mswin_c: parameters are not an MSwin-C decoder");
  }
  auto aggregate = y0;
  Tensor<Real> y;
  for (std::size_t l = 0; l < params.attention.size(); ++l) {
    NamedScope scope("block" + std::to_string(l + 1));
    if (l > 0) aggregate = add(aggregate, y);
    y = cross_sw_msa(aggregate, params.attention[l]);
  }
  return y;
}

template <class Real>
Tensor<Real> decode(const Tensor<Real>& y0, const DecoderParams<Real>& params) {
  switch (params.kind) {
    case DecoderKind::kTFpn: return y0;
    case DecoderKind::kMSwinP: return mswin_p(y0, params);
    case DecoderKind::kMSwinS: return mswin_s(y0, params);
    case DecoderKind::kMSwinC: return mswin_c(y0, params);
  }
  throw ConfigError("decode: unknown decoder kind");
}

// ---------------------------------------------------------------------------

template <class Real>
SegHeadParams<Real> SegHeadParams<Real>::init(std::int64_t channels, std::int64_t classes,
                                              Rng& rng) {
  SegHeadParams p;
  p.w = make_param(trunc_normal<Real>({channels, classes}, rng));
  p.b = make_param(Tensor<Real>({classes}));
  return p;
}

template <class Real>
void SegHeadParams<Real>::collect(const std::string& prefix, ParamList<Real>& out) const {
  out.push_back({join_name(prefix, "w"), w});
  out.push_back({join_name(prefix, "b"), b});
}

template <class Real>
Tensor<Real> seg_head(const Tensor<Real>& z, const SegHeadParams<Real>& params,
                      std::int64_t out_h, std::int64_t out_w) {
  return bilinear_resize(linear(z, params.w, params.b), out_h, out_w);
}

template <class Real>
AuxHeadParams<Real> AuxHeadParams<Real>::init(std::int64_t in_channels, std::int64_t hidden,
                                              std::int64_t classes, Rng& rng) {
  AuxHeadParams p;
  p.w1 = make_param(trunc_normal<Real>({in_channels, hidden}, rng));
  p.b1 = make_param(Tensor<Real>({hidden}));
  p.w2 = make_param(trunc_normal<Real>({hidden, classes}, rng));
  p.b2 = make_param(Tensor<Real>({classes}));
  return p;
}

template <class Real>
void AuxHeadParams<Real>::collect(const std::string& prefix, ParamList<Real>& out) const {
  out.push_back({join_name(prefix, "w1"), w1});
  out.push_back({join_name(prefix, "b1"), b1});
  out.push_back({join_name(prefix, "w2"), w2});
  out.push_back({join_name(prefix, "b2"), b2});
}

template <class Real>
Tensor<Real> aux_head(const Tensor<Real>& x3, const AuxHeadParams<Real>& params,
                      std::int64_t out_h, std::int64_t out_w) {
  const auto hidden = relu(linear(x3, params.w1, params.b1));
  return bilinear_resize(linear(hidden, params.w2, params.b2), out_h, out_w);
}

#define MSWIN_INSTANTIATE_DECODERS(Real)                                                       \
  template struct DecoderParams<Real>;                                                        \
  template struct SegHeadParams<Real>;                                                        \
  template struct AuxHeadParams<Real>;                                                        \
  template Tensor<Real> mswin_p(const Tensor<Real>&, const DecoderParams<Real>&);             \
  template Tensor<Real> mswin_s(const Tensor<Real>&, const DecoderParams<Real>&);             \
  template Tensor<Real> mswin_c(const Tensor<Real>&, const DecoderParams<Real>&);             \
  template Tensor<Real> decode(const Tensor<Real>&, const DecoderParams<Real>&);              \
  template Tensor<Real> seg_head(const Tensor<Real>&, const SegHeadParams<Real>&,             \
                                 std::int64_t, std::int64_t);                                 \
  template Tensor<Real> aux_head(const Tensor<Real>&, const AuxHeadParams<Real>&,             \
                                 std::int64_t, std::int64_t);

MSWIN_INSTANTIATE_DECODERS(float)
MSWIN_INSTANTIATE_DECODERS(double)

}  // namespace mswin
