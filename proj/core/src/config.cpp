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

#include "mswin/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <tuple>

#include "mswin/error.hpp"

namespace mswin {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ConfigError(key + ": '" + value + "' is not a number");
}

std::int64_t to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const auto v = std::stoll(value, &used);
    if (used == value.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ConfigError(key + ": '" + value + "' is not an integer");
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw ConfigError(key + ": '" + value + "' is not a boolean");
}

std::array<std::int64_t, 4> to_quad(const std::string& key, const std::string& value) {
  const auto parts = split(value, ',');
  if (parts.size() != 4) throw ConfigError(key + ": expected four comma-separated integers");
  std::array<std::int64_t, 4> out{};
  for (int i = 0; i < 4; ++i) out[i] = to_int(key, parts[i]);
  return out;
}

template <class T>
std::string join(const T& values) {
  std::ostringstream os;
  bool first = true;
  for (const auto& v : values) {
    if (!first) os << ',';
    os << v;
    first = false;
  }
  return os.str();
}

std::string number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::pair<std::int64_t, std::int64_t> parse_size(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) {
    const auto n = to_int("size", text);
    return {n, n};
  }
  return {to_int("size", text.substr(0, x)), to_int("size", text.substr(x + 1))};
}

RunConfig RunConfig::parse(const std::string& text) {
  std::map<std::string, std::string> entries;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!entries.emplace(key, value).second) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key " + key);
    }
  }

  RunConfig c;
  // The preset goes first so that per-field overrides apply on top of it.
  if (auto it = entries.find("model.backbone"); it != entries.end()) {
    c.model.backbone = BackboneConfig::preset(it->second);
    entries.erase(it);
  }

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"model.embed_dim", [&](auto& k, auto& v) { c.model.backbone.embed_dim = to_int(k, v); }},
      {"model.depths", [&](auto& k, auto& v) { c.model.backbone.depths = to_quad(k, v); }},
      {"model.heads", [&](auto& k, auto& v) { c.model.backbone.heads = to_quad(k, v); }},
      {"model.window", [&](auto& k, auto& v) { c.model.backbone.window = to_int(k, v); }},
      {"model.patch", [&](auto& k, auto& v) { c.model.backbone.patch = to_int(k, v); }},
      {"model.mlp_ratio", [&](auto& k, auto& v) { c.model.backbone.mlp_ratio = to_double(k, v); }},
      {"model.decoder",
       [&](auto&, auto& v) { c.model.decoder.kind = parse_decoder_kind(v); }},
      {"model.schedule",
       [&](auto&, auto& v) { c.model.decoder.schedule = WindowSchedule::parse(v); }},
      {"model.d_enc", [&](auto& k, auto& v) { c.model.decoder.channels = to_int(k, v); }},
      {"model.decoder_heads", [&](auto& k, auto& v) { c.model.decoder.heads = to_int(k, v); }},
      {"model.decoder_mlp_ratio",
       [&](auto& k, auto& v) { c.model.decoder.mlp_ratio = to_double(k, v); }},
      {"model.fusion_window", [&](auto& k, auto& v) { c.model.fusion_window = to_int(k, v); }},
      {"model.aux_hidden", [&](auto& k, auto& v) { c.model.aux_hidden = to_int(k, v); }},
      {"model.classes", [&](auto& k, auto& v) { c.model.classes = to_int(k, v); }},
      {"model.seed",
       [&](auto& k, auto& v) { c.model.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
      {"optimizer.lr", [&](auto& k, auto& v) { c.optimizer.lr = to_double(k, v); }},
      {"optimizer.weight_decay",
       [&](auto& k, auto& v) { c.optimizer.weight_decay = to_double(k, v); }},
      {"optimizer.beta1", [&](auto& k, auto& v) { c.optimizer.beta1 = to_double(k, v); }},
      {"optimizer.beta2", [&](auto& k, auto& v) { c.optimizer.beta2 = to_double(k, v); }},
      {"optimizer.eps", [&](auto& k, auto& v) { c.optimizer.eps = to_double(k, v); }},
      {"optimizer.warmup", [&](auto& k, auto& v) { c.optimizer.warmup = to_int(k, v); }},
      {"optimizer.steps", [&](auto& k, auto& v) { c.optimizer.steps = to_int(k, v); }},
      {"optimizer.batch", [&](auto& k, auto& v) { c.optimizer.batch = to_int(k, v); }},
      {"data.source",
       [&](auto& k, auto& v) {
         if (v == "synthetic") {
           c.data.source = DataSource::kSynthetic;
         } else if (v == "directory") {
           c.data.source = DataSource::kDirectory;
         } else {
           throw ConfigError(k + ": expected synthetic or directory, got '" + v + "'");
         }
       }},
      {"data.path", [&](auto&, auto& v) { c.data.path = v; }},
      {"data.count", [&](auto& k, auto& v) { c.data.count = to_int(k, v); }},
      {"data.height", [&](auto& k, auto& v) { c.data.height = to_int(k, v); }},
      {"data.width", [&](auto& k, auto& v) { c.data.width = to_int(k, v); }},
      {"data.crop",
       [&](auto&, auto& v) { std::tie(c.data.crop_h, c.data.crop_w) = parse_size(v); }},
      {"data.flip", [&](auto& k, auto& v) { c.data.flip = to_double(k, v); }},
      {"data.seed",
       [&](auto& k, auto& v) { c.data.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
      {"eval.scales",
       [&](auto& k, auto& v) {
         c.eval.scales.clear();
         for (const auto& s : split(v, ',')) c.eval.scales.push_back(to_double(k, s));
       }},
      {"eval.flip", [&](auto& k, auto& v) { c.eval.flip = to_bool(k, v); }},
      {"eval.interval", [&](auto& k, auto& v) { c.eval.interval = to_int(k, v); }},
      {"train.log", [&](auto&, auto& v) { c.train.log = v; }},
      {"train.checkpoint", [&](auto&, auto& v) { c.train.checkpoint = v; }},
      {"train.target_miou", [&](auto& k, auto& v) { c.train.target_miou = to_double(k, v); }},
  };
  for (const auto& [key, value] : entries) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(key, value);
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string RunConfig::to_text() const {
  const auto& b = model.backbone;
  std::ostringstream os;
  os << "model.backbone = " << b.name << '\n'
     << "model.embed_dim = " << b.embed_dim << '\n'
     << "model.depths = " << join(b.depths) << '\n'
     << "model.heads = " << join(b.heads) << '\n'
     << "model.window = " << b.window << '\n'
     << "model.patch = " << b.patch << '\n'
     << "model.mlp_ratio = " << number(b.mlp_ratio) << '\n'
     << "model.decoder = " << decoder_name(model.decoder.kind) << '\n'
     << "model.schedule = " << model.decoder.schedule.to_string() << '\n'
     << "model.d_enc = " << model.decoder.channels << '\n'
     << "model.decoder_heads = " << model.decoder.heads << '\n'
     << "model.decoder_mlp_ratio = " << number(model.decoder.mlp_ratio) << '\n'
     << "model.fusion_window = " << model.fusion_window << '\n'
     << "model.aux_hidden = " << model.aux_hidden << '\n'
     << "model.classes = " << model.classes << '\n'
     << "model.seed = " << model.seed << '\n'
     << "optimizer.lr = " << number(optimizer.lr) << '\n'
     << "optimizer.weight_decay = " << number(optimizer.weight_decay) << '\n'
     << "optimizer.beta1 = " << number(optimizer.beta1) << '\n'
     << "optimizer.beta2 = " << number(optimizer.beta2) << '\n'
     << "optimizer.eps = " << number(optimizer.eps) << '\n'
     << "optimizer.warmup = " << optimizer.warmup << '\n'
     << "optimizer.steps = " << optimizer.steps << '\n'
     << "optimizer.batch = " << optimizer.batch << '\n'
     << "data.source = " << (data.source == DataSource::kSynthetic ? "synthetic" : "directory")
     << '\n';
  if (!data.path.empty()) os << "data.path = " << data.path << '\n';
  os << "data.count = " << data.count << '\n'
     << "data.height = " << data.height << '\n'
     << "data.width = " << data.width << '\n'
     << "data.crop = " << data.crop_h << 'x' << data.crop_w << '\n'
     << "data.flip = " << number(data.flip) << '\n'
     << "data.seed = " << data.seed << '\n'
     << "eval.scales = " << join(eval.scales) << '\n'
     << "eval.flip = " << (eval.flip ? "true" : "false") << '\n'
     << "eval.interval = " << eval.interval << '\n';
  if (!train.log.empty()) os << "train.log = " << train.log << '\n';
  if (!train.checkpoint.empty()) os << "train.checkpoint = " << train.checkpoint << '\n';
  os << "train.target_miou = " << number(train.target_miou) << '\n';
  return os.str();
}

void RunConfig::validate() const {
  model.validate();
  const auto stride = model.stride();
  if (data.crop_h <= 0 || data.crop_w <= 0 || data.crop_h % stride != 0 ||
      data.crop_w % stride != 0) {
    throw ConfigError("data.crop " + std::to_string(data.crop_h) + "x" +
                      std::to_string(data.crop_w) + " must be a positive multiple of " +
                      std::to_string(stride));
  }
  if (data.source == DataSource::kSynthetic && (data.height <= 0 || data.width <= 0)) {
    throw ConfigError("data.height and data.width must be positive");
  }
  if (data.source == DataSource::kSynthetic && data.count <= 0) {
    throw ConfigError("data.count must be positive");
  }
  if (data.source == DataSource::kDirectory && data.path.empty()) {
    throw ConfigError("data.path is required for the directory source");
  }
  if (data.flip < 0 || data.flip > 1) throw ConfigError("data.flip must lie in [0, 1]");
  if (eval.scales.empty()) throw ConfigError("eval.scales is empty");
  for (const auto s : eval.scales) {
    if (!(s > 0)) throw ConfigError("eval.scales must all be positive");
  }
  if (eval.interval <= 0) throw ConfigError("eval.interval must be positive");
  if (optimizer.lr < 0 || optimizer.weight_decay < 0) {
    throw ConfigError("optimizer.lr and optimizer.weight_decay must be non-negative");
  }
  if (optimizer.beta1 < 0 || optimizer.beta1 >= 1 || optimizer.beta2 < 0 ||
      optimizer.beta2 >= 1) {
    throw ConfigError("optimizer betas must lie in [0, 1)");
  }
  if (optimizer.eps <= 0) throw ConfigError("optimizer.eps must be positive");
  if (optimizer.warmup < 0 || optimizer.steps < 0 || optimizer.batch <= 0) {
    throw ConfigError("optimizer.warmup/steps must be >= 0 and optimizer.batch > 0");
  }
}

}  // namespace mswin
