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

#include "mswin/params.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "mswin/error.hpp"

namespace mswin {

template <class Real>
Tensor<Real> trunc_normal(Shape shape, Rng& rng, double stddev) {
  Tensor<Real> t(std::move(shape));
  std::normal_distribution<double> dist(0.0, 1.0);
  for (auto& v : t.values()) {
    double s = dist(rng);
    while (s < -2.0 || s > 2.0) s = dist(rng);
    v = static_cast<Real>(s * stddev);
  }
  return t;
}

template Tensor<float> trunc_normal(Shape, Rng&, double);
template Tensor<double> trunc_normal(Shape, Rng&, double);

std::string join_name(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr std::array<char, 4> kMagic = {'M', 'S', 'W', 'N'};

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& is, const std::string& what) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw DataError("checkpoint truncated while reading " + what);
  }
  return v;
}

}  // namespace

template <class Real>
void save_checkpoint(const std::filesystem::path& path, const ParamList<Real>& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic.data(), kMagic.size());
  write_u32(os, kCheckpointVersion);
  write_u32(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    write_u32(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    const auto& shape = p.tensor.shape();
    write_u32(os, static_cast<std::uint32_t>(shape.size()));
    for (auto e : shape) write_u32(os, static_cast<std::uint32_t>(e));
    for (auto v : p.tensor.values()) {
      const float f = static_cast<float>(v);
      os.write(reinterpret_cast<const char*>(&f), sizeof f);
    }
  }
  if (!os) throw DataError("failed writing checkpoint " + path.string());
}

template <class Real>
void load_checkpoint(const std::filesystem::path& path, ParamList<Real>& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path.string());
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw DataError("not a parameter container: " + path.string());
  }
  const auto version = read_u32(is, "version");
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  std::map<std::string, NamedTensor<Real>*> by_name;
  for (auto& p : params) by_name[p.name] = &p;

  const auto count = read_u32(is, "record count");
  std::size_t matched = 0;
  for (std::uint32_t r = 0; r < count; ++r) {
    const auto len = read_u32(is, "name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw DataError("checkpoint truncated in record name");
    const auto rank = read_u32(is, "rank");
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(read_u32(is, "extent"));
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw DataError("checkpoint has unexpected or repeated tensor '" + name + "'");
    }
    auto& target = it->second->tensor;
    if (target.shape() != shape) {
      throw DataError("checkpoint tensor '" + name + "' has shape " + shape_string(shape) +
                      ", model expects " + shape_string(target.shape()));
    }
    std::vector<float> buf(static_cast<std::size_t>(target.numel()));
    if (!is.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(float)))) {
      throw DataError("checkpoint truncated in tensor '" + name + "'");
    }
    auto values = target.values();
    for (std::size_t i = 0; i < buf.size(); ++i) values[i] = static_cast<Real>(buf[i]);
    by_name.erase(it);
    ++matched;
  }
  if (matched != params.size()) {
    throw DataError("checkpoint is missing " + std::to_string(params.size() - matched) +
                    " tensors");
  }
}

template void save_checkpoint(const std::filesystem::path&, const ParamList<float>&);
template void save_checkpoint(const std::filesystem::path&, const ParamList<double>&);
template void load_checkpoint(const std::filesystem::path&, ParamList<float>&);
template void load_checkpoint(const std::filesystem::path&, ParamList<double>&);

}  // namespace mswin
