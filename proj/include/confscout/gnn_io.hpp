// Copyright 2026 The confscout Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Model payload layout (all integers u32, all reals f64, little-endian):
//
//   magic "CSGNNMDL" | format version | feature schema version
//   | hidden | outputs | var features | cons features | half-convs
//   | bn_eps | bn_momentum | tensor count
//   | dimension table: (rows, cols) per tensor
//   | tensor data, column-major, in GnnModel::state() order
//
// An ensemble file is "CSGNNENS" | format version | member count, then
// (u64 byte length, model payload) per member.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "confscout/error.hpp"
#include "confscout/gnn.hpp"
#include "confscout/gnn_train.hpp"

namespace confscout::gnn {

inline constexpr std::string_view kModelMagic = "CSGNNMDL";
inline constexpr std::string_view kEnsembleMagic = "CSGNNENS";
inline constexpr std::uint32_t kModelFormatVersion = 1;

namespace detail {

class Writer {
 public:
  void bytes(std::string_view s) { out_.append(s); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out_.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) out_.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::string_view bytes(std::size_t n, const char* what) {
    need(n, what);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t(static_cast<unsigned char>(data_[pos_ + k])) << (8 * k);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t(static_cast<unsigned char>(data_[pos_ + k])) << (8 * k);
    pos_ += 8;
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  bool done() const noexcept { return pos_ == data_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (data_.size() - pos_ < n) throw FormatError(std::string("truncated model payload while reading ") + what);
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string save_model(const GnnModel& model) {
  detail::Writer w;
  w.bytes(kModelMagic);
  w.u32(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.schema_version));
  w.u32(static_cast<std::uint32_t>(model.hidden));
  w.u32(static_cast<std::uint32_t>(model.outputs));
  w.u32(kVarFeatures);
  w.u32(kConsFeatures);
  w.u32(kHalfConvs);
  w.f64(model.bn_eps);
  w.f64(model.bn_momentum);
  const auto tensors = model.state();
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const Mat* t : tensors) {
    w.u32(static_cast<std::uint32_t>(t->rows()));
    w.u32(static_cast<std::uint32_t>(t->cols()));
  }
  for (const Mat* t : tensors)
    for (Eigen::Index k = 0; k < t->size(); ++k) w.f64(t->data()[k]);
  return w.take();
}

namespace detail {

inline GnnModel read_model(Reader& r) {
  if (r.bytes(kModelMagic.size(), "magic") != kModelMagic) throw FormatError("not a model payload (bad magic header)");
  const auto version = r.u32("format version");
  if (version != kModelFormatVersion)
    throw FormatError("unsupported model format version " + std::to_string(version));
  GnnModel m;
  m.schema_version = static_cast<int>(r.u32("schema version"));
  if (m.schema_version != kFeatureSchemaVersion)
    throw FormatError("model built for feature schema " + std::to_string(m.schema_version) + ", this build uses " +
                      std::to_string(kFeatureSchemaVersion));
  m.hidden = static_cast<int>(r.u32("hidden width"));
  m.outputs = static_cast<int>(r.u32("output width"));
  if (r.u32("var feature count") != kVarFeatures || r.u32("cons feature count") != kConsFeatures ||
      r.u32("half-conv count") != kHalfConvs)
    throw FormatError("model architecture does not match this build");
  m.bn_eps = r.f64("bn eps");
  m.bn_momentum = r.f64("bn momentum");
  if (m.hidden < 1 || m.outputs < 1) throw FormatError("invalid model dimensions");

  // Expected shapes come from a freshly laid out model of the same size.
  GnnModel shape = make_model(m.outputs, 0, m.hidden);
  auto expected = shape.state();
  const auto count = r.u32("tensor count");
  if (count != expected.size()) throw FormatError("tensor count mismatch");
  for (const Mat* e : expected) {
    const auto rows = r.u32("dimension table"), cols = r.u32("dimension table");
    if (rows != e->rows() || cols != e->cols()) throw FormatError("tensor shape mismatch in dimension table");
  }
  shape.schema_version = m.schema_version;
  shape.bn_eps = m.bn_eps;
  shape.bn_momentum = m.bn_momentum;
  m = std::move(shape);
  for (Mat* t : m.state())
    for (Eigen::Index k = 0; k < t->size(); ++k) t->data()[k] = r.f64("tensor data");
  return m;
}

}  // namespace detail

inline GnnModel load_model(std::string_view payload) {
  detail::Reader r(payload);
  GnnModel m = detail::read_model(r);
  if (!r.done()) throw FormatError("trailing bytes after model payload");
  return m;
}

inline std::string save_ensemble(const Ensemble& e) {
  detail::Writer w;
  w.bytes(kEnsembleMagic);
  w.u32(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(e.members.size()));
  for (const auto& m : e.members) {
    const std::string payload = save_model(m);
    w.u64(payload.size());
    w.bytes(payload);
  }
  return w.take();
}

// Accepts an ensemble file or a single model payload (a one-member ensemble).
inline Ensemble load_ensemble(std::string_view payload) {
  if (payload.substr(0, kModelMagic.size()) == kModelMagic) return Ensemble{{load_model(payload)}};
  detail::Reader r(payload);
  if (r.bytes(kEnsembleMagic.size(), "magic") != kEnsembleMagic)
    throw FormatError("not an ensemble payload (bad magic header)");
  const auto version = r.u32("format version");
  if (version != kModelFormatVersion)
    throw FormatError("unsupported ensemble format version " + std::to_string(version));
  const auto n = r.u32("member count");
  Ensemble e;
  for (std::uint32_t k = 0; k < n; ++k) {
    const auto len = r.u64("member length");
    e.members.push_back(load_model(r.bytes(static_cast<std::size_t>(len), "member payload")));
  }
  if (!r.done()) throw FormatError("trailing bytes after ensemble payload");
  check_widths(e);
  return e;
}

}  // namespace confscout::gnn
