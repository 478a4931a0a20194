// Copyright 2026 The bearing-dx Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bdx/model/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <string>

#include "bdx/error.hpp"

namespace bdx::model {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  void raw(std::uint8_t* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, data_ + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return size_ - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > size_ - pos_) {
      throw Error(ErrorCode::CorruptFile, "checkpoint truncated",
                  {{"offset", std::to_string(pos_)}});
    }
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; checkpoints stay far below 4 GiB.
  crc = crc32(crc, data, static_cast<uInt>(n));
  return static_cast<std::uint32_t>(crc);
}

constexpr std::uint8_t kFlagTrainable = 1;
constexpr std::uint8_t kFlagQuantized = 2;

}  // namespace

template <typename T>
std::vector<std::uint8_t> serialize_checkpoint(const Classifier<T>& model) {
  Writer w;
  w.bytes("BDLM", 4);
  w.u16(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(sizeof(T)));
  const std::string cfg = to_json(model.config()).dump();
  w.u32(static_cast<std::uint32_t>(cfg.size()));
  w.bytes(cfg.data(), cfg.size());
  w.u32(static_cast<std::uint32_t>(model.params().size()));
  for (const auto& p : model.params()) {
    w.u16(static_cast<std::uint16_t>(p.name.size()));
    w.bytes(p.name.data(), p.name.size());
    std::uint8_t flags = p.trainable() ? kFlagTrainable : 0;
    if (p.quantized) flags |= kFlagQuantized;
    w.u8(flags);
    w.u32(static_cast<std::uint32_t>(p.value.rows()));
    w.u32(static_cast<std::uint32_t>(p.value.cols()));
    if (p.quantized) {
      const auto& q = *p.quantized;
      w.u32(static_cast<std::uint32_t>(q.block_size));
      for (double a : q.absmax) w.f64(a);
      w.bytes(q.packed.data(), q.packed.size());
    } else {
      for (Eigen::Index i = 0; i < p.value.size(); ++i) {
        w.f64(static_cast<double>(p.value.data()[i]));
      }
    }
  }
  auto& buf = w.buffer();
  const std::uint32_t crc = crc32_of(buf.data(), buf.size());
  w.u32(crc);
  return std::move(buf);
}

template <typename T>
Classifier<T> deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 + 2 + 1 + 4 + 4 + 4 || std::memcmp(bytes.data(), "BDLM", 4) != 0) {
    throw Error(ErrorCode::CorruptFile, "not a BDLM checkpoint");
  }
  const std::size_t body = bytes.size() - 4;
  Reader tail(bytes.data() + body, 4);
  if (tail.u32() != crc32_of(bytes.data(), body)) {
    throw Error(ErrorCode::CorruptFile, "checkpoint checksum mismatch");
  }
  Reader r(bytes.data() + 4, body - 4);
  const std::uint16_t version = r.u16();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::VersionMismatch, "unsupported checkpoint version",
                {{"version", std::to_string(version)},
                 {"expected", std::to_string(kCheckpointVersion)}});
  }
  r.u8();  // scalar width of the writer; values are stored as f64 regardless
  const std::string cfg_text = r.str(r.u32());
  ModelConfig cfg;
  try {
    cfg = model_config_from_json(nlohmann::json::parse(cfg_text));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("bad config block: ") + e.what());
  }
  // Build the skeleton without quantizing random weights; stored tensors
  // supply the quantized state.
  const bool quantized_base = cfg.quantize_base;
  cfg.quantize_base = false;
  Classifier<T> model(cfg);
  auto& params = model.params();

  const std::uint32_t count = r.u32();
  if (count != params.size()) {
    throw Error(ErrorCode::CorruptFile, "tensor count does not match config",
                {{"stored", std::to_string(count)},
                 {"expected", std::to_string(params.size())}});
  }
  std::set<std::string> seen;
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::string name = r.str(r.u16());
    const std::uint8_t flags = r.u8();
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    const std::size_t idx = params.find(name);
    if (idx == ParameterSet<T>::npos || !seen.insert(name).second) {
      throw Error(ErrorCode::CorruptFile, "unexpected tensor '" + name + "'");
    }
    auto& p = params[idx];
    if (p.value.rows() != rows || p.value.cols() != cols ||
        p.trainable() != ((flags & kFlagTrainable) != 0)) {
      throw Error(ErrorCode::CorruptFile, "tensor '" + name + "' shape or tag mismatch");
    }
    if (flags & kFlagQuantized) {
      QuantizedMatrix q;
      q.rows = rows;
      q.cols = cols;
      q.block_size = r.u32();
      if (q.block_size == 0 || q.block_size % 2 != 0) {
        throw Error(ErrorCode::CorruptFile, "bad quantization block size");
      }
      q.absmax.resize(q.num_blocks());
      for (double& a : q.absmax) a = r.f64();
      q.packed.resize((q.size() + 1) / 2);
      r.raw(q.packed.data(), q.packed.size());
      p.value = dequantize<T>(q, Exec::Serial);
      p.quantized = std::move(q);
    } else {
      for (Eigen::Index i = 0; i < p.value.size(); ++i) {
        p.value.data()[i] = static_cast<T>(r.f64());
      }
      p.quantized.reset();
    }
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::CorruptFile, "trailing bytes after tensors");
  }
  if (quantized_base) model.quantize_base();  // no-op for already-quantized tensors
  return model;
}

template <typename T>
void save_checkpoint(const Classifier<T>& model, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write checkpoint", {{"path", path.string()}});
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "checkpoint write failed", {{"path", path.string()}});
}

template <typename T>
Classifier<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open checkpoint", {{"path", path.string()}});
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return deserialize_checkpoint<T>(bytes);
  } catch (Error& e) {
    auto fields = e.fields();
    fields["path"] = path.string();
    throw Error(e.code(), e.what(), fields);
  }
}

template std::vector<std::uint8_t> serialize_checkpoint<float>(const Classifier<float>&);
template std::vector<std::uint8_t> serialize_checkpoint<double>(const Classifier<double>&);
template Classifier<float> deserialize_checkpoint<float>(const std::vector<std::uint8_t>&);
template Classifier<double> deserialize_checkpoint<double>(const std::vector<std::uint8_t>&);
template void save_checkpoint<float>(const Classifier<float>&, const std::filesystem::path&);
template void save_checkpoint<double>(const Classifier<double>&, const std::filesystem::path&);
template Classifier<float> load_checkpoint<float>(const std::filesystem::path&);
template Classifier<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace bdx::model
