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

// Reader for the subset of MAT-file Level 5 that vibration archives use:
// real 2-D double/single matrices, optionally wrapped in miCOMPRESSED.

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "bdx/error.hpp"
#include "bdx/ingest.hpp"

namespace bdx::ingest {

namespace {

enum : std::uint32_t {
  miINT8 = 1,
  miUINT8 = 2,
  miINT16 = 3,
  miUINT16 = 4,
  miINT32 = 5,
  miUINT32 = 6,
  miSINGLE = 7,
  miDOUBLE = 9,
  miINT64 = 12,
  miUINT64 = 13,
  miMATRIX = 14,
  miCOMPRESSED = 15,
};

enum : std::uint32_t { mxDOUBLE_CLASS = 6, mxSINGLE_CLASS = 7 };

constexpr std::size_t kHeaderBytes = 128;
constexpr std::size_t kMaxInflated = std::size_t{1} << 31;

[[noreturn]] void corrupt(std::size_t offset, const std::string& what) {
  throw Error(ErrorCode::CorruptElement, "corrupt MAT element: " + what,
              {{"offset", std::to_string(offset)}});
}

std::size_t pad8(std::size_t n) { return (n + 7) & ~std::size_t{7}; }

std::size_t type_width(std::uint32_t type) {
  switch (type) {
    case miINT8: case miUINT8: return 1;
    case miINT16: case miUINT16: return 2;
    case miINT32: case miUINT32: case miSINGLE: return 4;
    case miDOUBLE: case miINT64: case miUINT64: return 8;
    default: return 0;
  }
}

// Cursor over a byte range that knows the file's endianness. `base` is the
// absolute file offset of data[0], used for error reports.
struct Reader {
  std::span<const std::uint8_t> data;
  bool big = false;
  std::size_t base = 0;

  std::uint64_t uint(std::size_t at, std::size_t width) const {
    if (at + width > data.size()) corrupt(base + at, "read past end");
    std::uint64_t v = 0;
    for (std::size_t b = 0; b < width; ++b) {
      const std::size_t src = big ? width - 1 - b : b;
      v |= static_cast<std::uint64_t>(data[at + src]) << (8 * b);
    }
    return v;
  }
  std::uint32_t u32(std::size_t at) const { return static_cast<std::uint32_t>(uint(at, 4)); }

  double number(std::size_t at, std::uint32_t type) const {
    const std::uint64_t v = uint(at, type_width(type));
    switch (type) {
      case miINT8: return static_cast<std::int8_t>(v);
      case miUINT8: return static_cast<std::uint8_t>(v);
      case miINT16: return static_cast<std::int16_t>(v);
      case miUINT16: return static_cast<std::uint16_t>(v);
      case miINT32: return static_cast<std::int32_t>(v);
      case miUINT32: return static_cast<std::uint32_t>(v);
      case miSINGLE: return std::bit_cast<float>(static_cast<std::uint32_t>(v));
      case miDOUBLE: return std::bit_cast<double>(v);
      case miINT64: return static_cast<double>(static_cast<std::int64_t>(v));
      case miUINT64: return static_cast<double>(v);
      default: corrupt(base + at, "non-numeric element type");
    }
  }
};

struct Tag {
  std::uint32_t type = 0;
  std::size_t size = 0;       // payload bytes
  std::size_t payload = 0;    // offset of the payload
  std::size_t next = 0;       // offset of the following element
};

Tag read_tag(const Reader& r, std::size_t at) {
  if (at + 8 > r.data.size()) corrupt(r.base + at, "truncated tag");
  const std::uint32_t first = r.u32(at);
  Tag t;
  if ((first >> 16) != 0) {
    // Small data element: size and type share the first word.
    t.type = first & 0xFFFF;
    t.size = first >> 16;
    if (t.size > 4) corrupt(r.base + at, "small element larger than 4 bytes");
    t.payload = at + 4;
    t.next = at + 8;
    return t;
  }
  t.type = first;
  t.size = r.u32(at + 4);
  t.payload = at + 8;
  if (t.size > r.data.size() - t.payload) corrupt(r.base + at, "element size exceeds file");
  t.next = t.type == miCOMPRESSED ? t.payload + t.size
                                  : std::min(t.payload + pad8(t.size), r.data.size());
  return t;
}

std::vector<std::uint8_t> inflate_all(std::span<const std::uint8_t> in, std::size_t offset) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) corrupt(offset, "zlib init failed");
  std::vector<std::uint8_t> out;
  std::uint8_t chunk[1 << 15];
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk;
    zs.avail_out = sizeof(chunk);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      corrupt(offset, "compressed element does not inflate");
    }
    out.insert(out.end(), chunk, chunk + (sizeof(chunk) - zs.avail_out));
    if (out.size() > kMaxInflated) {
      inflateEnd(&zs);
      corrupt(offset, "compressed element too large");
    }
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      corrupt(offset, "compressed element truncated");
    }
  }
  inflateEnd(&zs);
  return out;
}

struct ParsedMatrix {
  bool supported = false;
  std::uint32_t unsupported_code = 0;
  MatArray array;
};

ParsedMatrix parse_matrix(const Reader& r, const Tag& top) {
  const std::size_t end = top.payload + top.size;
  ParsedMatrix out;
  out.array.big_endian = r.big;

  // Array flags.
  Tag flags = read_tag(r, top.payload);
  if (flags.type != miUINT32 || flags.size < 8) corrupt(r.base + top.payload, "array flags");
  const std::uint32_t fword = r.u32(flags.payload);
  const std::uint32_t mx_class = fword & 0xFF;
  const bool complex = (fword & 0x0800) != 0;

  // Dimensions.
  Tag dims = read_tag(r, flags.next);
  if (dims.type != miINT32 || dims.size % 4 != 0 || dims.size == 0 || dims.next > end) {
    corrupt(r.base + flags.next, "dimensions");
  }
  std::vector<std::int64_t> shape;
  for (std::size_t i = 0; i < dims.size; i += 4) {
    shape.push_back(static_cast<std::int32_t>(r.u32(dims.payload + i)));
  }

  // Name.
  Tag name = read_tag(r, dims.next);
  if (name.type != miINT8 && name.type != miUINT8) corrupt(r.base + dims.next, "array name");
  if (name.payload + name.size > end) corrupt(r.base + dims.next, "array name");
  out.array.name.assign(reinterpret_cast<const char*>(r.data.data() + name.payload), name.size);

  if (complex) {
    out.unsupported_code = miMATRIX;
    return out;
  }
  if (mx_class != mxDOUBLE_CLASS && mx_class != mxSINGLE_CLASS) {
    out.unsupported_code = mx_class;
    return out;
  }
  if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0) {
    out.unsupported_code = miMATRIX;
    return out;
  }
  out.array.single = mx_class == mxSINGLE_CLASS;
  out.array.rows = static_cast<std::size_t>(shape[0]);
  out.array.cols = static_cast<std::size_t>(shape[1]);

  Tag real = read_tag(r, name.next);
  const std::size_t width = type_width(real.type);
  if (width == 0) {
    throw Error(ErrorCode::UnsupportedElement, "unsupported numeric storage type",
                {{"type", std::to_string(real.type)}, {"offset", std::to_string(r.base + name.next)}});
  }
  if (real.payload + real.size > end) corrupt(r.base + name.next, "real part exceeds matrix");
  const std::size_t count = out.array.rows * out.array.cols;
  if (real.size != count * width) corrupt(r.base + name.next, "real part size does not match dimensions");
  out.array.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.array.data[i] = r.number(real.payload + i * width, real.type);
  }
  out.supported = true;
  return out;
}

struct Scan {
  MatContents contents;
  std::vector<std::pair<std::string, std::uint32_t>> unsupported;  // name, code
};

void scan_elements(const Reader& r, std::size_t start, Scan& scan) {
  std::size_t at = start;
  while (at < r.data.size()) {
    // Trailing zero padding at the end of a stream is tolerated.
    if (r.data.size() - at < 8) {
      if (std::all_of(r.data.begin() + static_cast<std::ptrdiff_t>(at), r.data.end(),
                      [](std::uint8_t b) { return b == 0; })) {
        break;
      }
      corrupt(r.base + at, "truncated tag");
    }
    const Tag t = read_tag(r, at);
    if (t.type == miCOMPRESSED) {
      auto inflated = inflate_all(r.data.subspan(t.payload, t.size), r.base + at);
      Reader inner{inflated, r.big, r.base + t.payload};
      scan_elements(inner, 0, scan);
    } else if (t.type == miMATRIX) {
      if (t.size == 0) {
        at = t.next;
        continue;
      }
      auto pm = parse_matrix(r, t);
      if (pm.supported) {
        scan.contents.arrays.push_back(std::move(pm.array));
      } else {
        scan.contents.skipped.push_back(pm.array.name);
        scan.unsupported.emplace_back(pm.array.name, pm.unsupported_code);
      }
    } else {
      throw Error(ErrorCode::UnsupportedElement, "unsupported top-level element",
                  {{"type", std::to_string(t.type)}, {"offset", std::to_string(r.base + at)}});
    }
    at = t.next;
  }
}

Scan scan_file(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw Error(ErrorCode::BadMagic, "file is shorter than a MAT-v5 header",
                {{"bytes", std::to_string(bytes.size())}});
  }
  if (bytes[0] == 0 && bytes[1] == 0 && bytes[2] == 0 && bytes[3] == 0) {
    throw Error(ErrorCode::BadMagic, "leading zero bytes mark a MAT-v4 file, not v5");
  }
  bool big = false;
  if (bytes[126] == 'I' && bytes[127] == 'M') {
    big = false;
  } else if (bytes[126] == 'M' && bytes[127] == 'I') {
    big = true;
  } else {
    throw Error(ErrorCode::BadMagic, "missing MAT-v5 endian indicator");
  }
  Reader r{bytes, big, 0};
  const auto version = r.uint(124, 2);
  if (version != 0x0100) {
    throw Error(ErrorCode::BadMagic, "unsupported MAT-v5 version",
                {{"version", std::to_string(version)}});
  }
  Scan scan;
  scan.contents.big_endian = big;
  scan_elements(r, kHeaderBytes, scan);
  return scan;
}

}  // namespace

MatContents parse_mat_v5(std::span<const std::uint8_t> bytes) {
  return scan_file(bytes).contents;
}

MatArray find_mat_variable(std::span<const std::uint8_t> bytes, const std::string& name) {
  auto scan = scan_file(bytes);
  for (auto& a : scan.contents.arrays) {
    if (a.name == name) return std::move(a);
  }
  for (const auto& [n, code] : scan.unsupported) {
    if (n == name) {
      throw Error(ErrorCode::UnsupportedElement,
                  "variable '" + name + "' is not a real 2-D double/single matrix",
                  {{"variable", name}, {"type", std::to_string(code)}});
    }
  }
  std::string found;
  for (const auto& a : scan.contents.arrays) found += (found.empty() ? "" : ",") + a.name;
  for (const auto& n : scan.contents.skipped) found += (found.empty() ? "" : ",") + n;
  throw Error(ErrorCode::VariableNotFound,
              "variable '" + name + "' not found; file contains [" + found + "]",
              {{"variable", name}, {"found", found}});
}

Signal load_mat_v5(const std::filesystem::path& path, const std::string& variable,
                   double sample_rate_hz, const SignalMeta& meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open MAT file", {{"path", path.string()}});
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  MatArray a;
  try {
    a = find_mat_variable(bytes, variable);
  } catch (Error& e) {
    auto fields = e.fields();
    fields["path"] = path.string();
    throw Error(e.code(), e.what(), fields);
  }
  Signal s;
  s.id = meta.id;
  s.samples = std::move(a.data);
  s.sample_rate_hz = sample_rate_hz;
  s.dataset_id = meta.dataset_id;
  s.condition_id = meta.condition_id;
  s.label = meta.label;
  s.validate();
  return s;
}

}  // namespace bdx::ingest
