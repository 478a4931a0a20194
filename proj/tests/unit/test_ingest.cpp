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

#include <doctest.h>

#include <bit>
#include <cstring>
#include <fstream>

#include "bdx/error.hpp"
#include "bdx/ingest.hpp"
#include "oracles.hpp"

using namespace bdx;
using namespace bdx::ingest;

namespace {

const std::filesystem::path kData = BDX_TEST_DATA_DIR;

template <typename F>
Error error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("no error thrown");
  return Error(ErrorCode::InvalidInput, "unreachable");
}

SignalMeta meta() { return {"sig", "CWRU", "0", FaultLabel::InnerRace}; }

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

// Minimal MAT-v5 writer for hand-built fixtures.
struct MatBuilder {
  bool big = false;
  std::vector<std::uint8_t> out;

  void put(std::uint64_t v, int width, std::vector<std::uint8_t>& dst) const {
    for (int b = 0; b < width; ++b) {
      const int shift = 8 * (big ? width - 1 - b : b);
      dst.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }
  static void pad(std::vector<std::uint8_t>& dst) {
    while (dst.size() % 8) dst.push_back(0);
  }

  explicit MatBuilder(bool big_endian) : big(big_endian) {
    std::string text = "MATLAB 5.0 MAT-file, hand built";
    text.resize(116, ' ');
    out.assign(text.begin(), text.end());
    out.resize(124, 0);
    put(0x0100, 2, out);
    if (big) {
      out.push_back('M');
      out.push_back('I');
    } else {
      out.push_back('I');
      out.push_back('M');
    }
  }

  // Real double matrix; the name goes into a small data element when it fits.
  void matrix(const std::string& name, std::uint32_t rows, std::uint32_t cols,
              const std::vector<double>& col_major, std::uint32_t mx_class = 6) {
    std::vector<std::uint8_t> body;
    put(6, 4, body);  // miUINT32 flags
    put(8, 4, body);
    put(mx_class, 4, body);
    put(0, 4, body);
    put(5, 4, body);  // miINT32 dims
    put(8, 4, body);
    put(rows, 4, body);
    put(cols, 4, body);
    if (name.size() <= 4) {
      // small element: the first word carries size in its upper half
      put((static_cast<std::uint64_t>(name.size()) << 16) | 1, 4, body);
      for (std::size_t i = 0; i < 4; ++i) body.push_back(i < name.size() ? name[i] : 0);
    } else {
      put(1, 4, body);
      put(name.size(), 4, body);
      body.insert(body.end(), name.begin(), name.end());
      pad(body);
    }
    put(9, 4, body);  // miDOUBLE
    put(col_major.size() * 8, 4, body);
    for (double v : col_major) put(std::bit_cast<std::uint64_t>(v), 8, body);
    pad(body);
    put(14, 4, out);
    put(body.size(), 4, out);
    out.insert(out.end(), body.begin(), body.end());
  }
};

}  // namespace

TEST_CASE("CSV by header name and by index") {
  oracle::TempDir dir("csv");
  write_text(dir / "a.csv", "time,de,fe\n0,1.5,9\n1,-2,8\n\n2,3e-3,7\n");
  const auto s = load_csv(dir / "a.csv", "de", 12000.0, meta());
  CHECK(s.samples == std::vector<double>{1.5, -2.0, 3e-3});
  CHECK(s.sample_rate_hz == 12000.0);
  CHECK(s.label == FaultLabel::InnerRace);
  CHECK(s.id == "sig");
  CHECK(load_csv(dir / "a.csv", "2", 1.0, meta()).samples == std::vector<double>{9, 8, 7});

  write_text(dir / "b.csv", "0.25,4\n0.5,5\n");
  CHECK(load_csv(dir / "b.csv", "", 1.0, meta()).samples == std::vector<double>{0.25, 0.5});
  CHECK(load_csv(dir / "b.csv", "1", 1.0, meta()).samples == std::vector<double>{4, 5});
}

TEST_CASE("CSV errors name the row or column") {
  oracle::TempDir dir("csv_err");
  write_text(dir / "a.csv", "x\n1\n2\nabc\n4\n");
  auto e = error_of([&] { load_csv(dir / "a.csv", "x", 1.0, meta()); });
  CHECK(e.code() == ErrorCode::NonNumericCell);
  CHECK(e.field("row") == "4");
  e = error_of([&] { load_csv(dir / "a.csv", "y", 1.0, meta()); });
  CHECK(e.code() == ErrorCode::MissingColumn);
  CHECK(e.field("column") == "y");
  write_text(dir / "b.csv", "1,2\n3,4\n");
  CHECK(error_of([&] { load_csv(dir / "b.csv", "5", 1.0, meta()); }).code() == ErrorCode::MissingColumn);
  write_text(dir / "c.csv", "x\n");
  CHECK(error_of([&] { load_csv(dir / "c.csv", "x", 1.0, meta()); }).code() == ErrorCode::InvalidInput);
  CHECK(error_of([&] { load_csv(dir / "missing.csv", "x", 1.0, meta()); }).code() == ErrorCode::Io);
}

TEST_CASE("raw round trips in both byte orders and widths") {
  oracle::TempDir dir("raw");
  const std::vector<double> x{0.5, -1.25, 3.0e10, 1.0 / 3.0};
  for (auto order : {ByteOrder::Little, ByteOrder::Big}) {
    write_raw(dir / "a.f64", x, ElementType::F64, order);
    CHECK(load_raw(dir / "a.f64", ElementType::F64, order, 1.0, meta()).samples == x);
    write_raw(dir / "a.f32", x, ElementType::F32, order);
    const auto s = load_raw(dir / "a.f32", ElementType::F32, order, 1.0, meta()).samples;
    REQUIRE(s.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(s[i] == static_cast<double>(static_cast<float>(x[i])));
  }
  // explicit byte layout of a big-endian double
  write_raw(dir / "one.f64", std::vector<double>{1.0}, ElementType::F64, ByteOrder::Big);
  const auto b = oracle::read_bytes(dir / "one.f64");
  CHECK(b == std::vector<std::uint8_t>{0x3F, 0xF0, 0, 0, 0, 0, 0, 0});
}

TEST_CASE("raw size mismatch") {
  oracle::TempDir dir("raw_err");
  oracle::write_bytes(dir / "a.f64", std::vector<std::uint8_t>(12, 0));
  const auto e = error_of([&] { load_raw(dir / "a.f64", ElementType::F64, ByteOrder::Little, 1.0, meta()); });
  CHECK(e.code() == ErrorCode::SizeMismatch);
  CHECK(e.field("bytes") == "12");
  CHECK_NOTHROW(load_raw(dir / "a.f64", ElementType::F32, ByteOrder::Little, 1.0, meta()));
}

TEST_CASE("MAT fixture written by scipy") {
  const auto s = load_mat_v5(kData / "cwru_small.mat", "X098_DE_time", 12000.0, meta());
  CHECK(s.samples == std::vector<double>{1, 2, 3});
  const auto fe = load_mat_v5(kData / "cwru_small.mat", "X098_FE_time", 12000.0, meta());
  CHECK(fe.samples == std::vector<double>{0.5, -0.25, 0.125, 4});
  const auto bytes = oracle::read_bytes(kData / "cwru_small.mat");
  const auto c = parse_mat_v5(bytes);
  CHECK_FALSE(c.big_endian);
  std::vector<std::string> names;
  for (const auto& a : c.arrays) names.push_back(a.name);
  CHECK(names == std::vector<std::string>{"X098_DE_time", "X098_FE_time", "X098RPM"});
  CHECK(c.skipped == std::vector<std::string>{"note"});
  CHECK(find_mat_variable(bytes, "X098RPM").data == std::vector<double>{1797});
  CHECK(find_mat_variable(bytes, "X098_DE_time").rows == 3);
  CHECK(find_mat_variable(bytes, "X098_DE_time").cols == 1);
}

TEST_CASE("compressed MAT matches the plain one") {
  const auto plain = parse_mat_v5(oracle::read_bytes(kData / "cwru_small.mat"));
  const auto z = parse_mat_v5(oracle::read_bytes(kData / "cwru_small_z.mat"));
  REQUIRE(plain.arrays.size() == z.arrays.size());
  for (std::size_t i = 0; i < plain.arrays.size(); ++i) {
    CHECK(plain.arrays[i].name == z.arrays[i].name);
    CHECK(plain.arrays[i].data == z.arrays[i].data);
  }
}

TEST_CASE("single precision rows and skipped integer arrays") {
  const auto bytes = oracle::read_bytes(kData / "single_row.mat");
  const auto a = find_mat_variable(bytes, "sig");
  CHECK(a.single);
  CHECK(a.rows == 1);
  CHECK(a.cols == 4);
  CHECK(a.data == std::vector<double>{0.5, -1.5, 2.25, 8});
  const auto e = error_of([&] { find_mat_variable(bytes, "counts"); });
  CHECK(e.code() == ErrorCode::UnsupportedElement);
  CHECK(e.field("variable") == "counts");
}

TEST_CASE("complex data is unsupported; absent names list the contents") {
  const auto bytes = oracle::read_bytes(kData / "complex.mat");
  CHECK(error_of([&] { find_mat_variable(bytes, "z"); }).code() == ErrorCode::UnsupportedElement);
  CHECK(find_mat_variable(bytes, "x").data == std::vector<double>{7});
  const auto e = error_of([&] { load_mat_v5(kData / "complex.mat", "nope", 1.0, meta()); });
  CHECK(e.code() == ErrorCode::VariableNotFound);
  CHECK(e.field("found") == "x,z");
  CHECK(e.field("path").find("complex.mat") != std::string::npos);
}

TEST_CASE("MAT header checks") {
  std::vector<std::uint8_t> shortfile(64, 'a');
  CHECK(error_of([&] { parse_mat_v5(shortfile); }).code() == ErrorCode::BadMagic);
  MatBuilder mb(false);
  auto v4 = mb.out;
  v4[0] = v4[1] = v4[2] = v4[3] = 0;
  CHECK(error_of([&] { parse_mat_v5(v4); }).code() == ErrorCode::BadMagic);
  auto noendian = mb.out;
  noendian[126] = 'X';
  CHECK(error_of([&] { parse_mat_v5(noendian); }).code() == ErrorCode::BadMagic);
  CHECK(parse_mat_v5(mb.out).arrays.empty());
}

TEST_CASE("hand-built MAT in both byte orders, small and long names") {
  for (bool big : {false, true}) {
    MatBuilder mb(big);
    mb.matrix("ab", 2, 2, {1.0, 2.0, 3.0, -4.5});
    mb.matrix("long_variable", 1, 3, {0.125, 0.25, 0.5});
    const auto c = parse_mat_v5(mb.out);
    CHECK(c.big_endian == big);
    REQUIRE(c.arrays.size() == 2);
    CHECK(c.arrays[0].name == "ab");
    CHECK(c.arrays[0].data == std::vector<double>{1.0, 2.0, 3.0, -4.5});
    CHECK(c.arrays[1].name == "long_variable");
    CHECK(c.arrays[1].data == std::vector<double>{0.125, 0.25, 0.5});
  }
}

TEST_CASE("malformed MAT elements") {
  MatBuilder mb(false);
  mb.matrix("a", 1, 2, {1.0, 2.0});
  // element size pointing past the end
  auto big = mb.out;
  big[132] = 0xFF;
  CHECK(error_of([&] { parse_mat_v5(big); }).code() == ErrorCode::CorruptElement);
  // dimensions that disagree with the payload
  auto dims = mb.out;
  dims[128 + 8 + 16 + 8] = 3;
  CHECK(error_of([&] { parse_mat_v5(dims); }).code() == ErrorCode::CorruptElement);
  // unknown top-level element
  auto top = mb.out;
  top[128] = 2;
  CHECK(error_of([&] { parse_mat_v5(top); }).code() == ErrorCode::UnsupportedElement);
  // truncation is reported with an offset
  const std::vector<std::uint8_t> cut(mb.out.begin(), mb.out.end() - 9);
  const auto e = error_of([&] { parse_mat_v5(cut); });
  CHECK(e.code() == ErrorCode::CorruptElement);
  CHECK_FALSE(e.field("offset").empty());
}

TEST_CASE("default label spaces") {
  using L = FaultLabel;
  CHECK(default_label_space("CWRU") == std::vector<L>{L::RollingElement, L::InnerRace, L::Normal, L::OuterRace});
  CHECK(default_label_space("jnu").size() == 4);
  CHECK(default_label_space("PU") == std::vector<L>{L::InnerRace, L::Normal, L::OuterRace});
  CHECK(default_label_space("MFPT") == default_label_space("PU"));
}

TEST_CASE("manifest round trip and loading") {
  oracle::TempDir dir("manifest");
  std::filesystem::create_directories(dir / "sub");
  write_raw(dir / "sub" / "x.f64", std::vector<double>{1, 2, 3}, ElementType::F64, ByteOrder::Big);
  write_text(dir / "y.csv", "amp\n4\n5\n");
  DatasetManifest m;
  m.dataset_id = "PU";
  m.label_space = default_label_space("PU");
  ManifestEntry a;
  a.path = dir / "sub" / "x.f64";
  a.format = FileFormat::Raw;
  a.sample_rate_hz = 64000;
  a.condition_id = "2";
  a.label = FaultLabel::OuterRace;
  a.byte_order = ByteOrder::Big;
  ManifestEntry b;
  b.path = dir / "y.csv";
  b.variable = "amp";
  b.sample_rate_hz = 64000;
  b.label = FaultLabel::Normal;
  m.entries = {a, b};
  write_manifest(m, dir / "manifest.json");
  const auto text = oracle::read_text(dir / "manifest.json");
  CHECK(text.find("\"sub/x.f64\"") != std::string::npos);
  const auto back = read_manifest(dir / "manifest.json");
  CHECK(back.dataset_id == "PU");
  REQUIRE(back.entries.size() == 2);
  CHECK(back.entries[0].byte_order == ByteOrder::Big);
  CHECK(back.entries[1].format == FileFormat::Csv);
  const auto ds = load_dataset(back);
  REQUIRE(ds.signals.size() == 2);
  CHECK(ds.signals[0].samples == std::vector<double>{1, 2, 3});
  CHECK(ds.signals[0].condition_id == "2");
  CHECK(ds.signals[1].samples == std::vector<double>{4, 5});
  CHECK(ds.signals[1].label == FaultLabel::Normal);
}

TEST_CASE("manifest errors carry the entry index") {
  oracle::TempDir dir("manifest_err");
  auto manifest = [&](const std::string& entries, const std::string& extra = "") {
    write_text(dir / "m.json", R"({"dataset_id":"PU")" + extra + R"(,"entries":[)" + entries + "]}");
    return dir / "m.json";
  };
  const std::string ok = R"({"path":"a.csv","sample_rate_hz":1,"label":"normal"})";

  auto e = error_of([&] { read_manifest(manifest(ok + R"(,{"path":"b.csv","sample_rate_hz":1,"label":"ball"})")); });
  CHECK(e.code() == ErrorCode::ManifestLabelError);
  CHECK(e.field("entry") == "1");

  e = error_of([&] { read_manifest(manifest(R"({"path":"b.csv","sample_rate_hz":1,"label":"cage"})")); });
  CHECK(e.code() == ErrorCode::ManifestLabelError);
  CHECK(e.field("entry") == "0");

  e = error_of([&] { read_manifest(manifest(ok + "," + ok)); });
  CHECK(e.code() == ErrorCode::ManifestError);
  CHECK(e.field("entry") == "1");

  e = error_of([&] { read_manifest(manifest(R"({"path":"a.xyz","sample_rate_hz":1,"label":"normal"})")); });
  CHECK(e.code() == ErrorCode::ManifestError);
  CHECK(e.field("entry") == "0");

  e = error_of([&] { read_manifest(manifest(R"({"path":"a.csv","sample_rate_hz":0,"label":"normal"})")); });
  CHECK(e.field("entry") == "0");

  e = error_of([&] { read_manifest(manifest(R"({"path":"a.csv","label":"normal"})")); });
  CHECK(e.code() == ErrorCode::ManifestError);

  // explicit label space overrides the default
  CHECK(read_manifest(manifest(R"({"path":"a.csv","sample_rate_hz":1,"label":"ball"})",
                               R"(,"labels":["ball","normal"])"))
            .label_space.size() == 2);

  write_text(dir / "bad.json", "{not json");
  CHECK(error_of([&] { read_manifest(dir / "bad.json"); }).code() == ErrorCode::ManifestError);

  // a missing file is reported when loading, naming the entry
  write_text(dir / "a.csv", "1\n2\n");
  const auto m = read_manifest(manifest(ok + R"(,{"path":"gone.csv","sample_rate_hz":1,"label":"inner"})"));
  e = error_of([&] { load_dataset(m); });
  CHECK(e.code() == ErrorCode::ManifestError);
  CHECK(e.field("entry") == "1");
  CHECK(std::string(e.what()).find("gone.csv") != std::string::npos);
}
