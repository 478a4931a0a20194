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

#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bdx {

// RFC 4180: fields containing a comma, quote, CR or LF are quoted and inner
// quotes doubled. Rows end with "\n".
std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& os, std::span<const std::string> fields);

// Splits one logical record. Quoted fields may span lines, so this reads from
// the stream. Returns false at end of input.
bool read_csv_record(std::istream& is, std::vector<std::string>& fields);

// Shortest round-trippable decimal form ("%.17g").
std::string format_double(double v);

}  // namespace bdx
