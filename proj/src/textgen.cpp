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

#include "bdx/textgen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bdx/error.hpp"

namespace bdx::text {

using ojson = nlohmann::ordered_json;

namespace {

std::size_t count_occurrences(const std::string& s, std::string_view needle) {
  std::size_t count = 0;
  for (std::size_t pos = s.find(needle); pos != std::string::npos;
       pos = s.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

}  // namespace

void PromptTemplate::validate() const {
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    if (count_occurrences(phrases[i], kValuePlaceholder) != 1) {
      throw Error(ErrorCode::TemplateIncomplete,
                  "phrase for p" + std::to_string(i + 1) +
                      " must contain {value} exactly once",
                  {{"feature", "p" + std::to_string(i + 1)}});
    }
  }
  for (FaultLabel l : kAllFaultLabels) {
    auto it = outputs.find(l);
    if (it == outputs.end() || it->second.empty()) {
      throw Error(ErrorCode::TemplateIncomplete,
                  "no output phrase for label " + std::string(to_string(l)),
                  {{"label", std::string(to_string(l))}});
    }
  }
  if (significant_digits < 1 || significant_digits > 17) {
    throw Error(ErrorCode::TemplateIncomplete,
                "significant_digits must be in [1, 17]");
  }
}

PromptTemplate default_template() {
  PromptTemplate t;
  t.instruction =
      "You are a bearing fault diagnosis expert. Based on the following "
      "features, you need to conduct fault diagnosis:";
  t.phrases = {
      "The time-domain mean of the vibration signal is {value}, ",
      "the standard deviation is {value}, ",
      "the square root amplitude is {value}, ",
      "the absolute mean value is {value}, ",
      "the peak value is {value}, ",
      "the skewness is {value}, ",
      "the kurtosis is {value}, ",
      "the variance is {value}, ",
      "the kurtosis index is {value}, ",
      "the peak index is {value}, ",
      "the waveform index is {value}, ",
      "the pulse index is {value}. ",
      "The frequency-domain mean is {value}, ",
      "the frequency variance is {value}, ",
      "the frequency skewness is {value}, ",
      "the frequency kurtosis is {value}, ",
      "the gravity frequency is {value}, ",
      "the frequency standard deviation is {value}, ",
      "the frequency root mean square is {value}, ",
      "the average frequency is {value}, ",
      "the regularity degree is {value}, ",
      "the variation parameter is {value}, ",
      "the eighth-order moment is {value}, ",
      "the sixteenth-order moment is {value}.",
  };
  t.outputs = {
      {FaultLabel::Normal, "The diagnosis result is normal."},
      {FaultLabel::InnerRace, "The diagnosis result is an inner ring fault."},
      {FaultLabel::OuterRace, "The diagnosis result is an outer ring fault."},
      {FaultLabel::RollingElement,
       "The diagnosis result is a rolling element fault."},
  };
  return t;
}

PromptTemplate load_template(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open template", {{"path", path.string()}});
  }
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::TemplateIncomplete,
                std::string("template is not valid JSON: ") + e.what(),
                {{"path", path.string()}});
  }
  PromptTemplate t = default_template();
  try {
    if (j.contains("instruction")) t.instruction = j.at("instruction").get<std::string>();
    if (j.contains("phrases")) {
      const auto& ph = j.at("phrases");
      if (!ph.is_array() || ph.size() != kNumFeatures) {
        throw Error(ErrorCode::TemplateIncomplete,
                    "template phrases must be an array of 24 strings",
                    {{"path", path.string()}});
      }
      for (std::size_t i = 0; i < kNumFeatures; ++i) {
        t.phrases[i] = ph[i].get<std::string>();
      }
    }
    if (j.contains("outputs")) {
      t.outputs.clear();
      for (const auto& [key, val] : j.at("outputs").items()) {
        auto label = parse_fault_label(key);
        if (!label) {
          throw Error(ErrorCode::TemplateIncomplete, "unknown label '" + key + "'",
                      {{"path", path.string()}});
        }
        t.outputs[*label] = val.get<std::string>();
      }
    }
    if (j.contains("undefined")) t.undefined_text = j.at("undefined").get<std::string>();
    if (j.contains("significant_digits")) {
      t.significant_digits = j.at("significant_digits").get<int>();
    }
  } catch (const ojson::exception& e) {
    throw Error(ErrorCode::TemplateIncomplete,
                std::string("bad template field: ") + e.what(),
                {{"path", path.string()}});
  }
  t.validate();
  return t;
}

std::string format_feature_value(double v, int digits) {
  if (v == 0.0) return "0";
  char buf[64];
  const double a = std::abs(v);
  if (a >= 1e-3 && a < 1e6) {
    const int exponent = static_cast<int>(std::floor(std::log10(a)));
    const int decimals = std::max(0, digits - 1 - exponent);
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  } else {
    std::snprintf(buf, sizeof buf, "%.*e", digits - 1, v);
  }
  return buf;
}

FinetuneRecord render_record(const FeatureVector& fv, FaultLabel label,
                             const PromptTemplate& tpl) {
  tpl.validate();
  FinetuneRecord rec;
  rec.instruction = tpl.instruction;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const std::string value = fv.undefined[i]
                                  ? tpl.undefined_text
                                  : format_feature_value(fv.values[i],
                                                         tpl.significant_digits);
    std::string phrase = tpl.phrases[i];
    phrase.replace(phrase.find(kValuePlaceholder), kValuePlaceholder.size(), value);
    rec.input += phrase;
  }
  rec.output = tpl.outputs.at(label);
  return rec;
}

std::string to_json_line(const FinetuneRecord& rec) {
  ojson j;
  j["instruction"] = rec.instruction;
  j["input"] = rec.input;
  j["output"] = rec.output;
  j["history"] = ojson::array();
  for (const auto& [q, a] : rec.history) j["history"].push_back({q, a});
  return j.dump(-1, ' ', false, ojson::error_handler_t::strict);
}

FinetuneRecord from_json_line(const std::string& line, std::size_t line_no) {
  const std::map<std::string, std::string> where = {
      {"line", std::to_string(line_no)}};
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const ojson::exception& e) {
    throw Error(ErrorCode::MalformedLine,
                "line " + std::to_string(line_no) + " is not a JSON object", where);
  }
  if (!j.is_object()) {
    throw Error(ErrorCode::MalformedLine,
                "line " + std::to_string(line_no) + " is not a JSON object", where);
  }
  static constexpr std::array<std::string_view, 4> kKeys = {
      "instruction", "input", "output", "history"};
  for (auto key : kKeys) {
    if (!j.contains(key)) {
      auto fields = where;
      fields["key"] = std::string(key);
      throw Error(ErrorCode::MissingKey,
                  "line " + std::to_string(line_no) + " lacks key '" +
                      std::string(key) + "'",
                  fields);
    }
  }
  if (j.size() != kKeys.size()) {
    throw Error(ErrorCode::MalformedLine,
                "line " + std::to_string(line_no) + " has unexpected keys", where);
  }
  FinetuneRecord rec;
  try {
    rec.instruction = j.at("instruction").get<std::string>();
    rec.input = j.at("input").get<std::string>();
    rec.output = j.at("output").get<std::string>();
    for (const auto& pair : j.at("history")) {
      if (!pair.is_array() || pair.size() != 2) {
        throw Error(ErrorCode::MalformedLine, "history entries must be pairs", where);
      }
      rec.history.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
    }
  } catch (const ojson::exception& e) {
    throw Error(ErrorCode::MalformedLine,
                "line " + std::to_string(line_no) + ": " + e.what(), where);
  }
  return rec;
}

std::size_t emit_corpus(std::span<const FinetuneRecord> records,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::Io, "cannot open corpus for writing",
                {{"path", path.string()}});
  }
  for (const auto& rec : records) out << to_json_line(rec) << '\n';
  out.flush();
  if (!out) {
    throw Error(ErrorCode::Io, "write failed", {{"path", path.string()}});
  }
  return records.size();
}

std::vector<FinetuneRecord> parse_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open corpus", {{"path", path.string()}});
  }
  std::vector<FinetuneRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.push_back(from_json_line(line, line_no));
  }
  return out;
}

}  // namespace bdx::text
