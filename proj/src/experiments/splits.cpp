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

#include "bdx/experiments/splits.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <string_view>

#include "bdx/error.hpp"

namespace bdx::experiments {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

using ByClass = std::array<std::vector<std::size_t>, kNumFaultLabels>;

ByClass group_by_class(std::span<const Segment> segs, std::span<const std::size_t> pool) {
  ByClass out;
  for (std::size_t i : pool) {
    if (i >= segs.size()) {
      throw Error(ErrorCode::InvalidInput, "segment index out of range",
                  {{"index", std::to_string(i)}});
    }
    out[static_cast<std::size_t>(segs[i].label)].push_back(i);
  }
  return out;
}

void sort_by_origin(std::span<const Segment> segs, std::vector<std::size_t>& idx) {
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto& oa = segs[a].origin;
    const auto& ob = segs[b].origin;
    if (oa.signal_id != ob.signal_id) return oa.signal_id < ob.signal_id;
    if (oa.start != ob.start) return oa.start < ob.start;
    return a < b;
  });
}

// Keeps n members of idx chosen uniformly by a seeded shuffle.
void downsample(std::vector<std::size_t>& idx, std::size_t n, std::uint64_t seed) {
  if (idx.size() <= n) return;
  std::sort(idx.begin(), idx.end());
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
}

std::vector<std::size_t> flatten(const ByClass& by) {
  std::vector<std::size_t> out;
  for (const auto& v : by) out.insert(out.end(), v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t min_present(const ByClass& by) {
  std::size_t n = 0;
  bool any = false;
  for (const auto& v : by) {
    if (v.empty()) continue;
    n = any ? std::min(n, v.size()) : v.size();
    any = true;
  }
  return n;
}

void balance(ByClass& by, std::uint64_t seed) {
  const std::size_t n = min_present(by);
  for (std::size_t c = 0; c < by.size(); ++c) {
    if (!by[c].empty()) downsample(by[c], n, mix(seed, c + 1));
  }
}

// Windows of one split, per signal, sorted by start.
class WindowIndex {
 public:
  void add(const Segment& s) {
    auto& v = by_signal_[s.origin.signal_id];
    v.emplace_back(s.origin.start, s.origin.start + s.samples.size());
    max_len_ = std::max(max_len_, s.samples.size());
  }
  void finish() {
    for (auto& [id, v] : by_signal_) std::sort(v.begin(), v.end());
  }
  bool overlaps(const Segment& s) const {
    auto it = by_signal_.find(s.origin.signal_id);
    if (it == by_signal_.end()) return false;
    const std::size_t a = s.origin.start;
    const std::size_t b = a + s.samples.size();
    const std::size_t lo = a >= max_len_ ? a - max_len_ : 0;
    const auto& v = it->second;
    auto j = std::lower_bound(v.begin(), v.end(), std::make_pair(lo, std::size_t{0}));
    for (; j != v.end() && j->first < b; ++j) {
      if (j->second > a) return true;
    }
    return false;
  }

 private:
  std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> by_signal_;
  std::size_t max_len_ = 0;
};

WindowIndex index_of(std::span<const Segment> segs, std::span<const std::size_t> idx) {
  WindowIndex w;
  for (std::size_t i : idx) w.add(segs[i]);
  w.finish();
  return w;
}

void purge(std::span<const Segment> segs, std::vector<std::size_t>& victims,
           const WindowIndex& keep) {
  std::erase_if(victims, [&](std::size_t i) { return keep.overlaps(segs[i]); });
}

}  // namespace

std::vector<std::size_t> balance_classes(std::span<const Segment> segments,
                                         std::span<const std::size_t> pool,
                                         std::uint64_t seed) {
  auto by = group_by_class(segments, pool);
  balance(by, seed);
  return flatten(by);
}

Splits build_splits(std::span<const Segment> segments, std::span<const std::size_t> pool,
                    const SplitSpec& spec) {
  enum Part : int { kTrain, kVal, kTest };
  const std::size_t blocks = spec.mode == SplitMode::TrainTest82 ? 5
                             : spec.mode == SplitMode::TrainVal81 ? 9
                                                                  : 10;

  auto by = group_by_class(segments, pool);
  for (std::size_t c = 0; c < by.size(); ++c) {
    if (!by[c].empty() && by[c].size() < blocks) {
      throw Error(ErrorCode::ClassTooSmall,
                  "class '" + std::string(to_string(kAllFaultLabels[c])) + "' has " +
                      std::to_string(by[c].size()) + " segments, needs " +
                      std::to_string(blocks),
                  {{"label", std::string(to_string(kAllFaultLabels[c]))},
                   {"count", std::to_string(by[c].size())},
                   {"required", std::to_string(blocks)}});
    }
  }
  if (spec.balance) balance(by, mix(spec.seed, 0xBA1A));

  std::array<ByClass, 3> parts;
  for (std::size_t c = 0; c < by.size(); ++c) {
    auto& members = by[c];
    if (members.empty()) continue;
    sort_by_origin(segments, members);
    // Held-out blocks sit at the two ends of the sequence so each one
    // borders training windows on one side only; the seed picks the ends.
    std::vector<int> assign(blocks, kTrain);
    std::mt19937_64 rng(mix(spec.seed, 0x5EED00 + c));
    const bool flip = (rng() & 1) != 0;
    switch (spec.mode) {
      case SplitMode::TrainValTest811:
        assign.front() = flip ? kVal : kTest;
        assign.back() = flip ? kTest : kVal;
        break;
      case SplitMode::TrainTest82:
        (flip ? assign.front() : assign.back()) = kTest;
        break;
      case SplitMode::TrainVal81:
        (flip ? assign.front() : assign.back()) = kVal;
        break;
    }
    const std::size_t n = members.size();
    for (std::size_t b = 0; b < blocks; ++b) {
      const std::size_t lo = b * n / blocks;
      const std::size_t hi = (b + 1) * n / blocks;
      auto& dst = parts[static_cast<std::size_t>(assign[b])][c];
      dst.insert(dst.end(), members.begin() + static_cast<std::ptrdiff_t>(lo),
                 members.begin() + static_cast<std::ptrdiff_t>(hi));
    }
  }

  Splits out;
  out.test = flatten(parts[kTest]);
  out.val = flatten(parts[kVal]);
  const auto test_idx = index_of(segments, out.test);
  for (auto& v : parts[kVal]) purge(segments, v, test_idx);
  out.val = flatten(parts[kVal]);
  const auto val_idx = index_of(segments, out.val);
  for (auto& v : parts[kTrain]) {
    purge(segments, v, test_idx);
    purge(segments, v, val_idx);
  }
  if (spec.balance) {
    for (std::size_t p = 0; p < parts.size(); ++p) balance(parts[p], mix(spec.seed, 0xB0 + p));
  }
  out.train = flatten(parts[kTrain]);
  out.val = flatten(parts[kVal]);
  out.test = flatten(parts[kTest]);
  return out;
}

Splits build_splits(std::span<const Segment> segments, const SplitSpec& spec) {
  std::vector<std::size_t> all(segments.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return build_splits(segments, all, spec);
}

std::size_t count_overlaps(std::span<const Segment> segments,
                           std::span<const std::vector<std::size_t>> groups) {
  struct Item {
    const std::string* signal;
    std::size_t start, end, group;
  };
  std::vector<Item> items;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t i : groups[g]) {
      const auto& s = segments[i];
      items.push_back({&s.origin.signal_id, s.origin.start, s.origin.start + s.samples.size(), g});
    }
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (*a.signal != *b.signal) return *a.signal < *b.signal;
    return a.start < b.start;
  });
  std::size_t hits = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      if (*items[j].signal != *items[i].signal || items[j].start >= items[i].end) break;
      hits += items[j].group != items[i].group;
    }
  }
  return hits;
}

std::size_t audit_leakage(std::span<const Segment> segments, const Splits& splits) {
  const std::vector<std::size_t> groups[] = {splits.train, splits.val, splits.test};
  return count_overlaps(segments, groups);
}

std::vector<std::size_t> limited_subsample(std::span<const Segment> segments,
                                           std::span<const std::size_t> pool,
                                           double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw Error(ErrorCode::InvalidConfig, "limited fraction must lie in (0, 1]",
                {{"fraction", std::to_string(fraction)}});
  }
  auto by = group_by_class(segments, pool);
  const std::size_t n = pool.size();
  const auto total = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));

  std::array<std::size_t, kNumFaultLabels> quota{};
  std::array<double, kNumFaultLabels> rem{};
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < by.size(); ++c) {
    const double exact = static_cast<double>(total) * static_cast<double>(by[c].size()) /
                         static_cast<double>(std::max<std::size_t>(n, 1));
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    rem[c] = exact - static_cast<double>(quota[c]);
    assigned += quota[c];
  }
  std::array<std::size_t, kNumFaultLabels> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < total && k < order.size(); ++k) {
    if (by[order[k]].empty()) continue;
    ++quota[order[k]];
    ++assigned;
  }
  for (std::size_t c = 0; c < by.size(); ++c) {
    if (by[c].empty()) continue;
    if (quota[c] == 0) {
      throw Error(ErrorCode::ClassTooSmall,
                  "limited subsample leaves class '" +
                      std::string(to_string(kAllFaultLabels[c])) + "' empty",
                  {{"label", std::string(to_string(kAllFaultLabels[c]))},
                   {"fraction", std::to_string(fraction)}});
    }
    downsample(by[c], quota[c], mix(seed, 0x11 + c));
  }
  return flatten(by);
}

std::string membership_hash(std::span<const Segment> segments,
                            std::span<const std::size_t> members) {
  std::vector<std::string> keys;
  keys.reserve(members.size());
  for (std::size_t i : members) {
    keys.push_back(segments[i].origin.signal_id + "@" + std::to_string(segments[i].origin.start));
  }
  std::sort(keys.begin(), keys.end());
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (const auto& k : keys) {
    for (unsigned char ch : k) {
      h ^= ch;
      h *= 0x100000001B3ULL;
    }
    h ^= '\n';
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace bdx::experiments
