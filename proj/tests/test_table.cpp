// Copyright 2026 The espnet Authors
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

#include <gtest/gtest.h>

#include <optional>
#include <random>
#include <set>

#include "espnet/table.hpp"

namespace espnet {
namespace {

ActionCall act(std::uint64_t id) { return {"set", {{"id", id}}}; }
const ActionCall kDefault{"miss", {}};

std::uint64_t id_of(const TableEntry* e) { return e == nullptr ? UINT64_MAX : param_u64(e->action.params, "id"); }

// Reference rows kept outside the engine and scanned linearly.
struct RefRow {
  std::vector<std::uint64_t> value;
  std::vector<std::uint64_t> mask;  // ternary
  std::vector<unsigned> len;        // lpm
  std::int64_t priority = 0;
  std::uint64_t id = 0;
};

std::uint64_t top_bits(std::uint64_t v, unsigned len, unsigned width) {
  if (len == 0) return 0;
  std::uint64_t m = ((std::uint64_t{1} << len) - 1) << (width - len);
  return v & m;
}

TEST(TableOracle, ExactMatchesLinearScan) {
  std::mt19937_64 rng(100);
  std::size_t checked = 0;
  for (int t = 0; t < 20; ++t) {
    MatchActionTable table("exact", {{"a", MatchKind::Exact, 32}, {"b", MatchKind::Exact, 8}}, {"set", "miss"}, kDefault);
    std::vector<RefRow> rows;
    std::set<std::pair<std::uint64_t, std::uint64_t>> used;
    std::size_t n = rng() % 101;
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t a = rng() % 64, b = rng() % 4;
      if (!used.insert({a, b}).second) continue;
      table.insert({{FieldMatch::exact(a), FieldMatch::exact(b)}, 0, act(i)});
      rows.push_back({{a, b}, {}, {}, 0, i});
    }
    for (int k = 0; k < 500; ++k, ++checked) {
      std::uint64_t a = rng() % 80, b = rng() % 5;
      std::optional<std::uint64_t> expected;
      for (const auto& r : rows) {
        if (r.value[0] == a && r.value[1] == b) expected = r.id;
      }
      std::uint64_t fields[] = {a, b};
      ASSERT_EQ(id_of(table.lookup(fields)), expected.value_or(UINT64_MAX));
    }
  }
  EXPECT_EQ(checked, 10000u);
}

TEST(TableOracle, LpmMatchesLinearScan) {
  std::mt19937_64 rng(101);
  std::size_t checked = 0;
  for (int t = 0; t < 20; ++t) {
    MatchActionTable table("lpm", {{"dst", MatchKind::Lpm, 32}}, {"set", "miss"}, kDefault);
    std::vector<RefRow> rows;
    std::set<std::pair<std::uint64_t, unsigned>> used;
    std::size_t n = rng() % 101;
    for (std::size_t i = 0; i < n; ++i) {
      // addresses inside 10.0.0.0/12 so prefixes nest often
      std::uint64_t addr = 0x0a000000u | (rng() & 0x000fffffu);
      unsigned len = static_cast<unsigned>(rng() % 33);
      std::uint64_t v = top_bits(addr, len, 32);
      if (!used.insert({v, len}).second) continue;
      table.insert({{FieldMatch::lpm(addr, len)}, 0, act(i)});
      rows.push_back({{v}, {}, {len}, 0, i});
    }
    for (int k = 0; k < 500; ++k, ++checked) {
      std::uint64_t addr = rng() % 4 == 0 ? (rng() & 0xffffffffu) : (0x0a000000u | (rng() & 0x000fffffu));
      std::optional<std::uint64_t> expected;
      int best = -1;
      for (const auto& r : rows) {
        if (top_bits(addr, r.len[0], 32) == r.value[0] && static_cast<int>(r.len[0]) > best) {
          best = static_cast<int>(r.len[0]);
          expected = r.id;
        }
      }
      std::uint64_t fields[] = {addr};
      ASSERT_EQ(id_of(table.lookup(fields)), expected.value_or(UINT64_MAX)) << std::hex << addr;
    }
  }
  EXPECT_EQ(checked, 10000u);
}

TEST(TableOracle, TernaryMatchesLinearScan) {
  std::mt19937_64 rng(102);
  std::size_t checked = 0;
  for (int t = 0; t < 20; ++t) {
    MatchActionTable table("ternary",
                           {{"x", MatchKind::Ternary, 8}, {"y", MatchKind::Ternary, 8}, {"z", MatchKind::Ternary, 4}},
                           {"set", "miss"}, kDefault);
    std::vector<RefRow> rows;
    std::set<std::int64_t> priorities;
    std::set<std::vector<std::uint64_t>> keys;
    std::size_t n = rng() % 101;
    const unsigned widths[] = {8, 8, 4};
    for (std::size_t i = 0; i < n; ++i) {
      RefRow r;
      for (unsigned w : widths) {
        std::uint64_t full = (std::uint64_t{1} << w) - 1;
        std::uint64_t mask = rng() % 3 == 0 ? 0 : (rng() % 2 == 0 ? full : (rng() & full));
        r.mask.push_back(mask);
        r.value.push_back(rng() & mask);
      }
      std::vector<std::uint64_t> k = r.value;
      k.insert(k.end(), r.mask.begin(), r.mask.end());
      r.priority = static_cast<std::int64_t>(rng() % 1000) - 500;
      if (!keys.insert(k).second || !priorities.insert(r.priority).second) continue;
      r.id = i;
      table.insert({{FieldMatch::ternary(r.value[0], r.mask[0]), FieldMatch::ternary(r.value[1], r.mask[1]),
                     FieldMatch::ternary(r.value[2], r.mask[2])},
                    r.priority,
                    act(i)});
      rows.push_back(r);
    }
    for (int k = 0; k < 500; ++k, ++checked) {
      std::uint64_t fields[] = {rng() & 0xff, rng() & 0xff, rng() & 0xf};
      std::optional<std::uint64_t> expected;
      std::int64_t best = INT64_MIN;
      for (const auto& r : rows) {
        bool hit = true;
        for (std::size_t c = 0; c < 3; ++c) hit = hit && (fields[c] & r.mask[c]) == (r.value[c] & r.mask[c]);
        if (hit && r.priority > best) {
          best = r.priority;
          expected = r.id;
        }
      }
      ASSERT_EQ(id_of(table.lookup(fields)), expected.value_or(UINT64_MAX));
    }
  }
  EXPECT_EQ(checked, 10000u);
}

template <class F>
void expect_code(ErrorCode code, F&& f) {
  try {
    f();
    FAIL() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

TEST(Table, EntryLifecycle) {
  MatchActionTable table("fwd", {{"dst", MatchKind::Lpm, 32}}, {"set", "miss"}, kDefault);
  MatchKey key{FieldMatch::lpm(0x0a000000, 8)};
  table.insert({key, 0, act(1)});
  std::uint64_t probe[] = {0x0a010203};
  EXPECT_EQ(id_of(table.lookup(probe)), 1u);
  // host bits beyond the prefix are ignored, so this is the same key
  expect_code(ErrorCode::DuplicateKey, [&] { table.insert({{FieldMatch::lpm(0x0aff0000, 8)}, 0, act(2)}); });
  table.modify(key, act(3));
  EXPECT_EQ(id_of(table.lookup(probe)), 3u);
  table.erase(key);
  EXPECT_EQ(table.lookup(probe), nullptr);
  EXPECT_EQ(table.size(), 0u);
  expect_code(ErrorCode::NoSuchEntry, [&] { table.erase(key); });
  expect_code(ErrorCode::NoSuchEntry, [&] { table.modify(key, act(4)); });
}

TEST(Table, RejectsSchemaViolations) {
  MatchActionTable table("t", {{"a", MatchKind::Ternary, 8}}, {"set", "miss"}, kDefault);
  expect_code(ErrorCode::SchemaMismatch, [&] { table.insert({{FieldMatch::exact(1)}, 1, act(1)}); });
  expect_code(ErrorCode::SchemaMismatch, [&] {
    table.insert({{FieldMatch::ternary(1, 1), FieldMatch::ternary(1, 1)}, 1, act(1)});
  });
  expect_code(ErrorCode::UnknownAction, [&] { table.insert({{FieldMatch::ternary(1, 1)}, 1, {"jump", {}}}); });
  table.insert({{FieldMatch::ternary(1, 1)}, 5, act(1)});
  expect_code(ErrorCode::DuplicatePriority, [&] { table.insert({{FieldMatch::ternary(2, 3)}, 5, act(2)}); });
  MatchActionTable exact("e", {{"a", MatchKind::Exact, 8}}, {"set", "miss"}, kDefault);
  expect_code(ErrorCode::SchemaMismatch, [&] { exact.insert({{FieldMatch::exact(0x100)}, 0, act(1)}); });
  expect_code(ErrorCode::SchemaMismatch, [] {
    MatchActionTable bad("b", {{"a", MatchKind::Lpm, 32}, {"b", MatchKind::Ternary, 8}}, {"set", "miss"}, kDefault);
  });
}

TEST(Table, MissReturnsNullAndKeepsDefault) {
  MatchActionTable table("t", {{"a", MatchKind::Exact, 16}}, {"set", "miss"}, kDefault);
  std::uint64_t probe[] = {7};
  EXPECT_EQ(table.lookup(probe), nullptr);
  EXPECT_EQ(table.default_action(), kDefault);
}

}  // namespace
}  // namespace espnet
