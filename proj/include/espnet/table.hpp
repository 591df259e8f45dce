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

// Generic match-action table with exact, longest-prefix and ternary columns.
//
// Resolution rules:
//   * tables with a ternary column pick the matching entry with the highest
//     priority (priorities are unique per table);
//   * tables with an lpm column pick the longest matching prefix;
//   * exact-only tables have at most one match by construction.

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "espnet/common.hpp"

namespace espnet {

enum class MatchKind { Exact, Lpm, Ternary };

std::string_view to_string(MatchKind kind);

struct ColumnSpec {
  std::string name;
  MatchKind kind = MatchKind::Exact;
  unsigned width_bits = 32;
};

struct FieldMatch {
  MatchKind kind = MatchKind::Exact;
  std::uint64_t value = 0;
  std::uint64_t mask = 0;
  unsigned prefix_len = 0;  // lpm only

  static FieldMatch exact(std::uint64_t value);
  static FieldMatch lpm(std::uint64_t value, unsigned prefix_len);
  static FieldMatch ternary(std::uint64_t value, std::uint64_t mask);

  bool matches(std::uint64_t field) const { return (field & mask) == value; }
  auto operator<=>(const FieldMatch&) const = default;
};

using MatchKey = std::vector<FieldMatch>;
using ParamValue = std::variant<std::uint64_t, Bytes>;
using ActionParams = std::map<std::string, ParamValue>;

struct ActionCall {
  std::string action;
  ActionParams params;
  bool operator==(const ActionCall&) const = default;
};

struct TableEntry {
  MatchKey key;
  std::int64_t priority = 0;  // ternary tables only
  ActionCall action;
  bool operator==(const TableEntry&) const = default;
};

std::uint64_t param_u64(const ActionParams& params, const std::string& name);
const Bytes& param_bytes(const ActionParams& params, const std::string& name);

class MatchActionTable {
 public:
  MatchActionTable(std::string name, std::vector<ColumnSpec> schema, std::set<std::string> actions,
                   ActionCall default_action);

  const std::string& name() const { return name_; }
  const std::vector<ColumnSpec>& schema() const { return schema_; }
  const ActionCall& default_action() const { return default_action_; }
  std::size_t size() const { return entries_.size(); }

  /// Throws SchemaMismatch, UnknownAction, DuplicateKey or DuplicatePriority.
  void insert(TableEntry entry);
  /// Replaces the action of an existing entry. Throws NoSuchEntry.
  void modify(const MatchKey& key, ActionCall action);
  /// Throws NoSuchEntry.
  void erase(const MatchKey& key);

  const TableEntry* find(const MatchKey& key) const;

  /// Returns the winning entry for the field values, or nullptr on a miss
  /// (the caller applies default_action()).
  const TableEntry* lookup(std::span<const std::uint64_t> fields) const;

  /// Entries in key order.
  std::vector<const TableEntry*> entries() const;

 private:
  MatchKey normalize(const MatchKey& key) const;
  void check_action(const ActionCall& action) const;

  std::string name_;
  std::vector<ColumnSpec> schema_;
  std::set<std::string> actions_;
  ActionCall default_action_;
  bool has_ternary_ = false;
  int lpm_column_ = -1;

  std::map<MatchKey, TableEntry> entries_;
  // Ternary tables: priority -> key, scanned from the highest priority.
  std::map<std::int64_t, MatchKey, std::greater<>> by_priority_;
  // LPM tables: prefix length -> number of entries using it.
  std::map<unsigned, std::size_t, std::greater<>> prefix_lengths_;
};

}  // namespace espnet
