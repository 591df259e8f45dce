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

#include "espnet/table.hpp"

namespace espnet {

namespace {

std::uint64_t width_mask(unsigned bits) {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

std::uint64_t prefix_mask(unsigned prefix_len, unsigned width) {
  if (prefix_len == 0) return 0;
  return width_mask(width) & ~width_mask(width - prefix_len);
}

}  // namespace

std::string_view to_string(MatchKind kind) {
  switch (kind) {
    case MatchKind::Exact: return "exact";
    case MatchKind::Lpm: return "lpm";
    case MatchKind::Ternary: return "ternary";
  }
  return "?";
}

FieldMatch FieldMatch::exact(std::uint64_t value) {
  return FieldMatch{MatchKind::Exact, value, ~std::uint64_t{0}, 0};
}

FieldMatch FieldMatch::lpm(std::uint64_t value, unsigned prefix_len) {
  return FieldMatch{MatchKind::Lpm, value, 0, prefix_len};
}

FieldMatch FieldMatch::ternary(std::uint64_t value, std::uint64_t mask) {
  return FieldMatch{MatchKind::Ternary, value, mask, 0};
}

std::uint64_t param_u64(const ActionParams& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end() || !std::holds_alternative<std::uint64_t>(it->second)) {
    throw Error(ErrorCode::SchemaMismatch, "missing integer action parameter '" + name + "'");
  }
  return std::get<std::uint64_t>(it->second);
}

const Bytes& param_bytes(const ActionParams& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end() || !std::holds_alternative<Bytes>(it->second)) {
    throw Error(ErrorCode::SchemaMismatch, "missing bytes action parameter '" + name + "'");
  }
  return std::get<Bytes>(it->second);
}

MatchActionTable::MatchActionTable(std::string name, std::vector<ColumnSpec> schema,
                                   std::set<std::string> actions, ActionCall default_action)
    : name_(std::move(name)),
      schema_(std::move(schema)),
      actions_(std::move(actions)),
      default_action_(std::move(default_action)) {
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    if (schema_[i].kind == MatchKind::Ternary) has_ternary_ = true;
    if (schema_[i].kind == MatchKind::Lpm) {
      if (lpm_column_ >= 0) throw Error(ErrorCode::SchemaMismatch, name_ + ": more than one lpm column");
      lpm_column_ = static_cast<int>(i);
    }
  }
  if (has_ternary_ && lpm_column_ >= 0) {
    throw Error(ErrorCode::SchemaMismatch, name_ + ": lpm and ternary columns cannot be mixed");
  }
  if (!actions_.contains(default_action_.action)) {
    throw Error(ErrorCode::UnknownAction, name_ + ": default action " + default_action_.action);
  }
}

MatchKey MatchActionTable::normalize(const MatchKey& key) const {
  if (key.size() != schema_.size()) {
    throw Error(ErrorCode::SchemaMismatch, name_ + ": key arity " + std::to_string(key.size()) +
                                               " != " + std::to_string(schema_.size()));
  }
  MatchKey out = key;
  for (std::size_t i = 0; i < key.size(); ++i) {
    const ColumnSpec& col = schema_[i];
    FieldMatch& f = out[i];
    if (f.kind != col.kind) {
      throw Error(ErrorCode::SchemaMismatch, name_ + ": column " + col.name + " expects " +
                                                 std::string(to_string(col.kind)) + " match");
    }
    std::uint64_t wmask = width_mask(col.width_bits);
    switch (f.kind) {
      case MatchKind::Exact:
        f.mask = wmask;
        break;
      case MatchKind::Lpm:
        if (f.prefix_len > col.width_bits) {
          throw Error(ErrorCode::SchemaMismatch, name_ + ": prefix longer than column " + col.name);
        }
        f.mask = prefix_mask(f.prefix_len, col.width_bits);
        break;
      case MatchKind::Ternary:
        f.mask &= wmask;
        break;
    }
    if (f.kind == MatchKind::Exact && (f.value & ~wmask) != 0) {
      throw Error(ErrorCode::SchemaMismatch, name_ + ": value wider than column " + col.name);
    }
    f.value &= f.mask;
  }
  return out;
}

void MatchActionTable::check_action(const ActionCall& action) const {
  if (!actions_.contains(action.action)) {
    throw Error(ErrorCode::UnknownAction, name_ + ": " + action.action);
  }
}

void MatchActionTable::insert(TableEntry entry) {
  entry.key = normalize(entry.key);
  check_action(entry.action);
  if (!has_ternary_) entry.priority = 0;
  if (entries_.contains(entry.key)) throw Error(ErrorCode::DuplicateKey, name_);
  if (has_ternary_ && by_priority_.contains(entry.priority)) {
    throw Error(ErrorCode::DuplicatePriority, name_ + ": priority " + std::to_string(entry.priority));
  }
  if (has_ternary_) by_priority_.emplace(entry.priority, entry.key);
  if (lpm_column_ >= 0) ++prefix_lengths_[entry.key[static_cast<std::size_t>(lpm_column_)].prefix_len];
  MatchKey key = entry.key;
  entries_.emplace(std::move(key), std::move(entry));
}

void MatchActionTable::modify(const MatchKey& key, ActionCall action) {
  auto it = entries_.find(normalize(key));
  if (it == entries_.end()) throw Error(ErrorCode::NoSuchEntry, name_);
  check_action(action);
  it->second.action = std::move(action);
}

void MatchActionTable::erase(const MatchKey& key) {
  auto it = entries_.find(normalize(key));
  if (it == entries_.end()) throw Error(ErrorCode::NoSuchEntry, name_);
  if (has_ternary_) by_priority_.erase(it->second.priority);
  if (lpm_column_ >= 0) {
    auto pl = prefix_lengths_.find(it->first[static_cast<std::size_t>(lpm_column_)].prefix_len);
    if (--pl->second == 0) prefix_lengths_.erase(pl);
  }
  entries_.erase(it);
}

const TableEntry* MatchActionTable::find(const MatchKey& key) const {
  auto it = entries_.find(normalize(key));
  return it == entries_.end() ? nullptr : &it->second;
}

const TableEntry* MatchActionTable::lookup(std::span<const std::uint64_t> fields) const {
  if (fields.size() != schema_.size()) {
    throw Error(ErrorCode::SchemaMismatch, name_ + ": lookup arity");
  }
  if (has_ternary_) {
    for (const auto& [priority, key] : by_priority_) {
      const TableEntry& e = entries_.at(key);
      bool hit = true;
      for (std::size_t i = 0; i < fields.size() && hit; ++i) hit = e.key[i].matches(fields[i]);
      if (hit) return &e;
    }
    return nullptr;
  }

  MatchKey probe(schema_.size());
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    std::uint64_t wmask = width_mask(schema_[i].width_bits);
    probe[i] = FieldMatch{schema_[i].kind, fields[i] & wmask, wmask, 0};
  }
  if (lpm_column_ < 0) {
    auto it = entries_.find(probe);
    return it == entries_.end() ? nullptr : &it->second;
  }
  auto col = static_cast<std::size_t>(lpm_column_);
  unsigned width = schema_[col].width_bits;
  for (const auto& [len, count] : prefix_lengths_) {
    probe[col].prefix_len = len;
    probe[col].mask = prefix_mask(len, width);
    probe[col].value = fields[col] & probe[col].mask;
    auto it = entries_.find(probe);
    if (it != entries_.end()) return &it->second;
  }
  return nullptr;
}

std::vector<const TableEntry*> MatchActionTable::entries() const {
  std::vector<const TableEntry*> out;
  out.reserve(entries_.size());
  for (const auto& [key, entry] : entries_) out.push_back(&entry);
  return out;
}

}  // namespace espnet
