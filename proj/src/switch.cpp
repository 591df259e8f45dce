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

#include "espnet/switch.hpp"

#include <algorithm>

namespace espnet {

namespace {

MatchActionTable make_table(TableId id) {
  const ActionCall drop{kActDrop, {}};
  switch (id) {
    case TableId::LpmFwd:
      return MatchActionTable("LPM-FWD", {{"dst", MatchKind::Lpm, 32}}, {kActForward, kActDrop}, drop);
    case TableId::Spd:
      return MatchActionTable("SPD",
                              {{"src", MatchKind::Ternary, 32},
                               {"dst", MatchKind::Ternary, 32},
                               {"protocol", MatchKind::Ternary, 8}},
                              {kActSpdMark, kActDrop}, drop);
    case TableId::SadEnc:
      return MatchActionTable("SAD-ENC", {{"dst", MatchKind::Lpm, 32}}, {kActEncNull, kActEncAes, kActDrop},
                              drop);
    case TableId::SadDec:
      return MatchActionTable("SAD-DEC",
                              {{"outer_src", MatchKind::Exact, 32},
                               {"outer_dst", MatchKind::Exact, 32},
                               {"spi", MatchKind::Exact, 32}},
                              {kActDecNull, kActDecAes, kActDrop}, drop);
  }
  throw Error(ErrorCode::UnknownTable, "table id");
}

Bytes to_bytes(std::span<const std::uint8_t> s) { return Bytes(s.begin(), s.end()); }

template <std::size_t N>
std::array<std::uint8_t, N> to_array(const Bytes& b, const char* what) {
  if (b.size() != N) throw Error(ErrorCode::SchemaMismatch, std::string(what) + " has wrong length");
  std::array<std::uint8_t, N> out{};
  std::copy(b.begin(), b.end(), out.begin());
  return out;
}

bool is_sad_action(const std::string& action) {
  return action == kActEncNull || action == kActEncAes || action == kActDecNull || action == kActDecAes;
}

nlohmann::json match_to_json(const ColumnSpec& col, const FieldMatch& f) {
  bool address = col.width_bits == 32 && col.name != "spi";
  auto value = [&](std::uint64_t v) -> nlohmann::json {
    if (address) return Ipv4Addr{static_cast<std::uint32_t>(v)}.to_string();
    return v;
  };
  switch (f.kind) {
    case MatchKind::Exact: return value(f.value);
    case MatchKind::Lpm:
      return Ipv4Prefix{Ipv4Addr{static_cast<std::uint32_t>(f.value)}, static_cast<std::uint8_t>(f.prefix_len)}
          .to_string();
    case MatchKind::Ternary: return nlohmann::json{{"value", value(f.value)}, {"mask", value(f.mask)}};
  }
  return nullptr;
}

}  // namespace

std::string_view table_name(TableId id) {
  switch (id) {
    case TableId::LpmFwd: return "LPM-FWD";
    case TableId::Spd: return "SPD";
    case TableId::SadEnc: return "SAD-ENC";
    case TableId::SadDec: return "SAD-DEC";
  }
  return "?";
}

TableId parse_table_name(std::string_view name) {
  for (TableId id : kAllTables) {
    if (table_name(id) == name) return id;
  }
  throw Error(ErrorCode::UnknownTable, std::string(name));
}

std::string_view to_string(DropReason reason) {
  switch (reason) {
    case DropReason::ParseError: return "parse_error";
    case DropReason::NoSpdMatch: return "no_spd_match";
    case DropReason::SpdDiscard: return "spd_discard";
    case DropReason::NoSa: return "no_sa";
    case DropReason::IcvFail: return "icv_fail";
    case DropReason::BadEsp: return "bad_esp";
    case DropReason::HardLimit: return "hard_limit";
    case DropReason::TtlExpired: return "ttl_expired";
    case DropReason::NoRoute: return "no_route";
  }
  return "?";
}

std::string_view to_string(Direction d) { return d == Direction::Enc ? "enc" : "dec"; }

std::uint64_t SwitchCounters::total_drops() const {
  std::uint64_t total = 0;
  for (auto d : drops) total += d;
  return total;
}

MatchKey lpm_fwd_key(const Ipv4Prefix& dst) { return {FieldMatch::lpm(dst.addr.value, dst.length)}; }

ActionCall forward_action(const MacAddr& next_hop, std::uint16_t port) {
  return {kActForward, {{"dst_mac", to_bytes(next_hop.octets)}, {"port", std::uint64_t{port}}}};
}

MatchKey spd_key(const Ipv4Prefix& src, const Ipv4Prefix& dst, std::optional<std::uint8_t> protocol) {
  return {FieldMatch::ternary(src.addr.value, src.mask()), FieldMatch::ternary(dst.addr.value, dst.mask()),
          protocol ? FieldMatch::ternary(*protocol, 0xff) : FieldMatch::ternary(0, 0)};
}

ActionCall spd_mark_action(SpdMark mark) {
  return {kActSpdMark, {{"mark", std::uint64_t{static_cast<std::uint8_t>(mark)}}}};
}

MatchKey sad_enc_key(const Ipv4Prefix& inner_dst) {
  return {FieldMatch::lpm(inner_dst.addr.value, inner_dst.length)};
}

MatchKey sad_dec_key(Ipv4Addr outer_src, Ipv4Addr outer_dst, std::uint32_t spi) {
  return {FieldMatch::exact(outer_src.value), FieldMatch::exact(outer_dst.value), FieldMatch::exact(spi)};
}

ActionCall sad_action(Direction d, const SecurityAssociation& sa) {
  validate(sa);
  ActionCall call;
  bool aes = sa.suite == CipherSuite::AesCtrHmacMd5;
  if (d == Direction::Enc) {
    call.action = aes ? kActEncAes : kActEncNull;
  } else {
    call.action = aes ? kActDecAes : kActDecNull;
  }
  call.params = {{"spi", std::uint64_t{sa.spi}},
                 {"tunnel_src", std::uint64_t{sa.tunnel_src.value}},
                 {"tunnel_dst", std::uint64_t{sa.tunnel_dst.value}},
                 {"register_index", std::uint64_t{sa.register_index}},
                 {"soft_limit", sa.soft_limit},
                 {"hard_limit", sa.hard_limit}};
  if (aes) {
    call.params["aes_key"] = to_bytes(sa.keys->aes_key);
    call.params["ctr_nonce"] = to_bytes(sa.keys->ctr_nonce);
    call.params["hmac_key"] = to_bytes(sa.keys->hmac_key);
  }
  return call;
}

SecurityAssociation sa_from_action(const ActionCall& action) {
  if (!is_sad_action(action.action)) throw Error(ErrorCode::UnknownAction, action.action);
  const auto& p = action.params;
  SecurityAssociation sa;
  sa.spi = static_cast<std::uint32_t>(param_u64(p, "spi"));
  sa.tunnel_src = Ipv4Addr{static_cast<std::uint32_t>(param_u64(p, "tunnel_src"))};
  sa.tunnel_dst = Ipv4Addr{static_cast<std::uint32_t>(param_u64(p, "tunnel_dst"))};
  sa.register_index = static_cast<std::uint32_t>(param_u64(p, "register_index"));
  sa.soft_limit = param_u64(p, "soft_limit");
  sa.hard_limit = param_u64(p, "hard_limit");
  if (action.action == kActEncAes || action.action == kActDecAes) {
    sa.suite = CipherSuite::AesCtrHmacMd5;
    sa.keys = SaKeys{to_array<kAesKeyLen>(param_bytes(p, "aes_key"), "aes_key"),
                     to_array<kCtrNonceLen>(param_bytes(p, "ctr_nonce"), "ctr_nonce"),
                     to_array<kHmacKeyLen>(param_bytes(p, "hmac_key"), "hmac_key")};
  }
  return sa;
}

Switch::Switch(SwitchConfig config)
    : config_(std::move(config)),
      registers_(config_.register_size, 0),
      register_claimed_(config_.register_size, false) {
  for (TableId id : kAllTables) tables_.emplace(id, make_table(id));
}

MatchActionTable& Switch::mutable_table(TableId id) { return tables_.at(id); }

const MatchActionTable& Switch::table(TableId id) const { return tables_.at(id); }

void Switch::claim_register(std::size_t index) {
  if (index >= registers_.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "register " + std::to_string(index));
  }
  if (register_claimed_[index]) throw Error(ErrorCode::RegisterInUse, "register " + std::to_string(index));
  register_claimed_[index] = true;
  registers_[index] = 0;
}

void Switch::release_register(std::size_t index) {
  if (index < register_claimed_.size()) register_claimed_[index] = false;
}

void Switch::on_sad_entry_removed(Direction d, const ActionCall& action) {
  if (!is_sad_action(action.action)) return;
  SecurityAssociation sa = sa_from_action(action);
  release_register(sa.register_index);
  notified_.erase({sa.spi, d});
}

void Switch::table_insert(TableId table, TableEntry entry) {
  ++counters_.control_messages;
  bool sad = table == TableId::SadEnc || table == TableId::SadDec;
  std::optional<std::uint32_t> claimed;
  if (sad && is_sad_action(entry.action.action)) {
    SecurityAssociation sa = sa_from_action(entry.action);
    validate(sa);
    claim_register(sa.register_index);
    claimed = sa.register_index;
  }
  try {
    mutable_table(table).insert(std::move(entry));
  } catch (...) {
    if (claimed) release_register(*claimed);
    throw;
  }
}

void Switch::table_modify(TableId table, const MatchKey& key, ActionCall action) {
  ++counters_.control_messages;
  MatchActionTable& t = mutable_table(table);
  const TableEntry* existing = t.find(key);
  if (existing == nullptr) throw Error(ErrorCode::NoSuchEntry, std::string(table_name(table)));
  bool sad = table == TableId::SadEnc || table == TableId::SadDec;
  if (sad) {
    Direction d = table == TableId::SadEnc ? Direction::Enc : Direction::Dec;
    ActionCall old = existing->action;
    std::optional<SecurityAssociation> old_sa;
    if (is_sad_action(old.action)) old_sa = sa_from_action(old);
    std::optional<SecurityAssociation> new_sa;
    if (is_sad_action(action.action)) {
      new_sa = sa_from_action(action);
      validate(*new_sa);
    }
    if (old_sa) release_register(old_sa->register_index);
    try {
      if (new_sa) claim_register(new_sa->register_index);
      t.modify(key, std::move(action));
    } catch (...) {
      if (old_sa) register_claimed_[old_sa->register_index] = true;
      throw;
    }
    if (old_sa) notified_.erase({old_sa->spi, d});
    return;
  }
  t.modify(key, std::move(action));
}

void Switch::table_delete(TableId table, const MatchKey& key) {
  ++counters_.control_messages;
  MatchActionTable& t = mutable_table(table);
  const TableEntry* existing = t.find(key);
  if (existing == nullptr) throw Error(ErrorCode::NoSuchEntry, std::string(table_name(table)));
  ActionCall old = existing->action;
  t.erase(key);
  if (table == TableId::SadEnc) on_sad_entry_removed(Direction::Enc, old);
  if (table == TableId::SadDec) on_sad_entry_removed(Direction::Dec, old);
}

std::uint64_t Switch::register_read(std::size_t index) const {
  if (index >= registers_.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "register " + std::to_string(index));
  }
  return registers_[index];
}

void Switch::register_write(std::size_t index, std::uint64_t value) {
  ++counters_.control_messages;
  if (index >= registers_.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "register " + std::to_string(index));
  }
  registers_[index] = value;
}

std::vector<Notification> Switch::poll_notifications() {
  std::vector<Notification> out(notifications_.begin(), notifications_.end());
  notifications_.clear();
  return out;
}

const MacAddr* Switch::port_mac(std::uint16_t port) const {
  for (const auto& p : config_.ports) {
    if (p.port == port) return &p.mac;
  }
  return nullptr;
}

void Switch::check_limits(Packet& p, const SecurityAssociation& sa, Direction d, std::uint64_t counter) {
  p.meta.soft_limit_reached = counter >= sa.soft_limit;
  p.meta.hard_limit_reached = counter >= sa.hard_limit;
  if (counter == sa.soft_limit && notified_.insert({sa.spi, d}).second) {
    notifications_.push_back(Notification{config_.id, sa.spi, d});
  }
}

std::optional<DropReason> Switch::block_spd_match(Packet& p) {
  ++packet_work_;
  std::array<std::uint64_t, 3> fields{p.ipv4.src.value, p.ipv4.dst.value, p.ipv4.protocol};
  const TableEntry* hit = table(TableId::Spd).lookup(fields);
  if (hit == nullptr) {
    p.meta.dropped = true;
    return DropReason::NoSpdMatch;
  }
  if (hit->action.action != kActSpdMark) {
    p.meta.dropped = true;
    return DropReason::SpdDiscard;
  }
  p.meta.spd_mark = static_cast<SpdMark>(param_u64(hit->action.params, "mark"));
  return std::nullopt;
}

std::optional<DropReason> Switch::block_esp_encrypt(Packet& p) {
  ++packet_work_;
  std::array<std::uint64_t, 1> fields{p.ipv4.dst.value};
  const TableEntry* hit = table(TableId::SadEnc).lookup(fields);
  if (hit == nullptr || !is_sad_action(hit->action.action)) {
    p.meta.dropped = true;
    return DropReason::NoSa;
  }
  SecurityAssociation sa = sa_from_action(hit->action);
  std::uint64_t counter = ++registers_[sa.register_index];
  check_limits(p, sa, Direction::Enc, counter);
  if (counter > sa.hard_limit || counter > 0xffffffffULL) {
    p.meta.dropped = true;
    return DropReason::HardLimit;
  }

  Bytes inner = serialize_ipv4(p.ipv4, p.esp, p.body);
  EspTunnelPacket tunnel = esp_tunnel_encapsulate(sa, counter, inner);
  packet_work_ += esp_work_units(sa.suite, tunnel.body.size() - iv_length(sa.suite) - icv_length(sa.suite));
  p.ipv4 = tunnel.outer;
  p.esp = tunnel.esp;
  p.body = std::move(tunnel.body);
  return std::nullopt;
}

std::optional<DropReason> Switch::block_esp_decrypt(Packet& p) {
  ++packet_work_;
  std::array<std::uint64_t, 3> fields{p.ipv4.src.value, p.ipv4.dst.value, p.esp->spi};
  const TableEntry* hit = table(TableId::SadDec).lookup(fields);
  if (hit == nullptr || !is_sad_action(hit->action.action)) {
    p.meta.dropped = true;
    return DropReason::NoSa;
  }
  SecurityAssociation sa = sa_from_action(hit->action);
  std::uint64_t counter = ++registers_[sa.register_index];
  check_limits(p, sa, Direction::Dec, counter);
  if (counter > sa.hard_limit) {
    p.meta.dropped = true;
    return DropReason::HardLimit;
  }

  try {
    std::size_t overhead = iv_length(sa.suite) + icv_length(sa.suite);
    packet_work_ += esp_work_units(sa.suite, p.body.size() > overhead ? p.body.size() - overhead : 0);
    Packet inner = parse_ipv4(esp_tunnel_decapsulate(sa, *p.esp, p.body));
    p.ipv4 = inner.ipv4;
    p.esp = inner.esp;
    p.body = std::move(inner.body);
  } catch (const Error& e) {
    p.meta.dropped = true;
    return e.code() == ErrorCode::IcvMismatch ? DropReason::IcvFail : DropReason::BadEsp;
  }
  return std::nullopt;
}

std::optional<DropReason> Switch::block_l3_forward(Packet& p) {
  ++packet_work_;
  if (p.ipv4.ttl <= 1) {
    p.meta.dropped = true;
    return DropReason::TtlExpired;
  }
  std::array<std::uint64_t, 1> fields{p.ipv4.dst.value};
  const TableEntry* hit = table(TableId::LpmFwd).lookup(fields);
  if (hit == nullptr || hit->action.action != kActForward) {
    p.meta.dropped = true;
    return DropReason::NoRoute;
  }
  auto port = static_cast<std::uint16_t>(param_u64(hit->action.params, "port"));
  p.eth.dst_mac.octets = to_array<6>(param_bytes(hit->action.params, "dst_mac"), "dst_mac");
  if (const MacAddr* mac = port_mac(port)) p.eth.src_mac = *mac;
  p.ipv4.ttl = static_cast<std::uint8_t>(p.ipv4.ttl - 1);
  p.meta.egress_port = port;
  return std::nullopt;
}

ProcessResult Switch::process_packet(std::uint16_t /*ingress_port*/, ByteView frame) {
  ++counters_.ingress;
  packet_work_ = 1;  // parser
  ProcessResult result;
  auto finish = [&](std::optional<DropReason> drop) {
    result.work = packet_work_;
    work_units_ += packet_work_;
    if (drop) {
      result.drop = drop;
      ++counters_.drops[static_cast<std::size_t>(*drop)];
    }
    return result;
  };

  Packet p;
  try {
    p = parse_packet(frame);
  } catch (const Error&) {
    return finish(DropReason::ParseError);
  }

  std::optional<DropReason> drop;
  if (p.esp) {
    drop = block_esp_decrypt(p);
  } else {
    drop = block_spd_match(p);
    if (!drop && p.meta.spd_mark == SpdMark::Protect) drop = block_esp_encrypt(p);
  }
  if (!drop) drop = block_l3_forward(p);
  if (drop) return finish(drop);

  ++packet_work_;  // deparser
  result.output = EgressFrame{*p.meta.egress_port, serialize_packet(p)};
  ++counters_.forwarded;
  return finish(std::nullopt);
}

nlohmann::json Switch::snapshot() const {
  nlohmann::json out;
  out["switch_id"] = config_.id;
  nlohmann::json tables = nlohmann::json::object();
  for (const auto& [id, t] : tables_) {
    nlohmann::json entries = nlohmann::json::array();
    for (const TableEntry* e : t.entries()) {
      nlohmann::json key = nlohmann::json::object();
      for (std::size_t i = 0; i < e->key.size(); ++i) key[t.schema()[i].name] = match_to_json(t.schema()[i], e->key[i]);
      nlohmann::json params = nlohmann::json::object();
      for (const auto& [name, value] : e->action.params) {
        if (std::holds_alternative<std::uint64_t>(value)) {
          params[name] = std::get<std::uint64_t>(value);
        } else if (name == "dst_mac") {
          MacAddr mac;
          mac.octets = to_array<6>(std::get<Bytes>(value), "dst_mac");
          params[name] = mac.to_string();
        } else {
          params[name] = "<redacted>";
        }
      }
      nlohmann::json entry{{"key", key}, {"action", e->action.action}, {"params", params}};
      if (id == TableId::Spd) entry["priority"] = e->priority;
      entries.push_back(std::move(entry));
    }
    tables[std::string(table_name(id))] = std::move(entries);
  }
  out["tables"] = std::move(tables);
  nlohmann::json regs = nlohmann::json::object();
  for (std::size_t i = 0; i < registers_.size(); ++i) {
    if (registers_[i] != 0) regs[std::to_string(i)] = registers_[i];
  }
  out["registers"] = std::move(regs);
  nlohmann::json drops = nlohmann::json::object();
  for (std::size_t i = 0; i < kDropReasonCount; ++i) {
    drops[std::string(to_string(static_cast<DropReason>(i)))] = counters_.drops[i];
  }
  out["counters"] = {{"ingress", counters_.ingress},
                     {"forwarded", counters_.forwarded},
                     {"drops", drops},
                     {"control_messages", counters_.control_messages}};
  return out;
}

}  // namespace espnet
