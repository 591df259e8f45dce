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

// Software switch mirroring the IPsec data-plane program: parser, SPD
// matching, ESP encryption, ESP decryption, L3 forwarding and deparser,
// plus the table/register/notification control API.

#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "espnet/crypto.hpp"
#include "espnet/packet.hpp"
#include "espnet/table.hpp"

namespace espnet {

enum class TableId { LpmFwd, Spd, SadEnc, SadDec };

inline constexpr std::array<TableId, 4> kAllTables = {TableId::LpmFwd, TableId::Spd, TableId::SadEnc,
                                                      TableId::SadDec};

std::string_view table_name(TableId id);
TableId parse_table_name(std::string_view name);

enum class DropReason : std::uint8_t {
  ParseError,
  NoSpdMatch,
  SpdDiscard,
  NoSa,
  IcvFail,
  BadEsp,
  HardLimit,
  TtlExpired,
  NoRoute,
};

inline constexpr std::size_t kDropReasonCount = 9;
std::string_view to_string(DropReason reason);

enum class Direction : std::uint8_t { Enc, Dec };
std::string_view to_string(Direction d);

struct Notification {
  std::string switch_id;
  std::uint32_t spi = 0;
  Direction direction = Direction::Enc;
  // kind is always soft_limit
  bool operator==(const Notification&) const = default;
};

struct PortConfig {
  std::uint16_t port = 0;
  MacAddr mac;
};

struct SwitchConfig {
  std::string id;
  std::vector<PortConfig> ports;
  std::size_t register_size = 1024;
};

struct EgressFrame {
  std::uint16_t port = 0;
  Bytes frame;
};

struct ProcessResult {
  std::optional<EgressFrame> output;
  std::optional<DropReason> drop;
  std::uint64_t work = 0;  // cost units spent on this packet
};

struct SwitchCounters {
  std::uint64_t ingress = 0;
  std::uint64_t forwarded = 0;
  std::array<std::uint64_t, kDropReasonCount> drops{};
  std::uint64_t control_messages = 0;

  std::uint64_t total_drops() const;
};

// Action names.
inline constexpr const char* kActForward = "forward_packet";
inline constexpr const char* kActDrop = "drop";
inline constexpr const char* kActSpdMark = "add_spd_mark";
inline constexpr const char* kActEncNull = "esp_encrypt_null";
inline constexpr const char* kActEncAes = "esp_encrypt_aes_ctr_hmac_md5";
inline constexpr const char* kActDecNull = "esp_decrypt_null";
inline constexpr const char* kActDecAes = "esp_decrypt_aes_ctr_hmac_md5";

// Key and action builders shared by the controller, the simulator and tests.
MatchKey lpm_fwd_key(const Ipv4Prefix& dst);
ActionCall forward_action(const MacAddr& next_hop, std::uint16_t port);

MatchKey spd_key(const Ipv4Prefix& src, const Ipv4Prefix& dst, std::optional<std::uint8_t> protocol);
ActionCall spd_mark_action(SpdMark mark);

MatchKey sad_enc_key(const Ipv4Prefix& inner_dst);
MatchKey sad_dec_key(Ipv4Addr outer_src, Ipv4Addr outer_dst, std::uint32_t spi);
ActionCall sad_action(Direction d, const SecurityAssociation& sa);
SecurityAssociation sa_from_action(const ActionCall& action);

class Switch {
 public:
  explicit Switch(SwitchConfig config);

  const std::string& id() const { return config_.id; }
  const SwitchConfig& config() const { return config_; }

  // Control API.
  void table_insert(TableId table, TableEntry entry);
  void table_modify(TableId table, const MatchKey& key, ActionCall action);
  void table_delete(TableId table, const MatchKey& key);
  std::uint64_t register_read(std::size_t index) const;
  void register_write(std::size_t index, std::uint64_t value);
  std::vector<Notification> poll_notifications();

  const MatchActionTable& table(TableId id) const;

  // Data plane.
  ProcessResult process_packet(std::uint16_t ingress_port, ByteView frame);

  // Function blocks, exposed for tests. Each returns a drop reason when the
  // packet is discarded (meta.dropped is set as well).
  std::optional<DropReason> block_spd_match(Packet& p);
  std::optional<DropReason> block_esp_encrypt(Packet& p);
  std::optional<DropReason> block_esp_decrypt(Packet& p);
  std::optional<DropReason> block_l3_forward(Packet& p);

  const SwitchCounters& counters() const { return counters_; }
  std::uint64_t work_units() const { return work_units_; }

  /// Tables (key material redacted), non-zero registers and counters.
  nlohmann::json snapshot() const;

 private:
  MatchActionTable& mutable_table(TableId id);
  void claim_register(std::size_t index);
  void release_register(std::size_t index);
  void on_sad_entry_removed(Direction d, const ActionCall& action);
  void check_limits(Packet& p, const SecurityAssociation& sa, Direction d, std::uint64_t counter);
  const MacAddr* port_mac(std::uint16_t port) const;

  SwitchConfig config_;
  std::map<TableId, MatchActionTable> tables_;
  std::vector<std::uint64_t> registers_;
  std::vector<bool> register_claimed_;
  std::deque<Notification> notifications_;
  std::set<std::pair<std::uint32_t, Direction>> notified_;
  SwitchCounters counters_;
  std::uint64_t work_units_ = 0;
  std::uint64_t packet_work_ = 0;
};

}  // namespace espnet
