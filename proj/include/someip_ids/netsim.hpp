#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "someip_ids/codec.hpp"

namespace someip_ids {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};
struct NotEnoughSessions : std::runtime_error {
  explicit NotEnoughSessions(const std::string& msg) : std::runtime_error(msg) {}
};

struct MacAddr {
  std::array<std::uint8_t, 6> bytes{};
  std::string to_string() const;
  static MacAddr parse(const std::string& text);  // ConfigError
  auto operator<=>(const MacAddr&) const = default;
};

struct Ipv4Addr {
  std::uint32_t value = 0;  // host order
  std::string to_string() const;
  static Ipv4Addr parse(const std::string& text);  // ConfigError
  auto operator<=>(const Ipv4Addr&) const = default;
};

enum class DeviceKind { kClient, kServer, kAttacker };

struct DeviceConfig {
  std::string name;
  DeviceKind kind = DeviceKind::kClient;
  MacAddr mac;
  Ipv4Addr ip;
  std::uint16_t send_port = 0;
  std::uint16_t recv_port = 0;
};

enum class RpcKind { kRequestResponse, kFireAndForget, kEvent };

struct MethodConfig {
  std::uint16_t method_id = 0;
  RpcKind kind = RpcKind::kRequestResponse;
};

struct ServiceConfig {
  std::uint16_t service_id = 0;
  std::string offered_by;
  std::vector<std::string> requested_by;
  std::vector<MethodConfig> methods;
};

enum class AttackType {
  kErrorOnEvent,     // packet label 1
  kErrorOnError,     // packet label 2
  kMissingResponse,  // packet label 3
  kMissingRequest,   // packet label 4
};

const char* attack_type_name(AttackType t);
AttackType attack_type_from_name(const std::string& name);  // ConfigError
int attack_label(AttackType t);

struct ScenarioConfig {
  std::vector<DeviceConfig> devices;
  std::vector<ServiceConfig> services;
  std::uint32_t packets_per_client_method_service = 50;
  std::uint32_t attacks_to_execute = 10;
  double attacker_response_ms_min = 1.0;
  double attacker_response_ms_max = 3.0;
  std::optional<AttackType> attack_type;
  std::uint64_t seed = 1;
  std::string output_path = "output.pcap";

  void validate() const;  // ConfigError
  nlohmann::json to_json() const;
  static ScenarioConfig from_json(const nlohmann::json& j);  // ConfigError
  static ScenarioConfig load_file(const std::string& path);  // ConfigError on parse
};

// One simulated frame: stack-level addressing plus the SOME/IP message.
// label: 0 normal, 1 error on event, 2 error on error, 3 request without
// response, 4 response without request.
struct LabeledPacket {
  std::uint64_t timestamp_us = 0;
  MacAddr src_mac, dst_mac;
  Ipv4Addr src_ip, dst_ip;
  std::uint16_t src_port = 0, dst_port = 0;
  SomeIpMessage someip;
  int label = 0;

  bool operator==(const LabeledPacket&) const = default;
};

// Attack-free traffic for every (service, requesting client, method) episode,
// globally time-ordered. Deterministic in cfg.seed.
std::vector<LabeledPacket> simulate_normal(const ScenarioConfig& cfg);

// Mutates cfg.attacks_to_execute distinct sessions according to
// cfg.attack_type and returns the re-sorted stream. Throws NotEnoughSessions
// if fewer eligible sessions exist, ConfigError if an attack is requested
// without an attacker device or attack type.
std::vector<LabeledPacket> inject_attack(std::vector<LabeledPacket> stream,
                                         const ScenarioConfig& cfg);

// simulate_normal followed by inject_attack when attacks are configured.
std::vector<LabeledPacket> generate_scenario(const ScenarioConfig& cfg);

// 8 clients, 8 servers, 1 attacker, 3 services x 3 methods, 50 packets per
// episode, 10 attacks with 1-3 ms attacker response.
ScenarioConfig reference_scenario();

}  // namespace someip_ids
