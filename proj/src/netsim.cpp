#include "someip_ids/netsim.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "someip_ids/util.hpp"

namespace someip_ids {

namespace {

constexpr std::uint64_t kBaseTimestampUs = 1'700'000'000ULL * 1'000'000ULL;

// Microsecond gaps: client pacing between calls, server answer delay, and the
// per-episode start jitter.
constexpr std::uint32_t kClientGapMinUs = 1'000;
constexpr std::uint32_t kClientGapMaxUs = 10'000;
constexpr std::uint32_t kServerDelayMinUs = 500;
constexpr std::uint32_t kServerDelayMaxUs = 2'000;
constexpr std::uint32_t kEpisodeJitterMaxUs = 5'000;

constexpr std::uint8_t kErrorReturnCode = 0x01;

std::vector<std::uint8_t> call_payload(const SomeIpHeader& h, std::uint32_t idx,
                                       std::uint8_t direction) {
  return {std::uint8_t(h.service_id >> 8), std::uint8_t(h.service_id),
          std::uint8_t(h.method_id >> 8),  std::uint8_t(h.method_id),
          std::uint8_t(idx >> 8),          std::uint8_t(idx),
          0xAB,                            direction};
}

}  // namespace

std::string MacAddr::to_string() const {
  char buf[18];
  std::snprintf(buf, sizeof(buf), "%02x:%02x:%02x:%02x:%02x:%02x", bytes[0],
                bytes[1], bytes[2], bytes[3], bytes[4], bytes[5]);
  return buf;
}

MacAddr MacAddr::parse(const std::string& text) {
  MacAddr m;
  unsigned v[6];
  char tail;
  if (std::sscanf(text.c_str(), "%x:%x:%x:%x:%x:%x%c", &v[0], &v[1], &v[2],
                  &v[3], &v[4], &v[5], &tail) != 6)
    throw ConfigError("bad MAC address: " + text);
  for (int i = 0; i < 6; ++i) {
    if (v[i] > 0xFF) throw ConfigError("bad MAC address: " + text);
    m.bytes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v[i]);
  }
  return m;
}

std::string Ipv4Addr::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (value >> 24) & 0xFF,
                (value >> 16) & 0xFF, (value >> 8) & 0xFF, value & 0xFF);
  return buf;
}

Ipv4Addr Ipv4Addr::parse(const std::string& text) {
  unsigned v[4];
  char tail;
  if (std::sscanf(text.c_str(), "%u.%u.%u.%u%c", &v[0], &v[1], &v[2], &v[3],
                  &tail) != 4)
    throw ConfigError("bad IPv4 address: " + text);
  for (int i = 0; i < 4; ++i)
    if (v[i] > 255) throw ConfigError("bad IPv4 address: " + text);
  return Ipv4Addr{(v[0] << 24) | (v[1] << 16) | (v[2] << 8) | v[3]};
}

const char* attack_type_name(AttackType t) {
  switch (t) {
    case AttackType::kErrorOnEvent:
      return "error_on_event";
    case AttackType::kErrorOnError:
      return "error_on_error";
    case AttackType::kMissingResponse:
      return "missing_response";
    case AttackType::kMissingRequest:
      return "missing_request";
  }
  return "unknown";
}

AttackType attack_type_from_name(const std::string& name) {
  if (name == "error_on_event") return AttackType::kErrorOnEvent;
  if (name == "error_on_error") return AttackType::kErrorOnError;
  if (name == "missing_response") return AttackType::kMissingResponse;
  if (name == "missing_request") return AttackType::kMissingRequest;
  throw ConfigError("unknown attack type: " + name);
}

int attack_label(AttackType t) {
  switch (t) {
    case AttackType::kErrorOnEvent:
      return 1;
    case AttackType::kErrorOnError:
      return 2;
    case AttackType::kMissingResponse:
      return 3;
    case AttackType::kMissingRequest:
      return 4;
  }
  return 0;
}

namespace {

const char* device_kind_name(DeviceKind k) {
  switch (k) {
    case DeviceKind::kClient:
      return "client";
    case DeviceKind::kServer:
      return "server";
    case DeviceKind::kAttacker:
      return "attacker";
  }
  return "unknown";
}

DeviceKind device_kind_from_name(const std::string& n) {
  if (n == "client") return DeviceKind::kClient;
  if (n == "server") return DeviceKind::kServer;
  if (n == "attacker") return DeviceKind::kAttacker;
  throw ConfigError("unknown device type: " + n);
}

const char* rpc_kind_name(RpcKind k) {
  switch (k) {
    case RpcKind::kRequestResponse:
      return "request_response";
    case RpcKind::kFireAndForget:
      return "fire_and_forget";
    case RpcKind::kEvent:
      return "event";
  }
  return "unknown";
}

RpcKind rpc_kind_from_name(const std::string& n) {
  if (n == "request_response") return RpcKind::kRequestResponse;
  if (n == "fire_and_forget") return RpcKind::kFireAndForget;
  if (n == "event") return RpcKind::kEvent;
  throw ConfigError("unknown method kind: " + n);
}

const DeviceConfig* find_device(const ScenarioConfig& cfg,
                                const std::string& name) {
  for (const auto& d : cfg.devices)
    if (d.name == name) return &d;
  return nullptr;
}

const DeviceConfig* attacker_device(const ScenarioConfig& cfg) {
  for (const auto& d : cfg.devices)
    if (d.kind == DeviceKind::kAttacker) return &d;
  return nullptr;
}

// SOME/IP client ids are derived from the position among client devices.
std::uint16_t someip_client_id(const ScenarioConfig& cfg,
                               const std::string& client_name) {
  std::uint16_t ordinal = 0;
  for (const auto& d : cfg.devices) {
    if (d.kind != DeviceKind::kClient) continue;
    ++ordinal;
    if (d.name == client_name) return static_cast<std::uint16_t>(0x0C00 + ordinal);
  }
  throw ConfigError("not a client device: " + client_name);
}

struct Episode {
  const ServiceConfig* service;
  const MethodConfig* method;
  const DeviceConfig* client;
  const DeviceConfig* server;
  std::uint16_t client_id;
  std::uint16_t session_id;
  std::size_t index;
};

std::vector<Episode> enumerate_episodes(const ScenarioConfig& cfg) {
  std::vector<Episode> out;
  std::uint16_t session = 0;
  for (const auto& svc : cfg.services) {
    const DeviceConfig* server = find_device(cfg, svc.offered_by);
    for (const auto& client_name : svc.requested_by) {
      const DeviceConfig* client = find_device(cfg, client_name);
      for (const auto& m : svc.methods) {
        ++session;
        out.push_back({&svc, &m, client, server,
                       someip_client_id(cfg, client_name), session,
                       out.size()});
      }
    }
  }
  return out;
}

LabeledPacket frame(std::uint64_t ts, const DeviceConfig& src,
                    const DeviceConfig& dst, SomeIpMessage msg) {
  LabeledPacket p;
  p.timestamp_us = ts;
  p.src_mac = src.mac;
  p.dst_mac = dst.mac;
  p.src_ip = src.ip;
  p.dst_ip = dst.ip;
  p.src_port = src.send_port;
  p.dst_port = dst.recv_port;
  p.someip = std::move(msg);
  return p;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (devices.empty()) throw ConfigError("no devices configured");
  std::set<std::string> names;
  std::set<std::pair<std::uint32_t, std::uint16_t>> endpoints;
  std::size_t attackers = 0;
  for (const auto& d : devices) {
    if (d.name.empty()) throw ConfigError("device with empty name");
    if (!names.insert(d.name).second)
      throw ConfigError("duplicate device name: " + d.name);
    if (!endpoints.insert({d.ip.value, d.recv_port}).second)
      throw ConfigError("duplicate (ip, recv_port) endpoint on " + d.name);
    if (d.kind == DeviceKind::kAttacker) ++attackers;
  }
  if (attackers != 1)
    throw ConfigError("expected exactly one attacker device, found " +
                      std::to_string(attackers));
  for (const auto& svc : services) {
    const DeviceConfig* server = find_device(*this, svc.offered_by);
    if (server == nullptr)
      throw ConfigError("service references unknown device: " + svc.offered_by);
    if (server->kind != DeviceKind::kServer)
      throw ConfigError("service offered by non-server device: " + svc.offered_by);
    if (svc.requested_by.empty())
      throw ConfigError("service without requesting clients");
    for (const auto& c : svc.requested_by) {
      const DeviceConfig* client = find_device(*this, c);
      if (client == nullptr)
        throw ConfigError("service references unknown device: " + c);
      if (client->kind != DeviceKind::kClient)
        throw ConfigError("service requested by non-client device: " + c);
    }
    if (svc.methods.empty()) throw ConfigError("service without methods");
    std::set<std::uint16_t> mids;
    for (const auto& m : svc.methods) {
      if (!mids.insert(m.method_id).second)
        throw ConfigError("duplicate method id in service");
      if (m.kind == RpcKind::kEvent && (m.method_id & 0x8000) == 0)
        throw ConfigError("event method ids must have the high bit set");
      if (m.kind != RpcKind::kEvent && (m.method_id & 0x8000) != 0)
        throw ConfigError("non-event method ids must not have the high bit set");
    }
  }
  if (packets_per_client_method_service == 0)
    throw ConfigError("packets_per_client_method_service must be positive");
  if (attacker_response_ms_min < 0 ||
      attacker_response_ms_min > attacker_response_ms_max)
    throw ConfigError("bad attacker response window");
}

nlohmann::json ScenarioConfig::to_json() const {
  nlohmann::json j;
  j["devices"] = nlohmann::json::array();
  for (const auto& d : devices) {
    j["devices"].push_back({{"name", d.name},
                            {"type", device_kind_name(d.kind)},
                            {"mac", d.mac.to_string()},
                            {"ip", d.ip.to_string()},
                            {"send_port", d.send_port},
                            {"recv_port", d.recv_port}});
  }
  j["services"] = nlohmann::json::array();
  for (const auto& s : services) {
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& m : s.methods)
      methods.push_back(
          {{"method_id", m.method_id}, {"kind", rpc_kind_name(m.kind)}});
    j["services"].push_back({{"service_id", s.service_id},
                             {"offered_by", s.offered_by},
                             {"requested_by", s.requested_by},
                             {"methods", methods}});
  }
  j["packets_per_client_method_service"] = packets_per_client_method_service;
  j["attacks_to_execute"] = attacks_to_execute;
  j["attacker_response_ms"] = {{"min", attacker_response_ms_min},
                               {"max", attacker_response_ms_max}};
  if (attack_type) j["attack_type"] = attack_type_name(*attack_type);
  j["seed"] = seed;
  j["output"] = output_path;
  return j;
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j) {
  try {
    ScenarioConfig cfg;
    for (const auto& dj : j.at("devices")) {
      DeviceConfig d;
      d.name = dj.at("name").get<std::string>();
      d.kind = device_kind_from_name(dj.at("type").get<std::string>());
      d.mac = MacAddr::parse(dj.at("mac").get<std::string>());
      d.ip = Ipv4Addr::parse(dj.at("ip").get<std::string>());
      d.send_port = dj.at("send_port").get<std::uint16_t>();
      d.recv_port = dj.at("recv_port").get<std::uint16_t>();
      cfg.devices.push_back(std::move(d));
    }
    for (const auto& sj : j.at("services")) {
      ServiceConfig s;
      s.service_id = sj.at("service_id").get<std::uint16_t>();
      s.offered_by = sj.at("offered_by").get<std::string>();
      s.requested_by = sj.at("requested_by").get<std::vector<std::string>>();
      for (const auto& mj : sj.at("methods")) {
        MethodConfig m;
        m.method_id = mj.at("method_id").get<std::uint16_t>();
        m.kind = rpc_kind_from_name(mj.at("kind").get<std::string>());
        s.methods.push_back(m);
      }
      cfg.services.push_back(std::move(s));
    }
    cfg.packets_per_client_method_service =
        j.at("packets_per_client_method_service").get<std::uint32_t>();
    cfg.attacks_to_execute = j.at("attacks_to_execute").get<std::uint32_t>();
    cfg.attacker_response_ms_min = j.at("attacker_response_ms").at("min").get<double>();
    cfg.attacker_response_ms_max = j.at("attacker_response_ms").at("max").get<double>();
    if (j.contains("attack_type") && !j.at("attack_type").is_null())
      cfg.attack_type = attack_type_from_name(j.at("attack_type").get<std::string>());
    cfg.seed = j.value("seed", std::uint64_t{1});
    cfg.output_path = j.value("output", std::string{"output.pcap"});
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad scenario config: ") + e.what());
  }
}

ScenarioConfig ScenarioConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse scenario config " + path + ": " + e.what());
  }
  return from_json(j);
}

std::vector<LabeledPacket> simulate_normal(const ScenarioConfig& cfg) {
  cfg.validate();
  std::vector<LabeledPacket> out;
  for (const Episode& ep : enumerate_episodes(cfg)) {
    DetRng rng(mix_seed(cfg.seed, ep.index + 1));
    std::uint64_t t = kBaseTimestampUs + rng.uniform_u32(0, kEpisodeJitterMaxUs);
    SomeIpHeader base;
    base.service_id = ep.service->service_id;
    base.method_id = ep.method->method_id;
    base.client_id = ep.client_id;
    base.session_id = ep.session_id;

    switch (ep.method->kind) {
      case RpcKind::kRequestResponse: {
        std::uint32_t calls = cfg.packets_per_client_method_service / 2;
        for (std::uint32_t i = 0; i < calls; ++i) {
          out.push_back(frame(
              t, *ep.client, *ep.server,
              make_message(base.service_id, base.method_id, base.client_id,
                           base.session_id, MessageType::kRequest, 0x00,
                           call_payload(base, i, 0x01))));
          std::uint64_t rt =
              t + rng.uniform_u32(kServerDelayMinUs, kServerDelayMaxUs);
          out.push_back(frame(
              rt, *ep.server, *ep.client,
              make_message(base.service_id, base.method_id, base.client_id,
                           base.session_id, MessageType::kResponse, 0x00,
                           call_payload(base, i, 0x02))));
          t = rt + rng.uniform_u32(kClientGapMinUs, kClientGapMaxUs);
        }
        break;
      }
      case RpcKind::kFireAndForget: {
        for (std::uint32_t i = 0; i < cfg.packets_per_client_method_service; ++i) {
          out.push_back(frame(
              t, *ep.client, *ep.server,
              make_message(base.service_id, base.method_id, base.client_id,
                           base.session_id, MessageType::kRequestNoReturn, 0x00,
                           call_payload(base, i, 0x04))));
          t += rng.uniform_u32(kClientGapMinUs, kClientGapMaxUs);
        }
        break;
      }
      case RpcKind::kEvent: {
        for (std::uint32_t i = 0; i < cfg.packets_per_client_method_service; ++i) {
          out.push_back(frame(
              t, *ep.server, *ep.client,
              make_message(base.service_id, base.method_id, base.client_id,
                           base.session_id, MessageType::kNotification, 0x00,
                           call_payload(base, i, 0x03))));
          t += rng.uniform_u32(kClientGapMinUs, kClientGapMaxUs);
        }
        break;
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const LabeledPacket& a, const LabeledPacket& b) {
                     return a.timestamp_us < b.timestamp_us;
                   });
  return out;
}

namespace {

struct SessionRef {
  std::vector<std::size_t> packet_indices;  // time order
  bool has_notification = false;
  bool has_response = false;
};

using SessionKey = std::tuple<std::uint16_t, std::uint16_t, std::uint16_t>;

const DeviceConfig* device_by_ip(const ScenarioConfig& cfg, Ipv4Addr ip) {
  for (const auto& d : cfg.devices)
    if (d.ip == ip) return &d;
  return nullptr;
}

}  // namespace

std::vector<LabeledPacket> inject_attack(std::vector<LabeledPacket> stream,
                                         const ScenarioConfig& cfg) {
  if (cfg.attacks_to_execute == 0) return stream;
  if (!cfg.attack_type)
    throw ConfigError("attacks_to_execute > 0 but no attack_type configured");
  const DeviceConfig* attacker = attacker_device(cfg);
  if (attacker == nullptr) throw ConfigError("no attacker device configured");

  std::map<SessionKey, SessionRef> sessions;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto& h = stream[i].someip.header;
    auto& ref = sessions[{h.service_id, h.client_id, h.session_id}];
    ref.packet_indices.push_back(i);
    if (h.message_type == MessageType::kNotification) ref.has_notification = true;
    if (h.message_type == MessageType::kResponse) ref.has_response = true;
  }

  AttackType attack = *cfg.attack_type;
  std::vector<const SessionRef*> eligible;
  for (const auto& [key, ref] : sessions) {
    bool ok = attack == AttackType::kErrorOnEvent ? ref.has_notification
                                                  : ref.has_response;
    if (ok) eligible.push_back(&ref);
  }
  if (eligible.size() < cfg.attacks_to_execute)
    throw NotEnoughSessions(
        "need " + std::to_string(cfg.attacks_to_execute) + " sessions for " +
        std::string(attack_type_name(attack)) + ", only " +
        std::to_string(eligible.size()) + " eligible");

  DetRng rng(mix_seed(cfg.seed, 0xA77AC4));
  std::vector<std::size_t> chosen =
      rng.sample_without_replacement(eligible.size(), cfg.attacks_to_execute);
  std::sort(chosen.begin(), chosen.end());

  const auto delay_us = [&rng, &cfg]() {
    auto lo = static_cast<std::uint32_t>(cfg.attacker_response_ms_min * 1000.0);
    auto hi = static_cast<std::uint32_t>(cfg.attacker_response_ms_max * 1000.0);
    return rng.uniform_u32(lo, hi);
  };

  int label = attack_label(attack);
  std::vector<std::size_t> to_delete;
  std::vector<LabeledPacket> to_insert;

  for (std::size_t ci : chosen) {
    const SessionRef& ref = *eligible[ci];
    switch (attack) {
      case AttackType::kErrorOnEvent: {
        // Answer the session's final notification with a forged error.
        std::size_t trig = ref.packet_indices.back();
        for (auto it = ref.packet_indices.rbegin();
             it != ref.packet_indices.rend(); ++it) {
          if (stream[*it].someip.header.message_type ==
              MessageType::kNotification) {
            trig = *it;
            break;
          }
        }
        const LabeledPacket& n = stream[trig];
        const DeviceConfig* server = device_by_ip(cfg, n.src_ip);
        if (server == nullptr) throw ConfigError("notification source has no device");
        LabeledPacket err = frame(
            n.timestamp_us + delay_us(), *attacker, *server,
            make_message(n.someip.header.service_id, n.someip.header.method_id,
                         n.someip.header.client_id, n.someip.header.session_id,
                         MessageType::kError, kErrorReturnCode, {}));
        err.label = label;
        to_insert.push_back(std::move(err));
        break;
      }
      case AttackType::kErrorOnError: {
        // Forge an error reply to the final completed call, then a second
        // error answering the first.
        std::size_t trig = ref.packet_indices.back();
        for (auto it = ref.packet_indices.rbegin();
             it != ref.packet_indices.rend(); ++it) {
          if (stream[*it].someip.header.message_type == MessageType::kResponse) {
            trig = *it;
            break;
          }
        }
        const LabeledPacket& resp = stream[trig];
        const DeviceConfig* server = device_by_ip(cfg, resp.src_ip);
        const DeviceConfig* client = device_by_ip(cfg, resp.dst_ip);
        if (server == nullptr || client == nullptr)
          throw ConfigError("response endpoints have no device");
        const auto& h = resp.someip.header;
        LabeledPacket err1 = frame(
            resp.timestamp_us + delay_us(), *attacker, *client,
            make_message(h.service_id, h.method_id, h.client_id, h.session_id,
                         MessageType::kError, kErrorReturnCode, {}));
        err1.label = label;
        LabeledPacket err2 = frame(
            err1.timestamp_us + delay_us(), *attacker, *server,
            make_message(h.service_id, h.method_id, h.client_id, h.session_id,
                         MessageType::kError, kErrorReturnCode, {}));
        err2.label = label;
        to_insert.push_back(std::move(err1));
        to_insert.push_back(std::move(err2));
        break;
      }
      case AttackType::kMissingResponse: {
        // Drop one server response; the orphaned request carries the label.
        std::vector<std::size_t> reqs, resps;
        for (std::size_t pi : ref.packet_indices) {
          MessageType t = stream[pi].someip.header.message_type;
          if (t == MessageType::kRequest) reqs.push_back(pi);
          if (t == MessageType::kResponse) resps.push_back(pi);
        }
        std::uint32_t k =
            rng.uniform_u32(0, static_cast<std::uint32_t>(resps.size() - 1));
        to_delete.push_back(resps[k]);
        stream[reqs[k]].label = label;
        break;
      }
      case AttackType::kMissingRequest: {
        // Re-send one already-delivered response from the attacker.
        std::vector<std::size_t> resps;
        for (std::size_t pi : ref.packet_indices)
          if (stream[pi].someip.header.message_type == MessageType::kResponse)
            resps.push_back(pi);
        std::uint32_t k =
            rng.uniform_u32(0, static_cast<std::uint32_t>(resps.size() - 1));
        const LabeledPacket& resp = stream[resps[k]];
        LabeledPacket dup = resp;
        dup.timestamp_us = resp.timestamp_us + delay_us();
        dup.src_mac = attacker->mac;
        dup.src_ip = attacker->ip;
        dup.src_port = attacker->send_port;
        dup.label = label;
        to_insert.push_back(std::move(dup));
        break;
      }
    }
  }

  std::sort(to_delete.begin(), to_delete.end(), std::greater<>());
  for (std::size_t i : to_delete)
    stream.erase(stream.begin() + static_cast<std::ptrdiff_t>(i));
  for (auto& p : to_insert) stream.push_back(std::move(p));
  std::stable_sort(stream.begin(), stream.end(),
                   [](const LabeledPacket& a, const LabeledPacket& b) {
                     return a.timestamp_us < b.timestamp_us;
                   });
  return stream;
}

std::vector<LabeledPacket> generate_scenario(const ScenarioConfig& cfg) {
  std::vector<LabeledPacket> stream = simulate_normal(cfg);
  if (cfg.attacks_to_execute > 0) stream = inject_attack(std::move(stream), cfg);
  return stream;
}

ScenarioConfig reference_scenario() {
  ScenarioConfig cfg;
  auto mac = [](std::uint8_t group, std::uint8_t idx) {
    return MacAddr{{0x02, 0x00, 0x00, 0x00, group, idx}};
  };
  auto ip = [](std::uint32_t host) { return Ipv4Addr{(10u << 24) | host}; };
  for (int i = 1; i <= 8; ++i) {
    cfg.devices.push_back({"server" + std::to_string(i), DeviceKind::kServer,
                           mac(0x01, std::uint8_t(i)), ip(std::uint32_t(i)),
                           std::uint16_t(40000 + i), std::uint16_t(30500 + i)});
  }
  for (int i = 1; i <= 8; ++i) {
    cfg.devices.push_back({"client" + std::to_string(i), DeviceKind::kClient,
                           mac(0x02, std::uint8_t(i)), ip(std::uint32_t(100 + i)),
                           std::uint16_t(41000 + i), std::uint16_t(31500 + i)});
  }
  cfg.devices.push_back({"attacker1", DeviceKind::kAttacker, mac(0xFF, 0x01),
                         ip(200), 42001, 32501});

  std::vector<std::string> all_clients;
  for (int i = 1; i <= 8; ++i) all_clients.push_back("client" + std::to_string(i));
  for (std::uint16_t s = 1; s <= 3; ++s) {
    ServiceConfig svc;
    svc.service_id = s;
    svc.offered_by = "server" + std::to_string(s);
    svc.requested_by = all_clients;
    svc.methods = {{0x0001, RpcKind::kRequestResponse},
                   {0x0002, RpcKind::kFireAndForget},
                   {0x8001, RpcKind::kEvent}};
    cfg.services.push_back(std::move(svc));
  }
  cfg.packets_per_client_method_service = 50;
  cfg.attacks_to_execute = 10;
  cfg.attacker_response_ms_min = 1.0;
  cfg.attacker_response_ms_max = 3.0;
  cfg.seed = 1;
  cfg.output_path = "output.pcap";
  return cfg;
}

}  // namespace someip_ids
