#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <unistd.h>

#include "doctest.h"
#include "someip_ids/netsim.hpp"
#include "someip_ids/pcap.hpp"
#include "someip_ids/util.hpp"

using namespace someip_ids;
namespace fs = std::filesystem;

namespace {

ScenarioConfig tiny_scenario(RpcKind kind, std::uint32_t packets_per = 4) {
  ScenarioConfig cfg;
  cfg.devices = {
      {"server1", DeviceKind::kServer, MacAddr::parse("02:00:00:00:01:01"),
       Ipv4Addr::parse("10.0.0.1"), 40001, 30501},
      {"client1", DeviceKind::kClient, MacAddr::parse("02:00:00:00:02:01"),
       Ipv4Addr::parse("10.0.0.101"), 41001, 31501},
      {"attacker1", DeviceKind::kAttacker, MacAddr::parse("02:00:00:00:ff:01"),
       Ipv4Addr::parse("10.0.0.200"), 42001, 32501},
  };
  std::uint16_t method_id =
      kind == RpcKind::kEvent ? std::uint16_t{0x8001} : std::uint16_t{0x0001};
  cfg.services = {{0x0001, "server1", {"client1"}, {{method_id, kind}}}};
  cfg.packets_per_client_method_service = packets_per;
  cfg.attacks_to_execute = 0;
  cfg.attack_type = std::nullopt;
  cfg.seed = 42;
  return cfg;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("netsim_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

const DeviceConfig& device(const ScenarioConfig& cfg, const std::string& name) {
  for (const auto& d : cfg.devices)
    if (d.name == name) return d;
  throw std::logic_error("no device " + name);
}

// Sessions touched by an attack, keyed by (service, client_id, session_id).
std::map<std::tuple<std::uint16_t, std::uint16_t, std::uint16_t>,
         std::vector<const LabeledPacket*>>
sessions_of(const std::vector<LabeledPacket>& packets) {
  std::map<std::tuple<std::uint16_t, std::uint16_t, std::uint16_t>,
           std::vector<const LabeledPacket*>>
      m;
  for (const auto& p : packets)
    m[{p.someip.header.service_id, p.someip.header.client_id,
       p.someip.header.session_id}]
        .push_back(&p);
  return m;
}

}  // namespace

TEST_CASE("request-response episode alternates and shares a session id") {
  ScenarioConfig cfg = tiny_scenario(RpcKind::kRequestResponse);
  std::vector<LabeledPacket> packets = simulate_normal(cfg);
  REQUIRE(packets.size() == 4);
  const DeviceConfig& server = device(cfg, "server1");
  const DeviceConfig& client = device(cfg, "client1");
  for (std::size_t i = 0; i < packets.size(); ++i) {
    const LabeledPacket& p = packets[i];
    CHECK(p.label == 0);
    CHECK(p.someip.header.service_id == 0x0001);
    CHECK(p.someip.header.method_id == 0x0001);
    CHECK(p.someip.header.session_id == packets[0].someip.header.session_id);
    if (i % 2 == 0) {
      CHECK(p.someip.header.message_type == MessageType::kRequest);
      CHECK(p.src_ip == client.ip);
      CHECK(p.dst_ip == server.ip);
      CHECK(p.src_port == client.send_port);
      CHECK(p.dst_port == server.recv_port);
      CHECK(p.src_mac == client.mac);
    } else {
      CHECK(p.someip.header.message_type == MessageType::kResponse);
      CHECK(p.src_ip == server.ip);
      CHECK(p.dst_ip == client.ip);
    }
    if (i > 0) CHECK(p.timestamp_us >= packets[i - 1].timestamp_us);
  }
  CHECK(packets[0].someip.header.client_id ==
        packets[1].someip.header.client_id);
}

TEST_CASE("fire-and-forget and event episodes are one-way") {
  ScenarioConfig ff = tiny_scenario(RpcKind::kFireAndForget);
  std::vector<LabeledPacket> ff_packets = simulate_normal(ff);
  REQUIRE(ff_packets.size() == 4);
  for (const auto& p : ff_packets) {
    CHECK(p.someip.header.message_type == MessageType::kRequestNoReturn);
    CHECK(p.src_ip == device(ff, "client1").ip);
  }

  ScenarioConfig ev = tiny_scenario(RpcKind::kEvent);
  std::vector<LabeledPacket> ev_packets = simulate_normal(ev);
  REQUIRE(ev_packets.size() == 4);
  for (const auto& p : ev_packets) {
    CHECK(p.someip.header.message_type == MessageType::kNotification);
    CHECK(p.src_ip == device(ev, "server1").ip);
    CHECK(p.someip.header.method_id == 0x8001);
  }
}

TEST_CASE("reference scenario produces one episode per service client method") {
  ScenarioConfig cfg = reference_scenario();
  cfg.attack_type = std::nullopt;
  cfg.attacks_to_execute = 0;
  std::vector<LabeledPacket> packets = simulate_normal(cfg);
  CHECK(packets.size() == 3 * 8 * 3 * 50);
  auto sess = sessions_of(packets);
  CHECK(sess.size() == 3 * 8 * 3);
  for (const auto& [key, pkts] : sess) CHECK(pkts.size() == 50);
  std::set<std::uint16_t> session_ids;
  for (const auto& [key, pkts] : sess) session_ids.insert(std::get<2>(key));
  CHECK(session_ids.size() == 72);
  CHECK(std::is_sorted(packets.begin(), packets.end(),
                       [](const LabeledPacket& a, const LabeledPacket& b) {
                         return a.timestamp_us < b.timestamp_us;
                       }));
}

TEST_CASE("config validation rejects broken scenarios") {
  SUBCASE("duplicate device name") {
    ScenarioConfig cfg = tiny_scenario(RpcKind::kRequestResponse);
    cfg.devices.push_back(cfg.devices[0]);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("two attackers") {
    ScenarioConfig cfg = tiny_scenario(RpcKind::kRequestResponse);
    DeviceConfig second = device(cfg, "attacker1");
    second.name = "attacker2";
    second.ip = Ipv4Addr::parse("10.0.0.201");
    second.mac = MacAddr::parse("02:00:00:00:ff:02");
    second.send_port = 42002;
    second.recv_port = 32502;
    cfg.devices.push_back(second);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("event method without the event id bit") {
    ScenarioConfig cfg = tiny_scenario(RpcKind::kRequestResponse);
    cfg.services[0].methods = {{0x0002, RpcKind::kEvent}};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("plain method with the event id bit") {
    ScenarioConfig cfg = tiny_scenario(RpcKind::kRequestResponse);
    cfg.services[0].methods = {{0x8002, RpcKind::kRequestResponse}};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("service offered by a non-server") {
    ScenarioConfig cfg = tiny_scenario(RpcKind::kRequestResponse);
    cfg.services[0].offered_by = "client1";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("attack requested without an attacker device") {
    ScenarioConfig cfg = tiny_scenario(RpcKind::kRequestResponse);
    cfg.devices.pop_back();
    cfg.attack_type = AttackType::kErrorOnError;
    cfg.attacks_to_execute = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("zero attacks is a valid attack-free run") {
    ScenarioConfig cfg = tiny_scenario(RpcKind::kRequestResponse);
    cfg.attacks_to_execute = 0;
    CHECK_NOTHROW(cfg.validate());
  }
}

TEST_CASE("config json round-trips") {
  ScenarioConfig cfg = reference_scenario();
  ScenarioConfig back = ScenarioConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  CHECK(back.devices.size() == 17);
  CHECK(back.services.size() == 3);
  CHECK(back.packets_per_client_method_service == 50);
}

TEST_CASE("error_on_event injects a labeled error answering the last event") {
  ScenarioConfig cfg = reference_scenario();
  cfg.attack_type = AttackType::kErrorOnEvent;
  cfg.seed = 7;
  std::vector<LabeledPacket> packets = generate_scenario(cfg);
  CHECK(packets.size() == 3600 + 10);

  const DeviceConfig& attacker = device(cfg, "attacker1");
  auto sess = sessions_of(packets);
  int attacked_sessions = 0;
  for (const auto& [key, pkts] : sess) {
    std::vector<const LabeledPacket*> labeled;
    for (const auto* p : pkts)
      if (p->label != 0) labeled.push_back(p);
    if (labeled.empty()) continue;
    ++attacked_sessions;
    REQUIRE(labeled.size() == 1);
    const LabeledPacket* err = labeled[0];
    CHECK(err->label == 1);
    CHECK(err->someip.header.message_type == MessageType::kError);
    CHECK(err->src_mac == attacker.mac);
    CHECK(err->src_ip == attacker.ip);
    CHECK(err->src_port == attacker.send_port);
    // every real packet in the session is a notification from the server
    const LabeledPacket* last_event = nullptr;
    for (const auto* p : pkts)
      if (p->label == 0) {
        CHECK(p->someip.header.message_type == MessageType::kNotification);
        if (!last_event || p->timestamp_us > last_event->timestamp_us)
          last_event = p;
      }
    REQUIRE(last_event != nullptr);
    // the error answers the event sender within the attacker response window
    CHECK(err->dst_ip == last_event->src_ip);
    CHECK(err->timestamp_us >= last_event->timestamp_us + 1000);
    CHECK(err->timestamp_us <= last_event->timestamp_us + 3000);
  }
  CHECK(attacked_sessions == 10);
}

TEST_CASE("error_on_error injects two labeled errors after the last response") {
  ScenarioConfig cfg = reference_scenario();
  cfg.attack_type = AttackType::kErrorOnError;
  cfg.seed = 7;
  std::vector<LabeledPacket> packets = generate_scenario(cfg);
  CHECK(packets.size() == 3600 + 20);

  const DeviceConfig& attacker = device(cfg, "attacker1");
  auto sess = sessions_of(packets);
  int attacked_sessions = 0;
  for (const auto& [key, pkts] : sess) {
    std::vector<const LabeledPacket*> labeled;
    for (const auto* p : pkts)
      if (p->label != 0) labeled.push_back(p);
    if (labeled.empty()) continue;
    ++attacked_sessions;
    REQUIRE(labeled.size() == 2);
    for (const auto* e : labeled) {
      CHECK(e->label == 2);
      CHECK(e->someip.header.message_type == MessageType::kError);
      CHECK(e->src_mac == attacker.mac);
      CHECK(e->src_ip == attacker.ip);
    }
    CHECK(labeled[0]->timestamp_us <= labeled[1]->timestamp_us);
    // second error answers the first: opposite directions
    CHECK(labeled[0]->dst_ip != labeled[1]->dst_ip);
    CHECK(labeled[1]->timestamp_us >= labeled[0]->timestamp_us + 1000);
    CHECK(labeled[1]->timestamp_us <= labeled[0]->timestamp_us + 3000);
  }
  CHECK(attacked_sessions == 10);
}

TEST_CASE("missing_response deletes a response and labels the orphan request") {
  ScenarioConfig cfg = reference_scenario();
  cfg.attack_type = AttackType::kMissingResponse;
  cfg.seed = 7;
  std::vector<LabeledPacket> packets = generate_scenario(cfg);
  CHECK(packets.size() == 3600 - 10);

  auto sess = sessions_of(packets);
  int attacked_sessions = 0;
  for (const auto& [key, pkts] : sess) {
    std::vector<const LabeledPacket*> labeled;
    int requests = 0, responses = 0;
    for (const auto* p : pkts) {
      if (p->label != 0) labeled.push_back(p);
      if (p->someip.header.message_type == MessageType::kRequest) ++requests;
      if (p->someip.header.message_type == MessageType::kResponse) ++responses;
    }
    if (labeled.empty()) continue;
    ++attacked_sessions;
    REQUIRE(labeled.size() == 1);
    CHECK(labeled[0]->label == 3);
    CHECK(labeled[0]->someip.header.message_type == MessageType::kRequest);
    CHECK(pkts.size() == 49);
    CHECK(requests == 25);
    CHECK(responses == 24);
  }
  CHECK(attacked_sessions == 10);
}

TEST_CASE("missing_request duplicates a response from the attacker") {
  ScenarioConfig cfg = reference_scenario();
  cfg.attack_type = AttackType::kMissingRequest;
  cfg.seed = 7;
  std::vector<LabeledPacket> packets = generate_scenario(cfg);
  CHECK(packets.size() == 3600 + 10);

  const DeviceConfig& attacker = device(cfg, "attacker1");
  auto sess = sessions_of(packets);
  int attacked_sessions = 0;
  for (const auto& [key, pkts] : sess) {
    std::vector<const LabeledPacket*> labeled;
    int requests = 0, responses = 0;
    for (const auto* p : pkts) {
      if (p->label != 0) labeled.push_back(p);
      if (p->someip.header.message_type == MessageType::kRequest) ++requests;
      if (p->someip.header.message_type == MessageType::kResponse) ++responses;
    }
    if (labeled.empty()) continue;
    ++attacked_sessions;
    REQUIRE(labeled.size() == 1);
    const LabeledPacket* dup = labeled[0];
    CHECK(dup->label == 4);
    CHECK(dup->someip.header.message_type == MessageType::kResponse);
    CHECK(dup->src_mac == attacker.mac);
    CHECK(dup->src_ip == attacker.ip);
    CHECK(responses == requests + 1);
    // it shadows a legitimate response of the same session
    bool found_original = false;
    for (const auto* p : pkts)
      if (p->label == 0 &&
          p->someip.header.message_type == MessageType::kResponse &&
          p->someip.payload == dup->someip.payload)
        found_original = true;
    CHECK(found_original);
  }
  CHECK(attacked_sessions == 10);
}

TEST_CASE("attack needs enough eligible sessions") {
  ScenarioConfig cfg = tiny_scenario(RpcKind::kRequestResponse);
  cfg.attack_type = AttackType::kMissingResponse;
  cfg.attacks_to_execute = 2;  // only one session exists
  CHECK_THROWS_AS(generate_scenario(cfg), NotEnoughSessions);
}

TEST_CASE("same seed reproduces the identical packet stream") {
  ScenarioConfig cfg = reference_scenario();
  cfg.attack_type = AttackType::kErrorOnError;
  cfg.seed = 99;
  std::vector<LabeledPacket> a = generate_scenario(cfg);
  std::vector<LabeledPacket> b = generate_scenario(cfg);
  CHECK(a == b);
  cfg.seed = 100;
  std::vector<LabeledPacket> c = generate_scenario(cfg);
  CHECK(a != c);
}

TEST_CASE("pcap files have the documented sizes") {
  TempDir tmp;
  write_pcap({}, tmp.file("empty.pcap"));
  CHECK(fs::file_size(tmp.file("empty.pcap")) == 24);

  LabeledPacket p;
  p.timestamp_us = 1000;
  p.src_mac = MacAddr::parse("02:00:00:00:02:01");
  p.dst_mac = MacAddr::parse("02:00:00:00:01:01");
  p.src_ip = Ipv4Addr::parse("10.0.0.101");
  p.dst_ip = Ipv4Addr::parse("10.0.0.1");
  p.src_port = 41001;
  p.dst_port = 30501;
  p.someip = make_message(1, 1, 1, 1, MessageType::kRequest, 0, {});
  write_pcap({p}, tmp.file("one.pcap"));
  // 24 global + 16 record + 14 eth + 20 ip + 8 udp + 16 message
  CHECK(fs::file_size(tmp.file("one.pcap")) == 98);
}

TEST_CASE("pcap round-trips a generated capture") {
  TempDir tmp;
  ScenarioConfig cfg = tiny_scenario(RpcKind::kRequestResponse, 6);
  std::vector<LabeledPacket> packets = simulate_normal(cfg);
  std::string path = tmp.file("round.pcap");
  write_pcap(packets, path);
  PcapReadResult rr = read_pcap(path);
  CHECK(rr.diagnostics.empty());
  REQUIRE(rr.packets.size() == packets.size());
  for (std::size_t i = 0; i < packets.size(); ++i) {
    CHECK(rr.packets[i].timestamp_us == packets[i].timestamp_us);
    CHECK(rr.packets[i].src_mac == packets[i].src_mac);
    CHECK(rr.packets[i].dst_mac == packets[i].dst_mac);
    CHECK(rr.packets[i].src_ip == packets[i].src_ip);
    CHECK(rr.packets[i].dst_ip == packets[i].dst_ip);
    CHECK(rr.packets[i].src_port == packets[i].src_port);
    CHECK(rr.packets[i].dst_port == packets[i].dst_port);
    CHECK(rr.packets[i].someip == packets[i].someip);
    CHECK(rr.packets[i].label == 0);
  }
}

TEST_CASE("unordered timestamps are rejected at write time") {
  TempDir tmp;
  ScenarioConfig cfg = tiny_scenario(RpcKind::kRequestResponse);
  std::vector<LabeledPacket> packets = simulate_normal(cfg);
  std::swap(packets[0], packets[1]);
  CHECK_THROWS_AS(write_pcap(packets, tmp.file("bad.pcap")),
                  std::invalid_argument);
}

TEST_CASE("read_pcap rejects foreign and truncated files") {
  TempDir tmp;
  SUBCASE("bad magic") {
    std::ofstream f(tmp.file("junk.pcap"), std::ios::binary);
    f << "this is not a capture file at all.......";
    f.close();
    try {
      read_pcap(tmp.file("junk.pcap"));
      FAIL("expected PcapError");
    } catch (const PcapError& e) {
      CHECK(e.kind == PcapError::Kind::kBadMagic);
    }
  }
  SUBCASE("truncated record") {
    ScenarioConfig cfg = tiny_scenario(RpcKind::kRequestResponse);
    std::vector<LabeledPacket> packets = simulate_normal(cfg);
    std::string path = tmp.file("trunc.pcap");
    write_pcap(packets, path);
    fs::resize_file(path, fs::file_size(path) - 7);
    try {
      read_pcap(path);
      FAIL("expected PcapError");
    } catch (const PcapError& e) {
      CHECK(e.kind == PcapError::Kind::kMalformedRecord);
      CHECK(e.record_index == packets.size() - 1);
    }
  }
  SUBCASE("missing file") {
    try {
      read_pcap(tmp.file("nope.pcap"));
      FAIL("expected PcapError");
    } catch (const PcapError& e) {
      CHECK(e.kind == PcapError::Kind::kIo);
    }
  }
}

TEST_CASE("non-SOMEIP frames are skipped with diagnostics") {
  TempDir tmp;
  std::string path = tmp.file("mixed.pcap");
  // valid global header, then one ARP frame record
  std::vector<std::uint8_t> out;
  put_u32le(out, 0xA1B2C3D4);
  put_u16le(out, 2);
  put_u16le(out, 4);
  put_u32le(out, 0);
  put_u32le(out, 0);
  put_u32le(out, 65535);
  put_u32le(out, 1);
  std::vector<std::uint8_t> frame(14, 0);
  frame[12] = 0x08;  // ethertype 0x0806 = ARP
  frame[13] = 0x06;
  put_u32le(out, 1);  // ts seconds
  put_u32le(out, 0);
  put_u32le(out, static_cast<std::uint32_t>(frame.size()));
  put_u32le(out, static_cast<std::uint32_t>(frame.size()));
  out.insert(out.end(), frame.begin(), frame.end());
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  f.close();

  PcapReadResult rr = read_pcap(path);
  CHECK(rr.packets.empty());
  REQUIRE(rr.diagnostics.size() == 1);
}

TEST_CASE("label sidecars round-trip and catch index mismatches") {
  TempDir tmp;
  ScenarioConfig cfg = reference_scenario();
  cfg.attack_type = AttackType::kMissingRequest;
  cfg.seed = 21;
  std::vector<LabeledPacket> packets = generate_scenario(cfg);
  std::string path = tmp.file("labels.jsonl");
  write_labels(packets, path);
  std::vector<int> labels = read_labels(path, packets.size());
  REQUIRE(labels.size() == packets.size());
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < packets.size(); ++i) {
    CHECK(labels[i] == packets[i].label);
    if (labels[i] != 0) ++nonzero;
  }
  CHECK(nonzero == 10);

  SUBCASE("wrong expected count") {
    try {
      read_labels(path, packets.size() - 1);
      FAIL("expected PcapError");
    } catch (const PcapError& e) {
      CHECK(e.kind == PcapError::Kind::kIndexMismatch);
    }
  }
  SUBCASE("apply_labels restores the original labels") {
    std::string pcap_path = tmp.file("labeled.pcap");
    write_pcap(packets, pcap_path);
    PcapReadResult rr = read_pcap(pcap_path);
    apply_labels(rr.packets, labels);
    std::size_t relabeled = 0;
    for (std::size_t i = 0; i < packets.size(); ++i)
      if (rr.packets[i].label != 0) {
        CHECK(rr.packets[i].label == packets[i].label);
        ++relabeled;
      }
    CHECK(relabeled == 10);
  }
}

TEST_CASE("same seed produces byte-identical files") {
  TempDir tmp;
  ScenarioConfig cfg = reference_scenario();
  cfg.attack_type = AttackType::kErrorOnEvent;
  cfg.seed = 1234;
  std::vector<LabeledPacket> packets = generate_scenario(cfg);
  write_pcap(packets, tmp.file("a.pcap"));
  write_pcap(packets, tmp.file("b.pcap"));
  std::ifstream fa(tmp.file("a.pcap"), std::ios::binary);
  std::ifstream fb(tmp.file("b.pcap"), std::ios::binary);
  std::vector<char> da((std::istreambuf_iterator<char>(fa)),
                       std::istreambuf_iterator<char>());
  std::vector<char> db((std::istreambuf_iterator<char>(fb)),
                       std::istreambuf_iterator<char>());
  CHECK(da == db);
}
