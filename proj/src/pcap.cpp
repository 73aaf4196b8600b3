#include "someip_ids/pcap.hpp"

#include <fstream>

#include "json.hpp"
#include "someip_ids/util.hpp"

namespace someip_ids {

namespace {

constexpr std::uint32_t kPcapMagicUsec = 0xA1B2C3D4;
constexpr std::uint16_t kPcapVersionMajor = 2;
constexpr std::uint16_t kPcapVersionMinor = 4;
constexpr std::uint32_t kLinktypeEthernet = 1;
constexpr std::uint32_t kSnapLen = 65535;

constexpr std::size_t kEthHeaderSize = 14;
constexpr std::size_t kIpHeaderSize = 20;
constexpr std::size_t kUdpHeaderSize = 8;
constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;
constexpr std::uint8_t kIpProtoUdp = 17;

std::uint16_t ip_checksum(const std::uint8_t* data, std::size_t len) {
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i + 1 < len; i += 2) sum += get_u16be(data + i);
  if (len & 1) sum += std::uint32_t(data[len - 1]) << 8;
  while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum);
}

std::uint16_t udp_checksum(Ipv4Addr src, Ipv4Addr dst,
                           const std::uint8_t* udp, std::size_t udp_len) {
  std::uint32_t sum = 0;
  sum += (src.value >> 16) + (src.value & 0xFFFF);
  sum += (dst.value >> 16) + (dst.value & 0xFFFF);
  sum += kIpProtoUdp;
  sum += static_cast<std::uint32_t>(udp_len);
  for (std::size_t i = 0; i + 1 < udp_len; i += 2) sum += get_u16be(udp + i);
  if (udp_len & 1) sum += std::uint32_t(udp[udp_len - 1]) << 8;
  while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
  auto c = static_cast<std::uint16_t>(~sum);
  return c == 0 ? 0xFFFF : c;
}

std::vector<std::uint8_t> build_frame(const LabeledPacket& p,
                                      std::uint16_t ip_id) {
  std::vector<std::uint8_t> someip = encode(p.someip);
  std::vector<std::uint8_t> out;
  out.reserve(kEthHeaderSize + kIpHeaderSize + kUdpHeaderSize + someip.size());

  out.insert(out.end(), p.dst_mac.bytes.begin(), p.dst_mac.bytes.end());
  out.insert(out.end(), p.src_mac.bytes.begin(), p.src_mac.bytes.end());
  put_u16be(out, kEtherTypeIpv4);

  auto ip_total = static_cast<std::uint16_t>(kIpHeaderSize + kUdpHeaderSize +
                                             someip.size());
  std::size_t ip_off = out.size();
  put_u8(out, 0x45);
  put_u8(out, 0x00);
  put_u16be(out, ip_total);
  put_u16be(out, ip_id);
  put_u16be(out, 0x0000);
  put_u8(out, 64);  // TTL
  put_u8(out, kIpProtoUdp);
  put_u16be(out, 0x0000);  // checksum placeholder
  put_u32be(out, p.src_ip.value);
  put_u32be(out, p.dst_ip.value);
  std::uint16_t ipsum = ip_checksum(out.data() + ip_off, kIpHeaderSize);
  out[ip_off + 10] = std::uint8_t(ipsum >> 8);
  out[ip_off + 11] = std::uint8_t(ipsum);

  auto udp_len = static_cast<std::uint16_t>(kUdpHeaderSize + someip.size());
  std::size_t udp_off = out.size();
  put_u16be(out, p.src_port);
  put_u16be(out, p.dst_port);
  put_u16be(out, udp_len);
  put_u16be(out, 0x0000);  // checksum placeholder
  out.insert(out.end(), someip.begin(), someip.end());
  std::uint16_t usum =
      udp_checksum(p.src_ip, p.dst_ip, out.data() + udp_off, udp_len);
  out[udp_off + 6] = std::uint8_t(usum >> 8);
  out[udp_off + 7] = std::uint8_t(usum);
  return out;
}

}  // namespace

void write_pcap(const std::vector<LabeledPacket>& packets,
                const std::string& path) {
  for (std::size_t i = 1; i < packets.size(); ++i)
    if (packets[i - 1].timestamp_us > packets[i].timestamp_us)
      throw std::invalid_argument("write_pcap: packets not time-ordered");

  std::vector<std::uint8_t> out;
  put_u32le(out, kPcapMagicUsec);
  put_u16le(out, kPcapVersionMajor);
  put_u16le(out, kPcapVersionMinor);
  put_u32le(out, 0);  // thiszone
  put_u32le(out, 0);  // sigfigs
  put_u32le(out, kSnapLen);
  put_u32le(out, kLinktypeEthernet);

  std::uint16_t ip_id = 0;
  for (const auto& p : packets) {
    std::vector<std::uint8_t> frame = build_frame(p, ip_id++);
    put_u32le(out, static_cast<std::uint32_t>(p.timestamp_us / 1'000'000));
    put_u32le(out, static_cast<std::uint32_t>(p.timestamp_us % 1'000'000));
    put_u32le(out, static_cast<std::uint32_t>(frame.size()));
    put_u32le(out, static_cast<std::uint32_t>(frame.size()));
    out.insert(out.end(), frame.begin(), frame.end());
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw PcapError(PcapError::Kind::kIo, "cannot open " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw PcapError(PcapError::Kind::kIo, "write failed on " + path);
}

PcapReadResult read_pcap(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw PcapError(PcapError::Kind::kIo, "cannot open " + path);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  if (data.size() < 24)
    throw PcapError(PcapError::Kind::kBadMagic,
                    "file shorter than a pcap global header");
  if (get_u32le(data.data()) != kPcapMagicUsec)
    throw PcapError(PcapError::Kind::kBadMagic,
                    "not a little-endian microsecond pcap file");
  if (get_u32le(data.data() + 20) != kLinktypeEthernet)
    throw PcapError(PcapError::Kind::kBadMagic,
                    "unsupported linktype " +
                        std::to_string(get_u32le(data.data() + 20)));

  PcapReadResult result;
  std::size_t off = 24;
  std::size_t index = 0;
  while (off < data.size()) {
    if (off + 16 > data.size())
      throw PcapError(PcapError::Kind::kMalformedRecord,
                      "truncated record header at record " +
                          std::to_string(index),
                      index);
    std::uint32_t ts_sec = get_u32le(data.data() + off);
    std::uint32_t ts_usec = get_u32le(data.data() + off + 4);
    std::uint32_t incl_len = get_u32le(data.data() + off + 8);
    off += 16;
    if (off + incl_len > data.size())
      throw PcapError(PcapError::Kind::kMalformedRecord,
                      "record " + std::to_string(index) +
                          " extends past end of file",
                      index);
    const std::uint8_t* rec = data.data() + off;
    off += incl_len;
    std::size_t this_index = index++;

    if (incl_len < kEthHeaderSize)
      throw PcapError(PcapError::Kind::kMalformedRecord,
                      "record " + std::to_string(this_index) +
                          " shorter than an Ethernet header",
                      this_index);
    std::uint16_t ethertype = get_u16be(rec + 12);
    if (ethertype != kEtherTypeIpv4) {
      result.diagnostics.push_back("record " + std::to_string(this_index) +
                                   ": skipped non-IPv4 ethertype");
      continue;
    }
    if (incl_len < kEthHeaderSize + kIpHeaderSize)
      throw PcapError(PcapError::Kind::kMalformedRecord,
                      "record " + std::to_string(this_index) +
                          " truncated IPv4 header",
                      this_index);
    const std::uint8_t* ip = rec + kEthHeaderSize;
    std::size_t ihl = std::size_t(ip[0] & 0x0F) * 4;
    if ((ip[0] >> 4) != 4 || ihl < kIpHeaderSize)
      throw PcapError(PcapError::Kind::kMalformedRecord,
                      "record " + std::to_string(this_index) +
                          " bad IPv4 header",
                      this_index);
    if (ip[9] != kIpProtoUdp) {
      result.diagnostics.push_back("record " + std::to_string(this_index) +
                                   ": skipped non-UDP protocol");
      continue;
    }
    if (incl_len < kEthHeaderSize + ihl + kUdpHeaderSize)
      throw PcapError(PcapError::Kind::kMalformedRecord,
                      "record " + std::to_string(this_index) +
                          " truncated UDP header",
                      this_index);
    const std::uint8_t* udp = ip + ihl;
    std::uint16_t udp_len = get_u16be(udp + 4);
    if (udp_len < kUdpHeaderSize ||
        kEthHeaderSize + ihl + udp_len > incl_len)
      throw PcapError(PcapError::Kind::kMalformedRecord,
                      "record " + std::to_string(this_index) +
                          " bad UDP length",
                      this_index);

    LabeledPacket p;
    p.timestamp_us = std::uint64_t(ts_sec) * 1'000'000 + ts_usec;
    std::copy(rec, rec + 6, p.dst_mac.bytes.begin());
    std::copy(rec + 6, rec + 12, p.src_mac.bytes.begin());
    p.src_ip = Ipv4Addr{get_u32be(ip + 12)};
    p.dst_ip = Ipv4Addr{get_u32be(ip + 16)};
    p.src_port = get_u16be(udp);
    p.dst_port = get_u16be(udp + 2);
    try {
      p.someip = decode({udp + kUdpHeaderSize,
                         std::size_t(udp_len) - kUdpHeaderSize});
    } catch (const CodecError& e) {
      throw PcapError(PcapError::Kind::kMalformedRecord,
                      "record " + std::to_string(this_index) + ": " + e.what(),
                      this_index);
    }
    result.packets.push_back(std::move(p));
  }
  return result;
}

void write_labels(const std::vector<LabeledPacket>& packets,
                  const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw PcapError(PcapError::Kind::kIo, "cannot open " + path);
  for (std::size_t i = 0; i < packets.size(); ++i)
    f << "{\"index\":" << i << ",\"label\":" << packets[i].label << "}\n";
  if (!f) throw PcapError(PcapError::Kind::kIo, "write failed on " + path);
}

std::vector<int> read_labels(const std::string& path,
                             std::size_t expected_count) {
  std::ifstream f(path);
  if (!f) throw PcapError(PcapError::Kind::kIo, "cannot open " + path);
  std::vector<int> labels;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw PcapError(PcapError::Kind::kIo,
                      "bad label line " + std::to_string(labels.size()) + ": " +
                          e.what());
    }
    auto idx = j.at("index").get<std::size_t>();
    if (idx != labels.size())
      throw PcapError(PcapError::Kind::kIndexMismatch,
                      "label index " + std::to_string(idx) +
                          " out of order at line " +
                          std::to_string(labels.size()),
                      labels.size());
    labels.push_back(j.at("label").get<int>());
  }
  if (labels.size() != expected_count)
    throw PcapError(PcapError::Kind::kIndexMismatch,
                    "label count " + std::to_string(labels.size()) +
                        " does not match packet count " +
                        std::to_string(expected_count));
  return labels;
}

void apply_labels(std::vector<LabeledPacket>& packets,
                  const std::vector<int>& labels) {
  if (labels.size() != packets.size())
    throw PcapError(PcapError::Kind::kIndexMismatch,
                    "label count does not match packet count");
  for (std::size_t i = 0; i < packets.size(); ++i)
    packets[i].label = labels[i];
}

}  // namespace someip_ids
