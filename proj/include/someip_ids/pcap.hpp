#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "someip_ids/netsim.hpp"

namespace someip_ids {

struct PcapError : std::runtime_error {
  enum class Kind { kBadMagic, kMalformedRecord, kIo, kIndexMismatch };
  Kind kind;
  std::size_t record_index;
  PcapError(Kind k, const std::string& msg, std::size_t index = 0)
      : std::runtime_error(msg), kind(k), record_index(index) {}
};

// Classic little-endian pcap, linktype Ethernet, microsecond timestamps.
// Frames are Ethernet II / IPv4 / UDP around the SOME/IP payload.
// Packets must be time-ordered.
void write_pcap(const std::vector<LabeledPacket>& packets,
                const std::string& path);

struct PcapReadResult {
  std::vector<LabeledPacket> packets;  // labels all 0
  std::vector<std::string> diagnostics;  // skipped non-UDP records
};

// Throws PcapError{kBadMagic} on a foreign header and
// PcapError{kMalformedRecord} (with the record index) on framing or SOME/IP
// decoding failures inside a UDP record.
PcapReadResult read_pcap(const std::string& path);

// JSON-lines sidecar, one {"index":i,"label":l} object per packet.
void write_labels(const std::vector<LabeledPacket>& packets,
                  const std::string& path);

// Throws PcapError{kIndexMismatch} when the line count or the index fields
// disagree with expected_count.
std::vector<int> read_labels(const std::string& path,
                             std::size_t expected_count);

void apply_labels(std::vector<LabeledPacket>& packets,
                  const std::vector<int>& labels);

}  // namespace someip_ids
