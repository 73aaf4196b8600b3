#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace someip_ids {

// Message type octet values on the wire.
enum class MessageType : std::uint8_t {
  kRequest = 0x00,
  kRequestNoReturn = 0x01,
  kNotification = 0x02,
  kResponse = 0x80,
  kError = 0x81,
};

bool is_known_message_type(std::uint8_t raw);
const char* message_type_name(MessageType t);

// 16-byte header, big-endian on the wire. `length` covers the 8 bytes from
// client_id through return_code plus the payload.
struct SomeIpHeader {
  std::uint16_t service_id = 0;
  std::uint16_t method_id = 0;
  std::uint32_t length = 8;
  std::uint16_t client_id = 0;
  std::uint16_t session_id = 0;
  std::uint8_t protocol_version = 0x01;
  std::uint8_t interface_version = 0x01;
  MessageType message_type = MessageType::kRequest;
  std::uint8_t return_code = 0x00;

  bool operator==(const SomeIpHeader&) const = default;
};

struct SomeIpMessage {
  SomeIpHeader header;
  std::vector<std::uint8_t> payload;

  bool operator==(const SomeIpMessage&) const = default;
};

inline constexpr std::size_t kSomeIpHeaderSize = 16;
// Bytes of the header counted by the length field.
inline constexpr std::uint32_t kLengthCoveredHeaderBytes = 8;

struct CodecError : std::runtime_error {
  enum class Kind { kTruncated, kUnknownMessageType, kLengthMismatch, kInvariantViolation };
  Kind kind;
  CodecError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// Builds a message with a consistent length field.
SomeIpMessage make_message(std::uint16_t service_id, std::uint16_t method_id,
                           std::uint16_t client_id, std::uint16_t session_id,
                           MessageType type, std::uint8_t return_code,
                           std::vector<std::uint8_t> payload,
                           std::uint8_t interface_version = 0x01,
                           std::uint8_t protocol_version = 0x01);

// Throws CodecError{kInvariantViolation} if header.length disagrees with the
// payload size.
std::vector<std::uint8_t> encode(const SomeIpMessage& msg);

// Throws CodecError{kTruncated | kLengthMismatch | kUnknownMessageType}.
SomeIpMessage decode(std::span<const std::uint8_t> buf);

struct FieldViolation {
  std::string field;
  std::string detail;
  bool operator==(const FieldViolation&) const = default;
};

// Empty result iff protocol_version is 0x01.
std::vector<FieldViolation> validate_version(const SomeIpMessage& msg);

}  // namespace someip_ids
