#include "someip_ids/codec.hpp"

#include "someip_ids/util.hpp"

namespace someip_ids {

bool is_known_message_type(std::uint8_t raw) {
  switch (raw) {
    case 0x00:
    case 0x01:
    case 0x02:
    case 0x80:
    case 0x81:
      return true;
    default:
      return false;
  }
}

const char* message_type_name(MessageType t) {
  switch (t) {
    case MessageType::kRequest:
      return "REQUEST";
    case MessageType::kRequestNoReturn:
      return "REQUEST_NO_RETURN";
    case MessageType::kNotification:
      return "NOTIFICATION";
    case MessageType::kResponse:
      return "RESPONSE";
    case MessageType::kError:
      return "ERROR";
  }
  return "UNKNOWN";
}

SomeIpMessage make_message(std::uint16_t service_id, std::uint16_t method_id,
                           std::uint16_t client_id, std::uint16_t session_id,
                           MessageType type, std::uint8_t return_code,
                           std::vector<std::uint8_t> payload,
                           std::uint8_t interface_version,
                           std::uint8_t protocol_version) {
  SomeIpMessage msg;
  msg.header.service_id = service_id;
  msg.header.method_id = method_id;
  msg.header.length =
      kLengthCoveredHeaderBytes + static_cast<std::uint32_t>(payload.size());
  msg.header.client_id = client_id;
  msg.header.session_id = session_id;
  msg.header.protocol_version = protocol_version;
  msg.header.interface_version = interface_version;
  msg.header.message_type = type;
  msg.header.return_code = return_code;
  msg.payload = std::move(payload);
  return msg;
}

std::vector<std::uint8_t> encode(const SomeIpMessage& msg) {
  std::uint32_t expected =
      kLengthCoveredHeaderBytes + static_cast<std::uint32_t>(msg.payload.size());
  if (msg.header.length != expected)
    throw CodecError(CodecError::Kind::kInvariantViolation,
                     "encode: length field " + std::to_string(msg.header.length) +
                         " does not cover payload (expected " +
                         std::to_string(expected) + ")");
  std::vector<std::uint8_t> out;
  out.reserve(kSomeIpHeaderSize + msg.payload.size());
  put_u16be(out, msg.header.service_id);
  put_u16be(out, msg.header.method_id);
  put_u32be(out, msg.header.length);
  put_u16be(out, msg.header.client_id);
  put_u16be(out, msg.header.session_id);
  put_u8(out, msg.header.protocol_version);
  put_u8(out, msg.header.interface_version);
  put_u8(out, static_cast<std::uint8_t>(msg.header.message_type));
  put_u8(out, msg.header.return_code);
  out.insert(out.end(), msg.payload.begin(), msg.payload.end());
  return out;
}

SomeIpMessage decode(std::span<const std::uint8_t> buf) {
  if (buf.size() < kSomeIpHeaderSize)
    throw CodecError(CodecError::Kind::kTruncated,
                     "decode: buffer of " + std::to_string(buf.size()) +
                         " bytes is shorter than the 16-byte header");
  SomeIpMessage msg;
  const std::uint8_t* p = buf.data();
  msg.header.service_id = get_u16be(p);
  msg.header.method_id = get_u16be(p + 2);
  msg.header.length = get_u32be(p + 4);
  msg.header.client_id = get_u16be(p + 8);
  msg.header.session_id = get_u16be(p + 10);
  msg.header.protocol_version = p[12];
  msg.header.interface_version = p[13];
  std::uint8_t raw_type = p[14];
  msg.header.return_code = p[15];

  if (msg.header.length < kLengthCoveredHeaderBytes)
    throw CodecError(CodecError::Kind::kLengthMismatch,
                     "decode: length field " + std::to_string(msg.header.length) +
                         " smaller than the 8 covered header bytes");
  std::size_t total = 8 + static_cast<std::size_t>(msg.header.length);
  if (buf.size() < total)
    throw CodecError(CodecError::Kind::kTruncated,
                     "decode: buffer of " + std::to_string(buf.size()) +
                         " bytes shorter than declared total " +
                         std::to_string(total));
  if (buf.size() > total)
    throw CodecError(CodecError::Kind::kLengthMismatch,
                     "decode: " + std::to_string(buf.size() - total) +
                         " trailing bytes beyond declared length");
  if (!is_known_message_type(raw_type))
    throw CodecError(CodecError::Kind::kUnknownMessageType,
                     "decode: unknown message type 0x" +
                         to_hex(std::span<const std::uint8_t>(&raw_type, 1)));
  msg.header.message_type = static_cast<MessageType>(raw_type);
  msg.payload.assign(buf.begin() + kSomeIpHeaderSize, buf.end());
  return msg;
}

std::vector<FieldViolation> validate_version(const SomeIpMessage& msg) {
  std::vector<FieldViolation> out;
  if (msg.header.protocol_version != 0x01) {
    out.push_back({"protocol_version",
                   "expected 0x01, got 0x" +
                       to_hex(std::span<const std::uint8_t>(
                           &msg.header.protocol_version, 1))});
  }
  return out;
}

}  // namespace someip_ids
