#include "someip_ids/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <set>

#include "someip_ids/hash.hpp"
#include "someip_ids/util.hpp"

namespace someip_ids {

const std::array<const char*, kNumFeatures> kFeatureNames = {
    "service_id",        "method_id",       "client_id",
    "message_type",      "session_id",      "interface_version",
    "protocol_version",  "return_code",     "ip_source",
    "ip_destination",    "protocol",        "source_port",
    "destination_port",  "mac_source",      "mac_destination"};

const std::array<double, kNumClasses> kReferenceClassWeights = {
    0.16, 6.68, 10.35, 4.33, 4.86};

namespace {

std::string hex16(std::uint16_t v) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "0x%04X", v);
  return buf;
}

std::string hex8(std::uint8_t v) {
  char buf[6];
  std::snprintf(buf, sizeof(buf), "0x%02X", v);
  return buf;
}

}  // namespace

FeatureRecord extract_features(const LabeledPacket& packet,
                               std::uint64_t record_index) {
  const SomeIpHeader& h = packet.someip.header;
  FeatureRecord r;
  r.tokens[0] = hex16(h.service_id);
  r.tokens[1] = hex16(h.method_id);
  r.tokens[2] = hex16(h.client_id);
  r.tokens[3] = hex8(static_cast<std::uint8_t>(h.message_type));
  r.tokens[4] = hex16(h.session_id);
  r.tokens[5] = hex8(h.interface_version);
  r.tokens[6] = hex8(h.protocol_version);
  r.tokens[7] = hex8(h.return_code);
  r.tokens[8] = packet.src_ip.to_string();
  r.tokens[9] = packet.dst_ip.to_string();
  r.tokens[10] = "SOME/IP";
  r.tokens[11] = std::to_string(packet.src_port);
  r.tokens[12] = std::to_string(packet.dst_port);
  r.tokens[13] = packet.src_mac.to_string();
  r.tokens[14] = packet.dst_mac.to_string();
  r.label = packet.label;
  r.timestamp_us = packet.timestamp_us;
  r.record_index = record_index;
  r.service_id = h.service_id;
  r.client_id = h.client_id;
  r.session_id = h.session_id;
  r.src_ip = packet.src_ip;
  r.dst_ip = packet.dst_ip;
  r.message_type = h.message_type;
  return r;
}

void Encoder::rebuild_index() {
  total_width_ = 0;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    index_[f].clear();
    offsets_[f] = total_width_;
    for (std::uint32_t i = 0; i < vocabs_[f].size(); ++i)
      index_[f][vocabs_[f][i]] = i;
    total_width_ += static_cast<std::uint32_t>(vocabs_[f].size());
  }
}

Encoder Encoder::fit(const std::vector<FeatureRecord>& records) {
  if (records.empty())
    throw PipelineError(PipelineError::Kind::kEmptyInput,
                        "fit: no records to fit the encoder on");
  Encoder e;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    std::set<std::string> distinct;
    for (const auto& r : records) distinct.insert(r.tokens[f]);
    e.vocabs_[f].assign(distinct.begin(), distinct.end());
  }
  e.rebuild_index();
  return e;
}

std::uint32_t Encoder::block_offset(std::size_t feature) const {
  return offsets_.at(feature);
}

std::uint32_t Encoder::block_width(std::size_t feature) const {
  return static_cast<std::uint32_t>(vocabs_.at(feature).size());
}

const std::vector<std::string>& Encoder::vocab(std::size_t feature) const {
  return vocabs_.at(feature);
}

std::optional<std::uint32_t> Encoder::column_of(std::size_t feature,
                                                const std::string& token) const {
  const auto& idx = index_.at(feature);
  auto it = idx.find(token);
  if (it == idx.end()) return std::nullopt;
  return offsets_[feature] + it->second;
}

std::vector<std::uint32_t> Encoder::encode_active(const FeatureRecord& rec) const {
  std::vector<std::uint32_t> cols;
  cols.reserve(kNumFeatures);
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    auto it = index_[f].find(rec.tokens[f]);
    if (it != index_[f].end()) cols.push_back(offsets_[f] + it->second);
  }
  return cols;
}

std::vector<std::uint8_t> Encoder::encode_row(const FeatureRecord& rec) const {
  std::vector<std::uint8_t> row(total_width_, 0);
  for (std::uint32_t c : encode_active(rec)) row[c] = 1;
  return row;
}

nlohmann::json Encoder::to_json() const {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t f = 0; f < kNumFeatures; ++f)
    features.push_back({{"name", kFeatureNames[f]}, {"vocab", vocabs_[f]}});
  return {{"features", features}, {"total_width", total_width_}};
}

Encoder Encoder::from_json(const nlohmann::json& j) {
  Encoder e;
  try {
    const auto& features = j.at("features");
    if (features.size() != kNumFeatures)
      throw PipelineError(PipelineError::Kind::kBadContainer,
                          "encoder JSON has wrong feature count");
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      if (features[f].at("name").get<std::string>() != kFeatureNames[f])
        throw PipelineError(PipelineError::Kind::kBadContainer,
                            "encoder JSON feature order mismatch");
      e.vocabs_[f] = features[f].at("vocab").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& ex) {
    throw PipelineError(PipelineError::Kind::kBadContainer,
                        std::string("bad encoder JSON: ") + ex.what());
  }
  e.rebuild_index();
  return e;
}

std::string Encoder::sha256_hex() const { return someip_ids::sha256_hex(to_json().dump()); }

bool Encoder::operator==(const Encoder& other) const {
  return vocabs_ == other.vocabs_;
}

std::string SessionKey::to_string() const {
  return "client=" + client_ip.to_string() + " server=" + server_ip.to_string() +
         " service=" + hex16(service_id) + " client_id=" + hex16(client_id) +
         " session=" + hex16(session_id);
}

std::vector<SequenceGroup> group_sequences(
    const std::vector<FeatureRecord>& records) {
  std::vector<SequenceGroup> groups;
  std::map<std::tuple<std::uint16_t, std::uint16_t, std::uint16_t>, std::size_t>
      by_session;
  for (const auto& r : records) {
    auto key = std::make_tuple(r.service_id, r.client_id, r.session_id);
    auto it = by_session.find(key);
    if (it == by_session.end()) {
      it = by_session.emplace(key, groups.size()).first;
      groups.emplace_back();
    }
    groups[it->second].records.push_back(r);
  }
  for (auto& g : groups) {
    const FeatureRecord& first = g.records.front();
    g.key.service_id = first.service_id;
    g.key.client_id = first.client_id;
    g.key.session_id = first.session_id;
    // Orient endpoints from the first packet whose type fixes the roles;
    // forged errors carry the attacker's own addresses and are skipped.
    bool oriented = false;
    for (const auto& r : g.records) {
      switch (r.message_type) {
        case MessageType::kRequest:
        case MessageType::kRequestNoReturn:
          g.key.client_ip = r.src_ip;
          g.key.server_ip = r.dst_ip;
          oriented = true;
          break;
        case MessageType::kNotification:
        case MessageType::kResponse:
          g.key.client_ip = r.dst_ip;
          g.key.server_ip = r.src_ip;
          oriented = true;
          break;
        case MessageType::kError:
          break;
      }
      if (oriented) break;
    }
    if (!oriented) {
      g.key.client_ip = g.records.front().dst_ip;
      g.key.server_ip = g.records.front().src_ip;
    }
  }
  return groups;
}

SequenceSample pad_and_label(const SequenceGroup& group, const Encoder& encoder,
                             std::uint32_t max_len) {
  if (group.records.empty())
    throw PipelineError(PipelineError::Kind::kEmptyInput,
                        "pad_and_label: empty group");
  if (group.records.size() > max_len)
    throw PipelineError(PipelineError::Kind::kSequenceTooLong,
                        "sequence of " + std::to_string(group.records.size()) +
                            " packets exceeds max length " +
                            std::to_string(max_len) + " (" +
                            group.key.to_string() + ")");
  SequenceSample s;
  s.max_len = max_len;
  s.width = encoder.total_width();
  s.true_len = static_cast<std::uint32_t>(group.records.size());
  s.key = group.key;
  int label = 0;
  for (const auto& r : group.records) {
    if (r.label != 0) {
      if (label != 0 && label != r.label)
        throw PipelineError(PipelineError::Kind::kMixedAttackLabels,
                            "labels " + std::to_string(label) + " and " +
                                std::to_string(r.label) + " in one session (" +
                                group.key.to_string() + ")");
      label = r.label;
    }
    s.active.push_back(encoder.encode_active(r));
  }
  s.label = label;
  return s;
}

int conformance_oracle(std::span<const MessageType> session) {
  int open_requests = 0;
  bool saw_notification = false;
  bool prev_was_error = false;
  std::set<int> evidence;
  for (MessageType t : session) {
    switch (t) {
      case MessageType::kRequest:
        ++open_requests;
        prev_was_error = false;
        break;
      case MessageType::kRequestNoReturn:
        prev_was_error = false;
        break;
      case MessageType::kNotification:
        saw_notification = true;
        prev_was_error = false;
        break;
      case MessageType::kResponse:
        if (open_requests > 0)
          --open_requests;
        else
          evidence.insert(4);
        prev_was_error = false;
        break;
      case MessageType::kError:
        if (prev_was_error) {
          evidence.insert(2);
        } else if (open_requests > 0) {
          --open_requests;  // a legitimate error reply
        } else if (saw_notification) {
          evidence.insert(1);
        } else {
          evidence.insert(2);  // unprovoked error
        }
        prev_was_error = true;
        break;
    }
  }
  if (open_requests > 0) evidence.insert(3);
  if (evidence.size() > 1) {
    std::string kinds;
    for (int e : evidence) kinds += (kinds.empty() ? "" : ", ") + std::to_string(e);
    throw PipelineError(PipelineError::Kind::kMixedEvidence,
                        "session shows violations of kinds " + kinds);
  }
  return evidence.empty() ? 0 : *evidence.begin();
}

std::vector<double> compute_class_weights(
    const std::vector<std::uint64_t>& counts, WeightMode mode,
    const std::vector<double>& explicit_weights) {
  if (counts.empty())
    throw PipelineError(PipelineError::Kind::kEmptyInput,
                        "compute_class_weights: no classes");
  if (mode == WeightMode::kExplicit) {
    if (explicit_weights.size() != counts.size())
      throw std::invalid_argument(
          "compute_class_weights: explicit weight count mismatch");
    return explicit_weights;
  }
  std::uint64_t total = 0;
  for (std::uint64_t c : counts) {
    if (c == 0)
      throw PipelineError(PipelineError::Kind::kZeroCount,
                          "compute_class_weights: class with zero samples");
    total += c;
  }
  std::vector<double> w(counts.size());
  double k = static_cast<double>(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    w[i] = static_cast<double>(total) / (k * static_cast<double>(counts[i]));
  return w;
}

void Dataset::recompute_counts() {
  class_counts.fill(0);
  for (const auto& s : samples) {
    if (s.label < 0 || s.label >= kNumClasses)
      throw std::invalid_argument("dataset sample with label out of range");
    ++class_counts[static_cast<std::size_t>(s.label)];
  }
}

Dataset concat(const std::vector<Dataset>& parts) {
  if (parts.empty())
    throw PipelineError(PipelineError::Kind::kEmptyInput, "concat: no datasets");
  Dataset out;
  out.encoder = parts.front().encoder;
  for (const auto& p : parts) {
    if (!(p.encoder == out.encoder))
      throw PipelineError(PipelineError::Kind::kEncoderMismatch,
                          "concat: datasets use different encoders");
    out.samples.insert(out.samples.end(), p.samples.begin(), p.samples.end());
  }
  out.recompute_counts();
  return out;
}

namespace {

constexpr char kDatasetMagic[8] = {'S', 'I', 'D', 'S', 'D', 'A', 'T', 'A'};
constexpr std::uint32_t kDatasetVersion = 1;

void put_u64le(std::vector<std::uint8_t>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(std::uint8_t(v >> (8 * i)));
}

void put_f64le(std::vector<std::uint8_t>& b, double v) {
  put_u64le(b, std::bit_cast<std::uint64_t>(v));
}

struct Reader {
  const std::vector<std::uint8_t>& data;
  std::size_t off = 0;

  void need(std::size_t n) const {
    if (off + n > data.size())
      throw PipelineError(PipelineError::Kind::kBadContainer,
                          "dataset container truncated");
  }
  std::uint8_t u8() {
    need(1);
    return data[off++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = get_u16le(data.data() + off);
    off += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = get_u32le(data.data() + off);
    off += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(data[off + std::size_t(i)]) << (8 * i);
    off += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  const std::uint8_t* bytes(std::size_t n) {
    need(n);
    const std::uint8_t* p = data.data() + off;
    off += n;
    return p;
  }
};

}  // namespace

void save_dataset(const Dataset& d, const std::string& path) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kDatasetMagic, kDatasetMagic + 8);
  put_u32le(out, kDatasetVersion);
  std::string encoder_json = d.encoder.to_json().dump();
  put_u64le(out, encoder_json.size());
  out.insert(out.end(), encoder_json.begin(), encoder_json.end());

  std::uint32_t max_len = d.samples.empty() ? kDefaultMaxSeqLen : d.samples[0].max_len;
  put_u32le(out, max_len);
  put_u32le(out, d.encoder.total_width());
  put_u8(out, d.weights_set ? 1 : 0);
  for (double w : d.class_weights) put_f64le(out, w);
  put_u64le(out, d.samples.size());

  std::size_t row_bytes = (d.encoder.total_width() + 7) / 8;
  std::vector<std::uint8_t> row(row_bytes);
  for (const auto& s : d.samples) {
    put_u32le(out, s.key.client_ip.value);
    put_u32le(out, s.key.server_ip.value);
    put_u16le(out, s.key.service_id);
    put_u16le(out, s.key.client_id);
    put_u16le(out, s.key.session_id);
    put_u8(out, static_cast<std::uint8_t>(s.label));
    put_u16le(out, static_cast<std::uint16_t>(s.true_len));
    for (std::uint32_t t = 0; t < s.true_len; ++t) {
      std::fill(row.begin(), row.end(), 0);
      for (std::uint32_t c : s.active[t]) row[c >> 3] |= std::uint8_t(1u << (c & 7));
      out.insert(out.end(), row.begin(), row.end());
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write failed on " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  Reader r{data};
  const std::uint8_t* magic = r.bytes(8);
  if (!std::equal(magic, magic + 8, kDatasetMagic))
    throw PipelineError(PipelineError::Kind::kBadContainer,
                        "not a dataset container: " + path);
  std::uint32_t version = r.u32();
  if (version != kDatasetVersion)
    throw PipelineError(PipelineError::Kind::kBadContainer,
                        "unsupported dataset container version " +
                            std::to_string(version));
  std::uint64_t json_len = r.u64();
  const std::uint8_t* json_bytes = r.bytes(json_len);
  nlohmann::json ej;
  try {
    ej = nlohmann::json::parse(json_bytes, json_bytes + json_len);
  } catch (const nlohmann::json::exception& e) {
    throw PipelineError(PipelineError::Kind::kBadContainer,
                        std::string("bad encoder JSON in container: ") + e.what());
  }
  Dataset d;
  d.encoder = Encoder::from_json(ej);
  std::uint32_t max_len = r.u32();
  std::uint32_t width = r.u32();
  if (width != d.encoder.total_width())
    throw PipelineError(PipelineError::Kind::kBadContainer,
                        "container width disagrees with encoder");
  d.weights_set = r.u8() != 0;
  for (auto& w : d.class_weights) w = r.f64();
  std::uint64_t count = r.u64();
  std::size_t row_bytes = (width + 7) / 8;
  d.samples.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    SequenceSample s;
    s.max_len = max_len;
    s.width = width;
    s.key.client_ip.value = r.u32();
    s.key.server_ip.value = r.u32();
    s.key.service_id = r.u16();
    s.key.client_id = r.u16();
    s.key.session_id = r.u16();
    s.label = r.u8();
    s.true_len = r.u16();
    if (s.true_len > max_len)
      throw PipelineError(PipelineError::Kind::kBadContainer,
                          "sample longer than container max length");
    s.active.resize(s.true_len);
    for (std::uint32_t t = 0; t < s.true_len; ++t) {
      const std::uint8_t* row = r.bytes(row_bytes);
      for (std::uint32_t c = 0; c < width; ++c)
        if (row[c >> 3] & (1u << (c & 7))) s.active[t].push_back(c);
    }
    d.samples.push_back(std::move(s));
  }
  if (r.off != data.size())
    throw PipelineError(PipelineError::Kind::kBadContainer,
                        "trailing bytes in dataset container");
  d.recompute_counts();
  return d;
}

}  // namespace someip_ids
