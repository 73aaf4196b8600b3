#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "someip_ids/netsim.hpp"

namespace someip_ids {

struct PipelineError : std::runtime_error {
  enum class Kind {
    kEmptyInput,
    kSequenceTooLong,
    kMixedAttackLabels,
    kMixedEvidence,
    kZeroCount,
    kEncoderMismatch,
    kBadContainer,
  };
  Kind kind;
  PipelineError(Kind k, const std::string& msg)
      : std::runtime_error(msg), kind(k) {}
};

inline constexpr int kNumClasses = 5;
inline constexpr std::uint32_t kDefaultMaxSeqLen = 60;
inline constexpr std::size_t kNumFeatures = 15;

// Categorical feature order, fixed across encoder, container, and reports.
extern const std::array<const char*, kNumFeatures> kFeatureNames;

// One packet reduced to its categorical tokens plus the metadata grouping
// and labeling need.
struct FeatureRecord {
  std::array<std::string, kNumFeatures> tokens;
  int label = 0;
  std::uint64_t timestamp_us = 0;
  std::uint64_t record_index = 0;
  std::uint16_t service_id = 0;
  std::uint16_t client_id = 0;
  std::uint16_t session_id = 0;
  Ipv4Addr src_ip, dst_ip;
  MessageType message_type = MessageType::kRequest;
};

FeatureRecord extract_features(const LabeledPacket& packet,
                               std::uint64_t record_index);

// Per-feature one-hot vocabularies, fitted as the sorted distinct tokens of
// the training records. Unknown tokens encode to an all-zero block.
class Encoder {
 public:
  static Encoder fit(const std::vector<FeatureRecord>& records);  // kEmptyInput

  std::uint32_t total_width() const { return total_width_; }
  std::uint32_t block_offset(std::size_t feature) const;
  std::uint32_t block_width(std::size_t feature) const;
  const std::vector<std::string>& vocab(std::size_t feature) const;

  // Global column for a token, or nullopt when out of vocabulary.
  std::optional<std::uint32_t> column_of(std::size_t feature,
                                         const std::string& token) const;

  // Sorted global columns of the active bits, at most one per feature block.
  std::vector<std::uint32_t> encode_active(const FeatureRecord& rec) const;
  // Dense 0/1 row of total_width() entries.
  std::vector<std::uint8_t> encode_row(const FeatureRecord& rec) const;

  nlohmann::json to_json() const;
  static Encoder from_json(const nlohmann::json& j);
  std::string sha256_hex() const;

  bool operator==(const Encoder& other) const;

 private:
  std::array<std::vector<std::string>, kNumFeatures> vocabs_;
  std::array<std::map<std::string, std::uint32_t>, kNumFeatures> index_;
  std::array<std::uint32_t, kNumFeatures> offsets_{};
  std::uint32_t total_width_ = 0;
  void rebuild_index();
};

// Endpoint identities of one communication session.
struct SessionKey {
  Ipv4Addr client_ip, server_ip;
  std::uint16_t service_id = 0;
  std::uint16_t client_id = 0;
  std::uint16_t session_id = 0;
  auto operator<=>(const SessionKey&) const = default;
  std::string to_string() const;
};

struct SequenceGroup {
  SessionKey key;
  std::vector<FeatureRecord> records;  // time order
};

// Partitions records into sessions keyed by (service_id, client_id,
// session_id); attacker-emitted packets join the session whose SOME/IP
// identifiers they forge. Endpoint IPs in the key come from the first
// role-defining packet. Groups are ordered by first appearance.
std::vector<SequenceGroup> group_sequences(
    const std::vector<FeatureRecord>& records);

// One training sample: a max_len x width binary matrix stored as per-row
// active columns, rows past true_len all zero.
struct SequenceSample {
  std::vector<std::vector<std::uint32_t>> active;  // size() == true_len
  std::uint32_t max_len = kDefaultMaxSeqLen;
  std::uint32_t width = 0;
  std::uint32_t true_len = 0;
  int label = 0;
  SessionKey key;

  std::span<const std::uint32_t> row_active(std::uint32_t t) const {
    if (t >= active.size()) return {};
    return active[t];
  }
  bool operator==(const SequenceSample&) const = default;
};

// Throws kSequenceTooLong past max_len and kMixedAttackLabels when two
// distinct nonzero packet labels meet in one group.
SequenceSample pad_and_label(const SequenceGroup& group, const Encoder& encoder,
                             std::uint32_t max_len = kDefaultMaxSeqLen);

// Rule-based session label from message-type order alone: 0 normal,
// 1 error answering a notification, 2 error answering an error (or an
// unprovoked error), 3 request left unanswered, 4 response without an open
// request. Throws kMixedEvidence when violations of different kinds meet.
int conformance_oracle(std::span<const MessageType> session);

enum class WeightMode { kInverseFrequency, kExplicit };

// weight_c = N / (K * n_c) over the K classes in `counts`; kExplicit returns
// `explicit_weights` unchanged. Throws kZeroCount on a zero count in
// inverse-frequency mode.
std::vector<double> compute_class_weights(
    const std::vector<std::uint64_t>& counts, WeightMode mode,
    const std::vector<double>& explicit_weights = {});

// Reference-configuration class weights, indexed by label.
extern const std::array<double, kNumClasses> kReferenceClassWeights;

struct Dataset {
  std::vector<SequenceSample> samples;
  Encoder encoder;
  std::array<std::uint64_t, kNumClasses> class_counts{};
  std::array<double, kNumClasses> class_weights{1, 1, 1, 1, 1};
  bool weights_set = false;

  void recompute_counts();
};

// Throws kEncoderMismatch when datasets disagree on the encoder.
Dataset concat(const std::vector<Dataset>& parts);

// Versioned binary container with the encoder JSON and bit-packed rows.
void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);  // kBadContainer

}  // namespace someip_ids
