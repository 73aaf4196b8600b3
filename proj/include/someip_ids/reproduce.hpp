#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "someip_ids/eval.hpp"
#include "someip_ids/netsim.hpp"
#include "someip_ids/pipeline.hpp"
#include "someip_ids/seqnet.hpp"

namespace someip_ids {

// A labeled sequence whose sidecar label disagrees with the rule checker, or
// any other inconsistency that poisons a corpus.
struct CorpusIntegrityError : std::runtime_error {
  std::string session;
  CorpusIntegrityError(std::string session_key, const std::string& msg)
      : std::runtime_error(msg), session(std::move(session_key)) {}
};

struct PcapLabelPair {
  std::string pcap;
  std::string labels;
};

struct AssemblyStats {
  std::uint64_t packets = 0;
  std::uint64_t skipped_frames = 0;
  std::uint64_t sessions = 0;
  std::array<std::uint64_t, kNumClasses> sequence_counts{};
  std::array<std::uint64_t, kNumClasses> packet_label_counts{};
  std::uint32_t encoder_width = 0;
  std::uint32_t max_true_len = 0;
};

// Reads pcap+label pairs, groups each capture into sessions, cross-checks
// every session label against conformance_oracle, encodes and pads. Fits the
// encoder on the whole input unless `reuse_encoder` is given (pass the
// training encoder when preparing a test corpus). Inputs with sidecar
// manifests are hash-verified first.
Dataset assemble_dataset(const std::vector<PcapLabelPair>& pairs,
                         const Encoder* reuse_encoder,
                         std::uint32_t max_len = kDefaultMaxSeqLen,
                         AssemblyStats* stats = nullptr);

// One traffic-generation run in a corpus plan.
struct RunPlanEntry {
  std::string name;
  std::optional<AttackType> attack;  // nullopt = attack-free run
  std::uint64_t seed = 0;
};

// Deterministic corpus plans sized so the labeled-sequence mix lands on the
// reference distribution (about 90% normal, each attack class 1.4-3.5%).
std::vector<RunPlanEntry> reproduce_train_plan(std::uint64_t seed);
std::vector<RunPlanEntry> reproduce_test_plan(std::uint64_t seed);

struct CorpusBuild {
  Dataset dataset;
  AssemblyStats stats;
  std::vector<PcapLabelPair> files;
  double seconds = 0;
};

// Runs every entry of `plan` with the built-in reference scenario, writes
// pcap/labels/manifest triples under out_dir, and assembles the dataset.
CorpusBuild build_corpus(const std::vector<RunPlanEntry>& plan,
                         const std::string& out_dir, const Encoder* encoder,
                         std::uint32_t max_len = kDefaultMaxSeqLen);

// Reference per-class metric values kept verbatim for the comparison table.
struct ReferenceMetrics {
  const char* recall;
  const char* precision;
  const char* f1;
};
extern const std::array<std::array<ReferenceMetrics, kNumClasses>, 3>
    kReferenceValidation;  // [fold][label]
extern const std::array<std::array<ReferenceMetrics, kNumClasses>, 3>
    kReferenceTest;  // [model][label]
extern const std::array<std::uint64_t, kNumClasses> kReferenceTrainCounts;
extern const std::array<std::uint64_t, kNumClasses> kReferenceTestCounts;

struct ReproduceOptions {
  std::uint64_t seed = 1;
  std::string out_dir = "reproduce_out";
  int folds = 3;
  int jobs = 3;
};

struct ReproduceResult {
  CorpusBuild train;
  CorpusBuild test;
  CvReport cv;
  std::vector<EvalReport> test_reports;  // one per fold model
  std::vector<std::string> model_paths;
  double train_seconds = 0;
  double total_seconds = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

// End-to-end pipeline: generate both corpora, fit/reuse the encoder, train
// k-fold with the reference class weights, evaluate every fold model on the
// held-out corpus, and persist datasets/checkpoints/reports under out_dir.
ReproduceResult run_reproduce(const ReproduceOptions& opts,
                              std::ostream* log = nullptr);

// Side-by-side obtained-vs-reference tables (counts, validation, test, AUC).
void print_comparison(const ReproduceResult& result, std::ostream& os);

}  // namespace someip_ids
