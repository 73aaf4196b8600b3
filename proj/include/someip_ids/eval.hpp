#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "someip_ids/seqnet.hpp"

namespace someip_ids {

struct EvalError : std::runtime_error {
  enum class Kind { kLengthMismatch, kSingleClassInput, kClassTooSmall };
  Kind kind;
  EvalError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

extern const std::array<const char*, kNumClasses> kClassNames;

struct ConfusionMatrix {
  // counts[true][pred]
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};
  std::array<std::array<double, kNumClasses>, kNumClasses> normalized{};
  std::array<bool, kNumClasses> has_support{};
};

ConfusionMatrix confusion(std::span<const int> y_true,
                          std::span<const int> y_pred);  // kLengthMismatch

struct ClassMetrics {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0, recall = 0, f1 = 0;
  std::uint64_t support = 0;
  bool no_support = false;
};

// One-vs-rest metrics for one class; zero denominators give zero metrics.
ClassMetrics prf1(std::span<const int> y_true, std::span<const int> y_pred,
                  int cls);

struct RocPoint {
  double fpr = 0, tpr = 0, threshold = 0;
};

struct RocCurve {
  std::string scope;
  std::vector<RocPoint> points;  // threshold descending, (0,0) to (1,1)
  double auc = 0;
};

// Binary ROC over decision-value thresholds (distinct scores plus +/-inf
// sentinels), AUC by the trapezoid rule. Throws kSingleClassInput when only
// one class is present.
RocCurve roc_binary(std::span<const double> scores,
                    std::span<const std::uint8_t> positives,
                    const std::string& scope = "binary");

struct RocSet {
  std::array<std::optional<RocCurve>, kNumClasses> per_class;
  RocCurve micro;  // all (sample, class) pairs pooled
  RocCurve macro;  // per-class curves averaged on the union FPR grid
};

RocSet roc_auc(const std::vector<std::array<double, kNumClasses>>& scores,
               std::span<const int> y_true);

struct FoldSplit {
  std::vector<std::size_t> train_idx, val_idx;
};

// Seeded per-class shuffle, then round-robin assignment; every fold's
// per-class count is within one sample of n_c / k. Throws kClassTooSmall if
// a present class has fewer than k samples.
std::vector<FoldSplit> stratified_kfold(std::span<const int> labels, int k,
                                        std::uint64_t seed);

struct EvalReport {
  ConfusionMatrix cm;
  std::array<ClassMetrics, kNumClasses> per_class;
  RocSet roc;
  double accuracy = 0;
};

EvalReport build_report(std::span<const int> y_true,
                        const std::vector<Prediction>& preds);

// Throws SeqnetError{kEncoderHashMismatch} when the dataset was encoded with
// a different encoder than the model was trained on.
EvalReport evaluate_model(const RnnModel& model, const Dataset& data,
                          bool mask_padding = false);

struct FoldReport {
  int fold = 0;  // 1-based
  EvalReport eval;
  TrainHistory history;
};

struct CvReport {
  std::vector<FoldReport> folds;
};

// k-fold cross validation: trains one model per fold on the other folds and
// evaluates it on the held-out fold. Deterministic in cfg.seed; folds run on
// up to `jobs` threads. Trained models land in out_models in fold order.
CvReport cross_validate(const Dataset& data, const TrainConfig& cfg, int k,
                        int jobs, std::vector<RnnModel>* out_models);

nlohmann::json report_to_json(const EvalReport& report,
                              bool include_roc_points = true);
nlohmann::json history_to_json(const TrainHistory& history);
nlohmann::json cv_report_to_json(const CvReport& report);

void write_roc_csv(const RocSet& roc, const std::string& path);
void write_confusion_csv(const ConfusionMatrix& cm, const std::string& path);

}  // namespace someip_ids
