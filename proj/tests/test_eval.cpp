#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <vector>

#include <unistd.h>

#include "doctest.h"
#include "someip_ids/eval.hpp"
#include "someip_ids/netsim.hpp"
#include "someip_ids/pipeline.hpp"

using namespace someip_ids;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("eval_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

// Rank-based AUC with half credit for ties, computed by brute-force pair
// counting: an independent oracle for the trapezoid construction.
double pairwise_auc(const std::vector<double>& scores,
                    const std::vector<std::uint8_t>& positives) {
  double wins = 0;
  std::uint64_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positives[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positives[j]) continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  return wins / double(pairs);
}

// A small real dataset off the traffic simulator: normal sessions plus a
// handful of duplicate-response sessions.
Dataset sim_dataset(std::uint64_t seed) {
  ScenarioConfig cfg = reference_scenario();
  cfg.seed = seed;
  cfg.attack_type = AttackType::kMissingRequest;
  cfg.attacks_to_execute = 6;
  std::vector<LabeledPacket> packets = generate_scenario(cfg);
  std::vector<FeatureRecord> records;
  records.reserve(packets.size());
  for (std::size_t i = 0; i < packets.size(); ++i)
    records.push_back(extract_features(packets[i], i));
  Dataset d;
  d.encoder = Encoder::fit(records);
  for (const auto& g : group_sequences(records))
    d.samples.push_back(pad_and_label(g, d.encoder, kDefaultMaxSeqLen));
  d.recompute_counts();
  return d;
}

}  // namespace

TEST_CASE("class name table") {
  CHECK(std::string(kClassNames[0]) == "normal");
  CHECK(std::string(kClassNames[1]) == "error_on_event");
  CHECK(std::string(kClassNames[2]) == "error_on_error");
  CHECK(std::string(kClassNames[3]) == "missing_response");
  CHECK(std::string(kClassNames[4]) == "missing_request");
}

TEST_CASE("perfect predictions produce an identity confusion matrix") {
  std::vector<int> y = {0, 1, 2, 3, 4, 0, 2};
  ConfusionMatrix cm = confusion(y, y);
  for (int t = 0; t < kNumClasses; ++t) {
    for (int p = 0; p < kNumClasses; ++p) {
      std::uint64_t expect =
          (t == p) ? std::uint64_t(std::count(y.begin(), y.end(), t)) : 0;
      CHECK(cm.counts[t][p] == expect);
      CHECK(cm.normalized[t][p] == (t == p ? 1.0 : 0.0));
    }
    CHECK(cm.has_support[t]);
  }
}

TEST_CASE("confusion rejects mismatched lengths and out-of-range labels") {
  std::vector<int> a = {0, 1}, b = {0};
  try {
    confusion(a, b);
    FAIL("expected EvalError");
  } catch (const EvalError& err) {
    CHECK(err.kind == EvalError::Kind::kLengthMismatch);
  }
  std::vector<int> bad = {0, 5};
  std::vector<int> ok = {0, 0};
  CHECK_THROWS_AS(confusion(bad, ok), std::invalid_argument);
  CHECK_THROWS_AS(confusion(ok, bad), std::invalid_argument);
}

TEST_CASE("per-class precision, recall, and f1 from a known tally") {
  // Class 1: two true positives, one false positive, one false negative.
  std::vector<int> y_true = {1, 1, 1, 0, 0};
  std::vector<int> y_pred = {1, 1, 0, 1, 0};
  ClassMetrics m = prf1(y_true, y_pred, 1);
  CHECK(m.tp == 2);
  CHECK(m.fp == 1);
  CHECK(m.fn == 1);
  CHECK(m.tn == 1);
  CHECK(m.support == 3);
  CHECK_FALSE(m.no_support);
  CHECK(m.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(m.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(m.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("zero denominators give zero metrics instead of NaN") {
  std::vector<int> y_true = {0, 0, 0};
  std::vector<int> y_pred = {0, 0, 0};
  ClassMetrics m = prf1(y_true, y_pred, 2);  // class never appears
  CHECK(m.support == 0);
  CHECK(m.no_support);
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);

  // Predicted but never true: precision defined, recall zero.
  std::vector<int> y_pred2 = {2, 0, 0};
  ClassMetrics m2 = prf1(y_true, y_pred2, 2);
  CHECK(m2.fp == 1);
  CHECK(m2.support == 0);
  CHECK(m2.precision == 0.0);
  CHECK(m2.f1 == 0.0);
}

TEST_CASE("binary ROC matches a hand-worked four-sample curve") {
  std::vector<double> scores = {0.9, 0.8, 0.3, 0.1};
  std::vector<std::uint8_t> pos = {1, 0, 1, 0};
  RocCurve c = roc_binary(scores, pos);

  CHECK(c.auc == doctest::Approx(0.75).epsilon(1e-12));
  REQUIRE(c.points.size() == 5);
  CHECK(c.points[0].fpr == 0.0);
  CHECK(c.points[0].tpr == 0.0);
  CHECK(std::isinf(c.points[0].threshold));

  CHECK(c.points[1].threshold == 0.9);
  CHECK(c.points[1].fpr == 0.0);
  CHECK(c.points[1].tpr == 0.5);

  CHECK(c.points[2].threshold == 0.8);
  CHECK(c.points[2].fpr == 0.5);
  CHECK(c.points[2].tpr == 0.5);

  CHECK(c.points[3].threshold == 0.3);
  CHECK(c.points[3].fpr == 0.5);
  CHECK(c.points[3].tpr == 1.0);

  CHECK(c.points[4].threshold == 0.1);
  CHECK(c.points[4].fpr == 1.0);
  CHECK(c.points[4].tpr == 1.0);
}

TEST_CASE("constant scores collapse to chance level") {
  std::vector<double> scores(40, 0.5);
  std::vector<std::uint8_t> pos(40, 0);
  for (std::size_t i = 0; i < 17; ++i) pos[i] = 1;
  RocCurve c = roc_binary(scores, pos);
  CHECK(c.auc == doctest::Approx(0.5).epsilon(1e-9));
  // One threshold group: straight diagonal.
  REQUIRE(c.points.size() == 2);
  CHECK(c.points[1].fpr == 1.0);
  CHECK(c.points[1].tpr == 1.0);
}

TEST_CASE("ROC refuses single-class inputs") {
  std::vector<double> scores = {0.1, 0.2};
  std::vector<std::uint8_t> all_pos = {1, 1}, all_neg = {0, 0};
  for (const auto& pos : {all_pos, all_neg}) {
    try {
      roc_binary(scores, pos);
      FAIL("expected EvalError");
    } catch (const EvalError& err) {
      CHECK(err.kind == EvalError::Kind::kSingleClassInput);
    }
  }
}

TEST_CASE("trapezoid AUC equals rank-based pair counting") {
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> scores(250);
    std::vector<std::uint8_t> pos(250);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      // Two-decimal quantization forces plenty of tied scores.
      scores[i] = std::round(uni(rng) * 100.0) / 100.0;
      pos[i] = static_cast<std::uint8_t>(uni(rng) < 0.3 ? 1 : 0);
    }
    pos[0] = 1;  // guarantee both classes
    pos[1] = 0;
    double expected = pairwise_auc(scores, pos);
    RocCurve c = roc_binary(scores, pos);
    CHECK(c.auc == doctest::Approx(expected).epsilon(1e-12));

    // AUC is invariant under strictly increasing score transforms.
    std::vector<double> squashed(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
      squashed[i] = 1.0 / (1.0 + std::exp(-3.0 * scores[i]));
    RocCurve c2 = roc_binary(squashed, pos);
    CHECK(c2.auc == doctest::Approx(c.auc).epsilon(1e-12));
  }
}

TEST_CASE("multiclass ROC: perfect scores give unit areas everywhere") {
  std::vector<std::array<double, kNumClasses>> scores;
  std::vector<int> y;
  for (int i = 0; i < 30; ++i) {
    int cls = i % 3;
    std::array<double, kNumClasses> row{};
    row[std::size_t(cls)] = 1.0;
    scores.push_back(row);
    y.push_back(cls);
  }
  RocSet roc = roc_auc(scores, y);
  for (int c = 0; c < 3; ++c) {
    REQUIRE(roc.per_class[std::size_t(c)].has_value());
    CHECK(roc.per_class[std::size_t(c)]->auc == doctest::Approx(1.0));
  }
  // Absent classes carry no curve rather than a fake one.
  CHECK_FALSE(roc.per_class[3].has_value());
  CHECK_FALSE(roc.per_class[4].has_value());
  CHECK(roc.micro.auc == doctest::Approx(1.0));
  CHECK(roc.macro.auc == doctest::Approx(1.0));
}

TEST_CASE("macro AUC is exactly the mean of the per-class areas") {
  std::mt19937 rng(777);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> lab(0, kNumClasses - 1);
  std::vector<std::array<double, kNumClasses>> scores;
  std::vector<int> y;
  for (int i = 0; i < 400; ++i) {
    int cls = lab(rng);
    std::array<double, kNumClasses> row{};
    double z = 0;
    for (auto& v : row) {
      v = std::exp(gauss(rng) + (&v - row.data() == cls ? 0.8 : 0.0));
      z += v;
    }
    for (auto& v : row) v /= z;
    scores.push_back(row);
    y.push_back(cls);
  }
  RocSet roc = roc_auc(scores, y);
  double sum = 0;
  int present = 0;
  for (const auto& c : roc.per_class) {
    if (!c) continue;
    sum += c->auc;
    ++present;
  }
  REQUIRE(present == kNumClasses);
  CHECK(roc.macro.auc == doctest::Approx(sum / present).epsilon(1e-12));
  CHECK(roc.micro.auc > 0.5);  // the bumped true class is informative
}

TEST_CASE("stratified k-fold balances every class across folds") {
  // Nine samples, three per class, three folds: each fold holds exactly one
  // sample of each class.
  std::vector<int> labels = {0, 1, 2, 0, 1, 2, 0, 1, 2};
  auto splits = stratified_kfold(labels, 3, 9);
  REQUIRE(splits.size() == 3);

  std::set<std::size_t> seen;
  for (const auto& s : splits) {
    CHECK(s.train_idx.size() == 6);
    CHECK(s.val_idx.size() == 3);
    std::array<int, 3> per_class{};
    for (std::size_t i : s.val_idx) {
      ++per_class[std::size_t(labels[i])];
      CHECK(seen.insert(i).second);  // folds are disjoint
    }
    for (int c = 0; c < 3; ++c) CHECK(per_class[std::size_t(c)] == 1);

    // train and validation partition the dataset
    std::set<std::size_t> all(s.train_idx.begin(), s.train_idx.end());
    for (std::size_t i : s.val_idx) CHECK(all.insert(i).second);
    CHECK(all.size() == labels.size());
  }
  CHECK(seen.size() == labels.size());  // folds cover everything
}

TEST_CASE("fold class counts stay within one of the even share") {
  std::vector<int> labels;
  for (int i = 0; i < 4; ++i) labels.push_back(0);
  for (int i = 0; i < 5; ++i) labels.push_back(1);
  auto splits = stratified_kfold(labels, 3, 5);
  for (const auto& s : splits) {
    std::array<int, 2> per_class{};
    for (std::size_t i : s.val_idx) ++per_class[std::size_t(labels[i])];
    CHECK(per_class[0] >= 1);
    CHECK(per_class[0] <= 2);
    CHECK(per_class[1] >= 1);
    CHECK(per_class[1] <= 2);
  }
}

TEST_CASE("k-fold rejects undersized classes and bad k") {
  std::vector<int> labels = {0, 0, 0, 1, 1};  // class 1 has two samples
  try {
    stratified_kfold(labels, 3, 1);
    FAIL("expected EvalError");
  } catch (const EvalError& err) {
    CHECK(err.kind == EvalError::Kind::kClassTooSmall);
  }
  CHECK_THROWS_AS(stratified_kfold(labels, 1, 1), std::invalid_argument);
}

TEST_CASE("k-fold assignment is deterministic in the seed") {
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) labels.push_back(i % 4);
  auto a = stratified_kfold(labels, 3, 42);
  auto b = stratified_kfold(labels, 3, 42);
  REQUIRE(a.size() == b.size());
  bool all_equal = true;
  for (std::size_t f = 0; f < a.size(); ++f) {
    if (a[f].train_idx != b[f].train_idx || a[f].val_idx != b[f].val_idx)
      all_equal = false;
  }
  CHECK(all_equal);

  auto c = stratified_kfold(labels, 3, 43);
  bool any_differs = false;
  for (std::size_t f = 0; f < a.size(); ++f)
    if (a[f].val_idx != c[f].val_idx) any_differs = true;
  CHECK(any_differs);
}

TEST_CASE("report assembly ties the pieces together") {
  std::vector<int> y_true = {0, 0, 1, 4};
  std::vector<Prediction> preds(4);
  auto set = [&](std::size_t i, int label) {
    preds[i].label = label;
    preds[i].probs.fill(0.02);
    preds[i].probs[std::size_t(label)] = 0.92;
  };
  set(0, 0);
  set(1, 0);
  set(2, 1);
  set(3, 1);  // the one mistake: true 4 predicted 1

  EvalReport r = build_report(y_true, preds);
  CHECK(r.accuracy == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(r.cm.counts[0][0] == 2);
  CHECK(r.cm.counts[1][1] == 1);
  CHECK(r.cm.counts[4][1] == 1);
  CHECK(r.per_class[0].f1 == doctest::Approx(1.0));
  CHECK(r.per_class[4].recall == 0.0);
  CHECK(r.per_class[1].precision == doctest::Approx(0.5));
  // Classes 2 and 3 never occur: no curve, no support.
  CHECK(r.per_class[2].no_support);
  CHECK_FALSE(r.roc.per_class[2].has_value());

  nlohmann::json j = report_to_json(r, /*include_roc_points=*/true);
  CHECK(j["accuracy"].get<double>() == doctest::Approx(0.75));
  CHECK(j["classes"].size() == kNumClasses);
  CHECK(j["classes"][2]["auc"].is_null());
  CHECK(j["roc"].contains("micro_points"));
  nlohmann::json lean = report_to_json(r, /*include_roc_points=*/false);
  CHECK_FALSE(lean["roc"].contains("micro_points"));
}

TEST_CASE("evaluate_model refuses a dataset from a different encoder") {
  Dataset d = sim_dataset(21);
  RnnModel m = RnnModel::init(d.encoder.total_width(), 3, "0123deadbeef");
  try {
    evaluate_model(m, d);
    FAIL("expected SeqnetError");
  } catch (const SeqnetError& err) {
    CHECK(err.kind == SeqnetError::Kind::kEncoderHashMismatch);
    CHECK(std::string(err.what()).find("0123deadbeef") != std::string::npos);
  }
}

TEST_CASE("cross validation trains one model per fold deterministically") {
  Dataset d = sim_dataset(22);
  REQUIRE(d.class_counts[4] == 6);

  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.patience = 5;
  cfg.batch_size = 16;
  cfg.lr = 0.005;
  cfg.seed = 99;

  std::vector<RnnModel> models_a, models_b;
  CvReport a = cross_validate(d, cfg, 3, /*jobs=*/3, &models_a);
  CvReport b = cross_validate(d, cfg, 3, /*jobs=*/1, &models_b);

  REQUIRE(a.folds.size() == 3);
  REQUIRE(models_a.size() == 3);
  for (int f = 0; f < 3; ++f) {
    CHECK(a.folds[std::size_t(f)].fold == f + 1);
    CHECK(a.folds[std::size_t(f)].history.train_loss.size() == 2);
    CHECK(a.folds[std::size_t(f)].eval.accuracy >= 0.0);
    CHECK(a.folds[std::size_t(f)].eval.accuracy <= 1.0);
    CHECK(models_a[std::size_t(f)].encoder_hash == d.encoder.sha256_hex());
    // Thread count must not affect the result.
    CHECK(models_a[std::size_t(f)].params == models_b[std::size_t(f)].params);
    CHECK(a.folds[std::size_t(f)].history.val_loss ==
          b.folds[std::size_t(f)].history.val_loss);
  }

  nlohmann::json j = cv_report_to_json(a);
  REQUIRE(j["folds"].size() == 3);
  CHECK(j["folds"][0].contains("history"));
  CHECK(j["folds"][0].contains("metrics"));
}

TEST_CASE("CSV writers emit the documented headers") {
  TempDir tmp;
  std::vector<int> y_true = {0, 0, 1, 1};
  std::vector<Prediction> preds(4);
  for (std::size_t i = 0; i < 4; ++i) {
    preds[i].label = int(i / 2);
    preds[i].probs.fill(0.1);
    preds[i].probs[i / 2] = 0.6;
  }
  EvalReport r = build_report(y_true, preds);

  std::string roc_path = tmp.file("roc.csv");
  write_roc_csv(r.roc, roc_path);
  std::ifstream roc_in(roc_path);
  std::string line;
  REQUIRE(std::getline(roc_in, line));
  CHECK(line == "scope,threshold,fpr,tpr");
  bool saw_inf = false;
  while (std::getline(roc_in, line))
    if (line.find("inf") != std::string::npos) saw_inf = true;
  CHECK(saw_inf);  // the +inf sentinel threshold is spelled out

  std::string cm_path = tmp.file("cm.csv");
  write_confusion_csv(r.cm, cm_path);
  std::ifstream cm_in(cm_path);
  REQUIRE(std::getline(cm_in, line));
  CHECK(line.substr(0, 18) == "section,true_class");
  std::size_t rows = 0;
  while (std::getline(cm_in, line)) ++rows;
  CHECK(rows == 2 * kNumClasses);  // counts block plus normalized block
}
