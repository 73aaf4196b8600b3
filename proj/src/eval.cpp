#include "someip_ids/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <thread>

#include "someip_ids/util.hpp"

namespace someip_ids {

const std::array<const char*, kNumClasses> kClassNames = {
    "normal", "error_on_event", "error_on_error", "missing_response",
    "missing_request"};

ConfusionMatrix confusion(std::span<const int> y_true,
                          std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size())
    throw EvalError(EvalError::Kind::kLengthMismatch,
                    "confusion: label vectors of different lengths");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    auto t = static_cast<std::size_t>(y_true[i]);
    auto p = static_cast<std::size_t>(y_pred[i]);
    if (t >= kNumClasses || p >= kNumClasses)
      throw std::invalid_argument("confusion: label out of range");
    ++cm.counts[t][p];
  }
  for (std::size_t t = 0; t < kNumClasses; ++t) {
    std::uint64_t row = 0;
    for (auto v : cm.counts[t]) row += v;
    cm.has_support[t] = row > 0;
    if (row > 0)
      for (std::size_t p = 0; p < kNumClasses; ++p)
        cm.normalized[t][p] =
            static_cast<double>(cm.counts[t][p]) / static_cast<double>(row);
  }
  return cm;
}

ClassMetrics prf1(std::span<const int> y_true, std::span<const int> y_pred,
                  int cls) {
  if (y_true.size() != y_pred.size())
    throw EvalError(EvalError::Kind::kLengthMismatch,
                    "prf1: label vectors of different lengths");
  ClassMetrics m;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    bool t = y_true[i] == cls;
    bool p = y_pred[i] == cls;
    if (t && p)
      ++m.tp;
    else if (!t && p)
      ++m.fp;
    else if (t && !p)
      ++m.fn;
    else
      ++m.tn;
  }
  m.support = m.tp + m.fn;
  m.no_support = m.support == 0;
  if (m.tp + m.fp > 0)
    m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  if (m.tp + m.fn > 0)
    m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.precision + m.recall > 0)
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

RocCurve roc_binary(std::span<const double> scores,
                    std::span<const std::uint8_t> positives,
                    const std::string& scope) {
  if (scores.size() != positives.size())
    throw EvalError(EvalError::Kind::kLengthMismatch,
                    "roc_binary: scores and labels of different lengths");
  std::uint64_t pos = 0, neg = 0;
  for (std::uint8_t p : positives) (p ? pos : neg) += 1;
  if (pos == 0 || neg == 0)
    throw EvalError(EvalError::Kind::kSingleClassInput,
                    "roc_binary: need both classes, got " +
                        std::to_string(pos) + " positives and " +
                        std::to_string(neg) + " negatives");

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  RocCurve curve;
  curve.scope = scope;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::uint64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      if (positives[order[i]])
        ++tp;
      else
        ++fp;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos),
                            s});
  }
  double auc = 0.0;
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const RocPoint& a = curve.points[k - 1];
    const RocPoint& b = curve.points[k];
    auc += (b.fpr - a.fpr) * (b.tpr + a.tpr) / 2.0;
  }
  curve.auc = auc;
  return curve;
}

namespace {

// Per distinct FPR value: the first and last TPR of the polyline there, so
// vertical climbs survive the function-of-fpr view.
struct CurveProfile {
  std::vector<double> fpr, tpr_first, tpr_last;

  explicit CurveProfile(const RocCurve& c) {
    for (const RocPoint& p : c.points) {
      if (!fpr.empty() && fpr.back() == p.fpr) {
        tpr_last.back() = p.tpr;
      } else {
        fpr.push_back(p.fpr);
        tpr_first.push_back(p.tpr);
        tpr_last.push_back(p.tpr);
      }
    }
  }

  // TPR approaching f from the left / leaving to the right.
  std::pair<double, double> at(double f) const {
    auto it = std::lower_bound(fpr.begin(), fpr.end(), f);
    std::size_t i = static_cast<std::size_t>(it - fpr.begin());
    if (it != fpr.end() && *it == f) return {tpr_first[i], tpr_last[i]};
    // strictly between grid points i-1 and i
    double x0 = fpr[i - 1], x1 = fpr[i];
    double y0 = tpr_last[i - 1], y1 = tpr_first[i];
    double y = y0 + (y1 - y0) * (f - x0) / (x1 - x0);
    return {y, y};
  }
};

}  // namespace

RocSet roc_auc(const std::vector<std::array<double, kNumClasses>>& scores,
               std::span<const int> y_true) {
  if (scores.size() != y_true.size())
    throw EvalError(EvalError::Kind::kLengthMismatch,
                    "roc_auc: scores and labels of different lengths");
  RocSet set;
  std::vector<double> s(scores.size());
  std::vector<std::uint8_t> z(scores.size());
  std::vector<double> micro_s;
  std::vector<std::uint8_t> micro_z;
  micro_s.reserve(scores.size() * kNumClasses);
  micro_z.reserve(scores.size() * kNumClasses);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      s[i] = scores[i][c];
      z[i] = y_true[i] == static_cast<int>(c) ? 1 : 0;
      micro_s.push_back(s[i]);
      micro_z.push_back(z[i]);
    }
    try {
      set.per_class[c] = roc_binary(s, z, kClassNames[c]);
    } catch (const EvalError& e) {
      if (e.kind != EvalError::Kind::kSingleClassInput) throw;
      set.per_class[c] = std::nullopt;
    }
  }
  set.micro = roc_binary(micro_s, micro_z, "micro");

  // Macro: average the per-class curves over the union FPR grid. Keeping the
  // first/last TPR at each grid value makes the trapezoid area of the mean
  // curve equal the mean of the per-class areas.
  std::vector<const RocCurve*> curves;
  for (const auto& c : set.per_class)
    if (c) curves.push_back(&*c);
  set.macro.scope = "macro";
  if (!curves.empty()) {
    std::vector<CurveProfile> profiles;
    std::vector<double> grid;
    for (const RocCurve* c : curves) {
      profiles.emplace_back(*c);
      for (const RocPoint& p : c->points) grid.push_back(p.fpr);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    for (double f : grid) {
      double lo = 0.0, hi = 0.0;
      for (const CurveProfile& prof : profiles) {
        auto [a, b] = prof.at(f);
        lo += a;
        hi += b;
      }
      lo /= static_cast<double>(profiles.size());
      hi /= static_cast<double>(profiles.size());
      set.macro.points.push_back({f, lo, 0.0});
      if (hi != lo) set.macro.points.push_back({f, hi, 0.0});
    }
    double auc = 0.0;
    for (std::size_t k = 1; k < set.macro.points.size(); ++k) {
      const RocPoint& a = set.macro.points[k - 1];
      const RocPoint& b = set.macro.points[k];
      auc += (b.fpr - a.fpr) * (b.tpr + a.tpr) / 2.0;
    }
    set.macro.auc = auc;
  }
  return set;
}

std::vector<FoldSplit> stratified_kfold(std::span<const int> labels, int k,
                                        std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("stratified_kfold: k must be >= 2");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(i);
  for (const auto& [cls, idx] : by_class) {
    if (idx.size() < static_cast<std::size_t>(k))
      throw EvalError(EvalError::Kind::kClassTooSmall,
                      "class " + std::to_string(cls) + " has " +
                          std::to_string(idx.size()) + " samples, fewer than " +
                          std::to_string(k) + " folds");
  }

  std::vector<std::vector<std::size_t>> fold_members(static_cast<std::size_t>(k));
  std::size_t class_ordinal = 0;
  for (auto& [cls, idx] : by_class) {
    DetRng rng(mix_seed(seed, 0x5F01 + static_cast<std::uint64_t>(cls)));
    rng.shuffle(idx);
    // Rotate the starting fold per class so remainders spread out.
    std::size_t start = class_ordinal++ % static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < idx.size(); ++i)
      fold_members[(start + i) % static_cast<std::size_t>(k)].push_back(idx[i]);
  }

  std::vector<FoldSplit> splits(static_cast<std::size_t>(k));
  for (std::size_t f = 0; f < splits.size(); ++f) {
    splits[f].val_idx = fold_members[f];
    std::sort(splits[f].val_idx.begin(), splits[f].val_idx.end());
    for (std::size_t g = 0; g < fold_members.size(); ++g)
      if (g != f)
        splits[f].train_idx.insert(splits[f].train_idx.end(),
                                   fold_members[g].begin(),
                                   fold_members[g].end());
    std::sort(splits[f].train_idx.begin(), splits[f].train_idx.end());
  }
  return splits;
}

EvalReport build_report(std::span<const int> y_true,
                        const std::vector<Prediction>& preds) {
  if (y_true.size() != preds.size())
    throw EvalError(EvalError::Kind::kLengthMismatch,
                    "build_report: prediction count mismatch");
  std::vector<int> y_pred(preds.size());
  std::vector<std::array<double, kNumClasses>> scores(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    y_pred[i] = preds[i].label;
    scores[i] = preds[i].probs;
  }
  EvalReport r;
  r.cm = confusion(y_true, y_pred);
  for (int c = 0; c < kNumClasses; ++c)
    r.per_class[static_cast<std::size_t>(c)] = prf1(y_true, y_pred, c);
  r.roc = roc_auc(scores, y_true);
  std::uint64_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i)
    if (y_true[i] == y_pred[i]) ++hits;
  r.accuracy = y_true.empty()
                   ? 0.0
                   : static_cast<double>(hits) / static_cast<double>(y_true.size());
  return r;
}

EvalReport evaluate_model(const RnnModel& model, const Dataset& data,
                          bool mask_padding) {
  std::string dataset_hash = data.encoder.sha256_hex();
  if (model.encoder_hash != dataset_hash)
    throw SeqnetError(SeqnetError::Kind::kEncoderHashMismatch,
                      "model expects encoder " + model.encoder_hash +
                          ", dataset was encoded with " + dataset_hash);
  std::vector<int> y_true;
  y_true.reserve(data.samples.size());
  for (const auto& s : data.samples) y_true.push_back(s.label);
  return build_report(y_true, predict(model, data, mask_padding));
}

CvReport cross_validate(const Dataset& data, const TrainConfig& cfg, int k,
                        int jobs, std::vector<RnnModel>* out_models) {
  std::vector<int> labels;
  labels.reserve(data.samples.size());
  for (const auto& s : data.samples) labels.push_back(s.label);
  std::vector<FoldSplit> splits = stratified_kfold(labels, k, cfg.seed);

  std::string encoder_hash = data.encoder.sha256_hex();
  std::uint32_t width = data.encoder.total_width();
  std::vector<RnnModel> models(splits.size());
  std::vector<FoldReport> reports(splits.size());
  std::vector<std::exception_ptr> errors(splits.size());

  auto run_fold = [&](std::size_t f) {
    try {
      const FoldSplit& split = splits[f];
      RnnModel model =
          RnnModel::init(width, mix_seed(cfg.seed, 0xF01D + f), encoder_hash);
      TrainConfig fold_cfg = cfg;
      fold_cfg.seed = mix_seed(cfg.seed, 0x7EA1 + f);
      TrainHistory history = train(model, data, split.train_idx, split.val_idx,
                                   fold_cfg);

      Dataset val;
      val.encoder = data.encoder;
      for (std::size_t i : split.val_idx) val.samples.push_back(data.samples[i]);
      val.recompute_counts();
      FoldReport fr;
      fr.fold = static_cast<int>(f) + 1;
      fr.eval = evaluate_model(model, val, cfg.mask_padding);
      fr.history = std::move(history);
      reports[f] = std::move(fr);
      models[f] = std::move(model);
    } catch (...) {
      errors[f] = std::current_exception();
    }
  };

  int workers = std::max(1, std::min(jobs, static_cast<int>(splits.size())));
  if (workers == 1) {
    for (std::size_t f = 0; f < splits.size(); ++f) run_fold(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          std::size_t f = next.fetch_add(1);
          if (f >= splits.size()) break;
          run_fold(f);
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  if (out_models) *out_models = std::move(models);
  CvReport cv;
  cv.folds = std::move(reports);
  return cv;
}

nlohmann::json report_to_json(const EvalReport& report, bool include_roc_points) {
  nlohmann::json classes = nlohmann::json::array();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const ClassMetrics& m = report.per_class[c];
    nlohmann::json jc = {{"label", c},
                         {"name", kClassNames[c]},
                         {"support", m.support},
                         {"tp", m.tp},
                         {"fp", m.fp},
                         {"fn", m.fn},
                         {"tn", m.tn},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"no_support", m.no_support}};
    if (report.roc.per_class[c])
      jc["auc"] = report.roc.per_class[c]->auc;
    else
      jc["auc"] = nullptr;
    classes.push_back(std::move(jc));
  }
  nlohmann::json counts = nlohmann::json::array();
  nlohmann::json normalized = nlohmann::json::array();
  for (std::size_t t = 0; t < kNumClasses; ++t) {
    counts.push_back(report.cm.counts[t]);
    normalized.push_back(report.cm.normalized[t]);
  }
  nlohmann::json j = {{"accuracy", report.accuracy},
                      {"classes", classes},
                      {"confusion",
                       {{"counts", counts},
                        {"normalized", normalized},
                        {"has_support", report.cm.has_support}}},
                      {"roc",
                       {{"micro_auc", report.roc.micro.auc},
                        {"macro_auc", report.roc.macro.auc}}}};
  if (include_roc_points) {
    auto points_json = [](const RocCurve& c) {
      nlohmann::json pts = nlohmann::json::array();
      for (const RocPoint& p : c.points)
        pts.push_back({{"fpr", p.fpr},
                       {"tpr", p.tpr},
                       {"threshold", std::isfinite(p.threshold)
                                         ? nlohmann::json(p.threshold)
                                         : nlohmann::json(nullptr)}});
      return pts;
    };
    nlohmann::json per_class = nlohmann::json::array();
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (report.roc.per_class[c])
        per_class.push_back({{"name", kClassNames[c]},
                             {"auc", report.roc.per_class[c]->auc},
                             {"points", points_json(*report.roc.per_class[c])}});
      else
        per_class.push_back({{"name", kClassNames[c]}, {"auc", nullptr}});
    }
    j["roc"]["per_class"] = per_class;
    j["roc"]["micro_points"] = points_json(report.roc.micro);
    j["roc"]["macro_points"] = points_json(report.roc.macro);
  }
  return j;
}

nlohmann::json history_to_json(const TrainHistory& history) {
  return {{"train_loss", history.train_loss},
          {"val_loss", history.val_loss},
          {"best_epoch", history.best_epoch},
          {"stopped_epoch", history.stopped_epoch}};
}

nlohmann::json cv_report_to_json(const CvReport& report) {
  nlohmann::json folds = nlohmann::json::array();
  for (const FoldReport& fr : report.folds) {
    folds.push_back({{"fold", fr.fold},
                     {"metrics", report_to_json(fr.eval, false)},
                     {"history", history_to_json(fr.history)}});
  }
  return {{"folds", folds}};
}

void write_roc_csv(const RocSet& roc, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "scope,threshold,fpr,tpr\n";
  auto dump = [&f](const RocCurve& c) {
    for (const RocPoint& p : c.points) {
      f << c.scope << ",";
      if (std::isfinite(p.threshold))
        f << p.threshold;
      else
        f << (p.threshold > 0 ? "inf" : "-inf");
      f << "," << p.fpr << "," << p.tpr << "\n";
    }
  };
  for (const auto& c : roc.per_class)
    if (c) dump(*c);
  dump(roc.micro);
  dump(roc.macro);
  if (!f) throw std::runtime_error("write failed on " + path);
}

void write_confusion_csv(const ConfusionMatrix& cm, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "section,true_class";
  for (auto name : kClassNames) f << "," << name;
  f << "\n";
  for (std::size_t t = 0; t < kNumClasses; ++t) {
    f << "counts," << kClassNames[t];
    for (std::size_t p = 0; p < kNumClasses; ++p) f << "," << cm.counts[t][p];
    f << "\n";
  }
  for (std::size_t t = 0; t < kNumClasses; ++t) {
    f << "normalized," << kClassNames[t];
    for (std::size_t p = 0; p < kNumClasses; ++p) f << "," << cm.normalized[t][p];
    f << "\n";
  }
  if (!f) throw std::runtime_error("write failed on " + path);
}

}  // namespace someip_ids
