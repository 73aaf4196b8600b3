#include "someip_ids/seqnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "someip_ids/util.hpp"

namespace someip_ids {

const std::array<const char*, 8> RnnParams::kTensorNames = {
    "u1", "w1", "b1", "u2", "w2", "b2", "v", "c"};

RnnParams RnnParams::shaped(std::uint32_t input_width, std::uint32_t hidden1,
                            std::uint32_t hidden2, std::uint32_t classes) {
  RnnParams p;
  p.u1 = Matrix(hidden1, input_width);
  p.w1 = Matrix(hidden1, hidden1);
  p.b1.assign(hidden1, 0.0);
  p.u2 = Matrix(hidden2, hidden1);
  p.w2 = Matrix(hidden2, hidden2);
  p.b2.assign(hidden2, 0.0);
  p.v = Matrix(classes, hidden2);
  p.c.assign(classes, 0.0);
  return p;
}

void RnnParams::zero() {
  for (auto view : views()) std::fill(view.begin(), view.end(), 0.0);
}

std::vector<std::span<double>> RnnParams::views() {
  return {u1.data, w1.data, b1, u2.data, w2.data, b2, v.data, c};
}

std::vector<std::span<const double>> RnnParams::views() const {
  return {u1.data, w1.data, b1, u2.data, w2.data, b2, v.data, c};
}

namespace {

void fill_uniform(DetRng& rng, std::vector<double>& data, std::size_t fan_in) {
  double s = std::sqrt(1.0 / static_cast<double>(fan_in));
  for (double& x : data) x = rng.uniform_real(-s, s);
}

double normal01(DetRng& rng) {
  double u = 1.0 - rng.uniform01();
  double v = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u)) *
         std::cos(2.0 * 3.14159265358979323846 * v);
}

// Orthonormal square matrix: Gaussian fill plus modified Gram-Schmidt on the
// rows. Recurrent kernels start orthogonal so the hidden state neither decays
// nor blows up across the 60 unrolled steps; a plain uniform draw here makes
// a visible fraction of training runs stall on the all-majority plateau.
void fill_orthogonal(DetRng& rng, std::vector<double>& data, std::size_t n) {
  for (double& x : data) x = normal01(rng);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = data.data() + i * n;
    for (std::size_t j = 0; j < i; ++j) {
      const double* prev = data.data() + j * n;
      double dot = 0;
      for (std::size_t k = 0; k < n; ++k) dot += row[k] * prev[k];
      for (std::size_t k = 0; k < n; ++k) row[k] -= dot * prev[k];
    }
    double norm = 0;
    for (std::size_t k = 0; k < n; ++k) norm += row[k] * row[k];
    norm = std::sqrt(norm);
    if (norm < 1e-8) {
      // vanishing after projection: redraw this row and redo it
      for (std::size_t k = 0; k < n; ++k) row[k] = normal01(rng);
      --i;
      continue;
    }
    for (std::size_t k = 0; k < n; ++k) row[k] /= norm;
  }
}

}  // namespace

RnnModel RnnModel::init(std::uint32_t input_width, std::uint64_t seed,
                        std::string encoder_hash, std::uint32_t hidden1,
                        std::uint32_t hidden2, std::uint32_t classes) {
  RnnModel m;
  m.input_width = input_width;
  m.hidden1 = hidden1;
  m.hidden2 = hidden2;
  m.classes = classes;
  m.encoder_hash = std::move(encoder_hash);
  m.params = RnnParams::shaped(input_width, hidden1, hidden2, classes);
  DetRng rng(mix_seed(seed, 0x1217));
  fill_uniform(rng, m.params.u1.data, input_width);
  fill_orthogonal(rng, m.params.w1.data, hidden1);
  fill_uniform(rng, m.params.u2.data, hidden1);
  fill_orthogonal(rng, m.params.w2.data, hidden2);
  fill_uniform(rng, m.params.v.data, hidden2);
  return m;
}

const std::vector<double>& forward(const RnnModel& model,
                                   const SequenceSample& sample,
                                   ForwardCache& cache, bool mask_padding) {
  if (sample.width != model.input_width)
    throw SeqnetError(SeqnetError::Kind::kDimensionMismatch,
                      "sample width " + std::to_string(sample.width) +
                          " does not match model input width " +
                          std::to_string(model.input_width));
  const std::uint32_t h1 = model.hidden1, h2 = model.hidden2;
  const std::uint32_t steps = mask_padding ? sample.true_len : sample.max_len;
  cache.steps = steps;
  cache.h1.assign(std::size_t(steps + 1) * h1, 0.0);
  cache.h2.assign(std::size_t(steps + 1) * h2, 0.0);

  const RnnParams& p = model.params;
  for (std::uint32_t t = 1; t <= steps; ++t) {
    const double* h1_prev = cache.h1.data() + std::size_t(t - 1) * h1;
    double* h1_t = cache.h1.data() + std::size_t(t) * h1;
    auto active = sample.row_active(t - 1);
    for (std::uint32_t i = 0; i < h1; ++i) {
      double acc = p.b1[i];
      const double* w_row = p.w1.row(i);
      for (std::uint32_t j = 0; j < h1; ++j) acc += w_row[j] * h1_prev[j];
      const double* u_row = p.u1.row(i);
      for (std::uint32_t col : active) acc += u_row[col];
      h1_t[i] = std::tanh(acc);
    }
    const double* h2_prev = cache.h2.data() + std::size_t(t - 1) * h2;
    double* h2_t = cache.h2.data() + std::size_t(t) * h2;
    for (std::uint32_t i = 0; i < h2; ++i) {
      double acc = p.b2[i];
      const double* w_row = p.w2.row(i);
      for (std::uint32_t j = 0; j < h2; ++j) acc += w_row[j] * h2_prev[j];
      const double* u_row = p.u2.row(i);
      for (std::uint32_t j = 0; j < h1; ++j) acc += u_row[j] * h1_t[j];
      h2_t[i] = std::tanh(acc);
    }
  }

  const double* h2_last = cache.h2.data() + std::size_t(steps) * h2;
  cache.logits.assign(model.classes, 0.0);
  for (std::uint32_t k = 0; k < model.classes; ++k) {
    double acc = p.c[k];
    const double* v_row = p.v.row(k);
    for (std::uint32_t j = 0; j < h2; ++j) acc += v_row[j] * h2_last[j];
    cache.logits[k] = acc;
  }
  double mx = *std::max_element(cache.logits.begin(), cache.logits.end());
  cache.probs.assign(model.classes, 0.0);
  double sum = 0.0;
  for (std::uint32_t k = 0; k < model.classes; ++k) {
    cache.probs[k] = std::exp(cache.logits[k] - mx);
    sum += cache.probs[k];
  }
  for (double& pk : cache.probs) pk /= sum;
  return cache.probs;
}

double weighted_nll(const std::vector<double>& probs, int label, double weight) {
  double p = std::max(probs.at(static_cast<std::size_t>(label)), 1e-12);
  return -weight * std::log(p);
}

void backward(const RnnModel& model, const SequenceSample& sample,
              const ForwardCache& cache, int label, double weight, double scale,
              RnnParams& grads) {
  const std::uint32_t h1 = model.hidden1, h2 = model.hidden2;
  const std::uint32_t steps = cache.steps;
  const RnnParams& p = model.params;

  std::vector<double> dlogit(model.classes);
  for (std::uint32_t k = 0; k < model.classes; ++k)
    dlogit[k] = scale * weight *
                (cache.probs[k] - (static_cast<int>(k) == label ? 1.0 : 0.0));

  const double* h2_last = cache.h2.data() + std::size_t(steps) * h2;
  std::vector<double> delta_h2(h2, 0.0);
  for (std::uint32_t k = 0; k < model.classes; ++k) {
    double* gv_row = grads.v.row(k);
    for (std::uint32_t j = 0; j < h2; ++j) gv_row[j] += dlogit[k] * h2_last[j];
    grads.c[k] += dlogit[k];
    const double* v_row = p.v.row(k);
    for (std::uint32_t j = 0; j < h2; ++j) delta_h2[j] += v_row[j] * dlogit[k];
  }

  std::vector<double> carry_h1(h1, 0.0);
  std::vector<double> delta_a2(h2), delta_a1(h1), delta_h1(h1), next_h2(h2);
  for (std::uint32_t t = steps; t >= 1; --t) {
    const double* h1_t = cache.h1.data() + std::size_t(t) * h1;
    const double* h1_prev = cache.h1.data() + std::size_t(t - 1) * h1;
    const double* h2_t = cache.h2.data() + std::size_t(t) * h2;
    const double* h2_prev = cache.h2.data() + std::size_t(t - 1) * h2;

    for (std::uint32_t i = 0; i < h2; ++i)
      delta_a2[i] = delta_h2[i] * (1.0 - h2_t[i] * h2_t[i]);
    for (std::uint32_t i = 0; i < h2; ++i) {
      double* gw_row = grads.w2.row(i);
      for (std::uint32_t j = 0; j < h2; ++j) gw_row[j] += delta_a2[i] * h2_prev[j];
      double* gu_row = grads.u2.row(i);
      for (std::uint32_t j = 0; j < h1; ++j) gu_row[j] += delta_a2[i] * h1_t[j];
      grads.b2[i] += delta_a2[i];
    }
    std::fill(next_h2.begin(), next_h2.end(), 0.0);
    for (std::uint32_t i = 0; i < h2; ++i) {
      const double* w_row = p.w2.row(i);
      for (std::uint32_t j = 0; j < h2; ++j) next_h2[j] += w_row[j] * delta_a2[i];
    }
    std::fill(delta_h1.begin(), delta_h1.end(), 0.0);
    for (std::uint32_t i = 0; i < h2; ++i) {
      const double* u_row = p.u2.row(i);
      for (std::uint32_t j = 0; j < h1; ++j) delta_h1[j] += u_row[j] * delta_a2[i];
    }
    for (std::uint32_t j = 0; j < h1; ++j) delta_h1[j] += carry_h1[j];

    for (std::uint32_t i = 0; i < h1; ++i)
      delta_a1[i] = delta_h1[i] * (1.0 - h1_t[i] * h1_t[i]);
    auto active = sample.row_active(t - 1);
    for (std::uint32_t i = 0; i < h1; ++i) {
      double* gw_row = grads.w1.row(i);
      for (std::uint32_t j = 0; j < h1; ++j) gw_row[j] += delta_a1[i] * h1_prev[j];
      double* gu_row = grads.u1.row(i);
      for (std::uint32_t col : active) gu_row[col] += delta_a1[i];
      grads.b1[i] += delta_a1[i];
    }
    std::fill(carry_h1.begin(), carry_h1.end(), 0.0);
    for (std::uint32_t i = 0; i < h1; ++i) {
      const double* w_row = p.w1.row(i);
      for (std::uint32_t j = 0; j < h1; ++j) carry_h1[j] += w_row[j] * delta_a1[i];
    }
    delta_h2 = next_h2;
  }
}

double global_norm(const RnnParams& grads) {
  double sq = 0.0;
  for (auto view : grads.views())
    for (double g : view) sq += g * g;
  return std::sqrt(sq);
}

void clip_global_norm(RnnParams& grads, double clip) {
  if (clip <= 0.0) return;
  double norm = global_norm(grads);
  if (norm <= clip || norm == 0.0) return;
  double s = clip / norm;
  for (auto view : grads.views())
    for (double& g : view) g *= s;
}

AdamState AdamState::like(const RnnParams& params) {
  AdamState st;
  for (auto view : params.views()) {
    st.m.emplace_back(view.size(), 0.0);
    st.v.emplace_back(view.size(), 0.0);
  }
  return st;
}

void adam_step(RnnParams& params, const RnnParams& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
  ++state.step;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  auto pviews = params.views();
  auto gviews = grads.views();
  for (std::size_t ti = 0; ti < pviews.size(); ++ti) {
    auto& m = state.m[ti];
    auto& v = state.v[ti];
    auto pv = pviews[ti];
    auto gv = gviews[ti];
    for (std::size_t i = 0; i < pv.size(); ++i) {
      double g = gv[i];
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      pv[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

double evaluate_loss(const RnnModel& model, const Dataset& data,
                     std::span<const std::size_t> idx, const TrainConfig& cfg) {
  if (idx.empty())
    throw SeqnetError(SeqnetError::Kind::kEmptySplit,
                      "evaluate_loss: empty index set");
  ForwardCache cache;
  double total = 0.0;
  for (std::size_t i : idx) {
    const SequenceSample& s = data.samples[i];
    const auto& probs = forward(model, s, cache, cfg.mask_padding);
    total += weighted_nll(probs, s.label,
                          cfg.class_weights[static_cast<std::size_t>(s.label)]);
  }
  return total / static_cast<double>(idx.size());
}

TrainHistory train(RnnModel& model, const Dataset& data,
                   std::span<const std::size_t> train_idx,
                   std::span<const std::size_t> val_idx,
                   const TrainConfig& cfg) {
  if (train_idx.empty() || val_idx.empty())
    throw SeqnetError(SeqnetError::Kind::kEmptySplit,
                      "train: empty training or validation split");
  for (std::size_t i : train_idx)
    if (data.samples[i].width != model.input_width)
      throw SeqnetError(SeqnetError::Kind::kDimensionMismatch,
                        "train: sample width mismatch");

  TrainHistory history;
  RnnParams grads = RnnParams::shaped(model.input_width, model.hidden1,
                                      model.hidden2, model.classes);
  AdamState adam = AdamState::like(model.params);
  ForwardCache cache;

  RnnParams best_params = model.params;
  double best_val = std::numeric_limits<double>::infinity();
  std::uint32_t best_epoch = 0;
  std::uint32_t bad_epochs = 0;

  std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
  for (std::uint32_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    DetRng rng(mix_seed(cfg.seed, epoch));
    rng.shuffle(order);

    double train_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t end = std::min(order.size(), start + cfg.batch_size);
      double scale = 1.0 / static_cast<double>(end - start);
      grads.zero();
      for (std::size_t bi = start; bi < end; ++bi) {
        const SequenceSample& s = data.samples[order[bi]];
        double w = cfg.class_weights[static_cast<std::size_t>(s.label)];
        const auto& probs = forward(model, s, cache, cfg.mask_padding);
        train_total += weighted_nll(probs, s.label, w);
        backward(model, s, cache, s.label, w, scale, grads);
      }
      clip_global_norm(grads, cfg.clip_norm);
      adam_step(model.params, grads, adam, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    }
    double train_loss = train_total / static_cast<double>(order.size());
    double val_loss = evaluate_loss(model, data, val_idx, cfg);
    history.train_loss.push_back(train_loss);
    history.val_loss.push_back(val_loss);
    history.stopped_epoch = epoch;
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw SeqnetError(SeqnetError::Kind::kNumeric,
                        "train: loss is not finite at epoch " +
                            std::to_string(epoch));

    if (val_loss < best_val) {
      best_val = val_loss;
      best_epoch = epoch;
      best_params = model.params;
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs > cfg.patience) break;
    }
  }

  history.best_epoch = best_epoch;
  if (cfg.restore_best) model.params = best_params;
  return history;
}

int argmax_label(const std::vector<double>& probs) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(probs.size()); ++k)
    if (probs[static_cast<std::size_t>(k)] > probs[static_cast<std::size_t>(best)])
      best = k;
  return best;
}

std::vector<Prediction> predict(const RnnModel& model, const Dataset& data,
                                bool mask_padding) {
  std::vector<Prediction> out;
  out.reserve(data.samples.size());
  ForwardCache cache;
  for (const auto& s : data.samples) {
    const auto& probs = forward(model, s, cache, mask_padding);
    Prediction p;
    p.label = argmax_label(probs);
    for (std::size_t k = 0; k < kNumClasses && k < probs.size(); ++k)
      p.probs[k] = probs[k];
    out.push_back(p);
  }
  return out;
}

namespace {

constexpr char kModelMagic[8] = {'S', 'I', 'D', 'S', 'M', 'O', 'D', 'L'};
constexpr std::uint32_t kModelVersion = 1;

void put_u64le_vec(std::vector<std::uint8_t>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(std::uint8_t(v >> (8 * i)));
}

}  // namespace

void save_model(const RnnModel& model, const std::string& path) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kModelMagic, kModelMagic + 8);
  put_u32le(out, kModelVersion);
  put_u32le(out, model.input_width);
  put_u32le(out, model.hidden1);
  put_u32le(out, model.hidden2);
  put_u32le(out, model.classes);
  put_u64le_vec(out, model.encoder_hash.size());
  out.insert(out.end(), model.encoder_hash.begin(), model.encoder_hash.end());
  for (auto view : model.params.views())
    for (double x : view) put_u64le_vec(out, std::bit_cast<std::uint64_t>(x));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write failed on " + path);
}

RnnModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  std::size_t off = 0;
  auto need = [&](std::size_t n) {
    if (off + n > data.size())
      throw SeqnetError(SeqnetError::Kind::kBadCheckpoint,
                        "model checkpoint truncated: " + path);
  };
  need(8);
  if (!std::equal(data.begin(), data.begin() + 8, kModelMagic))
    throw SeqnetError(SeqnetError::Kind::kBadCheckpoint,
                      "not a model checkpoint: " + path);
  off = 8;
  auto read_u32 = [&]() {
    need(4);
    std::uint32_t value = get_u32le(data.data() + off);
    off += 4;
    return value;
  };
  auto read_u64 = [&]() {
    need(8);
    std::uint64_t value = 0;
    for (int i = 0; i < 8; ++i) value |= std::uint64_t(data[off + std::size_t(i)]) << (8 * i);
    off += 8;
    return value;
  };
  std::uint32_t version = read_u32();
  if (version != kModelVersion)
    throw SeqnetError(SeqnetError::Kind::kBadCheckpoint,
                      "unsupported checkpoint version " + std::to_string(version));
  RnnModel m;
  m.input_width = read_u32();
  m.hidden1 = read_u32();
  m.hidden2 = read_u32();
  m.classes = read_u32();
  std::uint64_t hash_len = read_u64();
  need(hash_len);
  m.encoder_hash.assign(data.begin() + static_cast<std::ptrdiff_t>(off),
                        data.begin() + static_cast<std::ptrdiff_t>(off + hash_len));
  off += hash_len;
  m.params = RnnParams::shaped(m.input_width, m.hidden1, m.hidden2, m.classes);
  for (auto view : m.params.views())
    for (double& x : view) x = std::bit_cast<double>(read_u64());
  if (off != data.size())
    throw SeqnetError(SeqnetError::Kind::kBadCheckpoint,
                      "trailing bytes in model checkpoint: " + path);
  return m;
}

}  // namespace someip_ids
