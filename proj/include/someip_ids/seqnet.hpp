#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "someip_ids/pipeline.hpp"

namespace someip_ids {

struct SeqnetError : std::runtime_error {
  enum class Kind {
    kDimensionMismatch,
    kEmptySplit,
    kNumeric,
    kBadCheckpoint,
    kEncoderHashMismatch,
  };
  Kind kind;
  SeqnetError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;  // row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  bool operator==(const Matrix&) const = default;
};

// Two stacked recurrent tanh layers and a softmax head read out at the final
// step: a_t = W h_{t-1} + U x_t + b, h_t = tanh(a_t), o = V h2_T + c.
struct RnnParams {
  Matrix u1, w1, u2, w2, v;
  std::vector<double> b1, b2, c;

  static RnnParams shaped(std::uint32_t input_width, std::uint32_t hidden1,
                          std::uint32_t hidden2, std::uint32_t classes);
  void zero();
  // Fixed tensor order: u1, w1, b1, u2, w2, b2, v, c.
  std::vector<std::span<double>> views();
  std::vector<std::span<const double>> views() const;
  static const std::array<const char*, 8> kTensorNames;
  bool operator==(const RnnParams&) const = default;
};

struct RnnModel {
  std::uint32_t input_width = 0;
  std::uint32_t hidden1 = 50;
  std::uint32_t hidden2 = 10;
  std::uint32_t classes = kNumClasses;
  RnnParams params;
  std::string encoder_hash;  // hex digest of the encoder this model expects

  // Weights uniform in +/- sqrt(1/fan_in), biases zero.
  static RnnModel init(std::uint32_t input_width, std::uint64_t seed,
                       std::string encoder_hash, std::uint32_t hidden1 = 50,
                       std::uint32_t hidden2 = 10,
                       std::uint32_t classes = kNumClasses);
};

struct ForwardCache {
  std::vector<double> h1, h2;  // (steps+1) rows each, row 0 is the zero state
  std::vector<double> logits, probs;
  std::uint32_t steps = 0;
};

// Runs the recurrence over all max_len steps (padding rows are zero input);
// with mask_padding it stops at true_len instead. Returns cache.probs.
const std::vector<double>& forward(const RnnModel& model,
                                   const SequenceSample& sample,
                                   ForwardCache& cache,
                                   bool mask_padding = false);

double weighted_nll(const std::vector<double>& probs, int label, double weight);

// Adds scale * d(weight * nll)/d(theta) into grads. The cache must come from
// forward() on the same sample.
void backward(const RnnModel& model, const SequenceSample& sample,
              const ForwardCache& cache, int label, double weight, double scale,
              RnnParams& grads);

double global_norm(const RnnParams& grads);
// Rescales grads in place so the global norm is at most clip; no-op if
// clip <= 0 or the norm is within bounds.
void clip_global_norm(RnnParams& grads, double clip);

struct AdamState {
  std::vector<std::vector<double>> m, v;
  std::uint64_t step = 0;
  static AdamState like(const RnnParams& params);
};

void adam_step(RnnParams& params, const RnnParams& grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

struct TrainConfig {
  double lr = 0.001;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::uint32_t batch_size = 100;
  std::uint32_t max_epochs = 50;
  std::uint32_t patience = 5;
  bool restore_best = true;
  double clip_norm = 5.0;  // 0 disables clipping
  bool mask_padding = false;
  std::uint64_t seed = 1;
  std::array<double, kNumClasses> class_weights{1, 1, 1, 1, 1};
};

struct TrainHistory {
  std::vector<double> train_loss, val_loss;  // one entry per epoch run
  std::uint32_t best_epoch = 0;              // 1-based
  std::uint32_t stopped_epoch = 0;
};

// Mini-batch BPTT with Adam and early stopping on validation loss. Batch loss
// is the mean weighted cross entropy over the batch; shuffling, batching and
// updates are deterministic in cfg.seed. Throws kEmptySplit on an empty side
// and kNumeric if the loss stops being finite.
TrainHistory train(RnnModel& model, const Dataset& data,
                   std::span<const std::size_t> train_idx,
                   std::span<const std::size_t> val_idx,
                   const TrainConfig& cfg);

// Mean weighted loss of a sample subset under the current parameters.
double evaluate_loss(const RnnModel& model, const Dataset& data,
                     std::span<const std::size_t> idx, const TrainConfig& cfg);

// Ties resolve to the lowest class index.
int argmax_label(const std::vector<double>& probs);

struct Prediction {
  int label = 0;
  std::array<double, kNumClasses> probs{};
};

std::vector<Prediction> predict(const RnnModel& model, const Dataset& data,
                                bool mask_padding = false);

void save_model(const RnnModel& model, const std::string& path);
RnnModel load_model(const std::string& path);  // kBadCheckpoint

}  // namespace someip_ids
