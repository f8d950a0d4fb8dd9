#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mat/data.hpp"
#include "mat/model.hpp"
#include "mat/rng.hpp"
#include "mat/vocabulary.hpp"

namespace mat {

struct TrainConfig {
  std::size_t batch_size = 64;
  double lr_initial = 0.1;
  std::size_t plateau_patience = 2;    // epochs without train-loss improvement before halving
  double plateau_min_rel_improvement = 1e-4;
  double dropout_rate = 0.5;           // fraction dropped; 0 disables
  std::size_t early_stop_patience = 5; // epochs without val-loss improvement before stopping
  std::size_t max_epochs = 30;
  std::uint64_t seed = 1;
  double grad_clip_norm = 5.0;         // global-norm clip; 0 disables
  std::size_t threads = 1;             // batch-internal worker count
  std::vector<Bucket> buckets = default_buckets();
  ModulationMode modulation = ModulationMode::kSigmoid;
  Variant variant = Variant::kFull;
  std::size_t hidden_dim = 512;
  std::size_t feature_dim = 16;
};

void validate(const TrainConfig& config);

/// theta -= lr * grad for every parameter, then grads are zeroed.
void sgd_step(const std::vector<Parameter*>& params, double lr);

/// Scales grads by factor, then clips them jointly to the given global norm
/// (0 disables clipping). Returns the pre-clip global norm.
double scale_and_clip_grads(const std::vector<Parameter*>& params, double factor,
                            double max_norm);

/// Inverted dropout on a vector: entries are zeroed with probability
/// drop_rate, survivors scaled by 1/(1 - drop_rate). Identity at rate 0.
Vector apply_dropout(const Vector& v, double drop_rate, Rng& rng);

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean nll per scored token
  double val_loss = 0.0;
  double lr = 0.0;
};

std::string history_to_csv(const std::vector<EpochStats>& history);
void write_history_csv(const std::string& path, const std::vector<EpochStats>& history);

/// Serializable training state: parameter tensors, config echo, vocabulary,
/// epoch, and rng state. Loading reproduces bitwise-identical forwards.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  ModelConfig model_config;
  TrainConfig train_config;
  std::vector<std::string> vocab_tokens;
  std::size_t vocab_min_count = 1;
  std::size_t epoch = 0;
  std::string rng_state;
  // name/shape/values triplets in Model::parameters() order
  struct Tensor {
    std::string name;
    std::size_t rows = 0, cols = 0;
    std::vector<double> values;
  };
  std::vector<Tensor> tensors;

  static Checkpoint capture(Model& model, const Vocabulary& vocab,
                            const TrainConfig& config, std::size_t epoch,
                            const std::string& rng_state);
  void restore_into(Model& model) const;
  Model build_model() const;
  Vocabulary build_vocabulary() const;

  /// Atomic write (temp file then rename).
  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

struct TrainResult {
  Checkpoint best;            // checkpoint at the best validation loss
  std::vector<EpochStats> history;
  double best_val_loss = 0.0;
  std::size_t best_epoch = 0;
};

/// Thrown when the loss goes non-finite.
struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// SGD over bucketed, shuffled batches. The learning rate halves after
/// plateau_patience epochs without relative train-loss improvement above
/// plateau_min_rel_improvement; training stops early after
/// early_stop_patience epochs without validation improvement.
TrainResult train(const TrainConfig& config, Model& model, const Vocabulary& vocab,
                  const std::vector<BatchExample>& train_set,
                  const std::vector<BatchExample>& val_set,
                  const EpochCallback& on_epoch = nullptr);

/// Mean per-token validation loss (dropout off). Deterministic regardless of
/// thread count.
double evaluate_loss(const Model& model, const std::vector<BatchExample>& examples,
                     std::size_t threads = 1);

}  // namespace mat
