#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mat/attention.hpp"
#include "mat/lstm.hpp"
#include "mat/matrix.hpp"
#include "mat/rng.hpp"

namespace mat {

/// Which network to run. kFull is the attentive translator; kNoAttention
/// drops the attention layer and projects the decoder state directly;
/// kSingleVector additionally collapses the source sequence to the single
/// global feature.
enum class Variant { kFull, kNoAttention, kSingleVector };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Object feature vectors for one image, ordered by descending detection
/// score, with the final element holding the global image feature.
struct ObjectSequence {
  std::vector<Vector> features;

  std::size_t size() const { return features.size(); }
  bool empty() const { return features.empty(); }
};

/// One training example padded to its bucket shape. tokens[0] is START;
/// tokens[1..token_count] are the scored targets (caption words then END);
/// the tail is PAD. objects carries object_count real feature vectors
/// followed by zero padding.
struct BatchExample {
  ObjectSequence objects;
  std::vector<std::size_t> tokens;
  std::size_t object_count = 0;
  std::size_t token_count = 0;
};

struct ModelConfig {
  std::size_t hidden_dim = 512;
  std::size_t feature_dim = 16;
  std::size_t vocab_size = 0;
  Variant variant = Variant::kFull;
  ModulationMode modulation = ModulationMode::kSigmoid;
};

struct EncodeResult {
  std::vector<Vector> states;  // real (unpadded) encoder hidden states
  LstmState final_state;       // state after the last real step
  std::vector<LstmStepCache> step_caches;
  std::vector<Vector> input_masks;    // per-step dropout masks, empty when off
  std::vector<Vector> input_features; // the features actually consumed
};

struct DecodeStepCache {
  std::size_t input_token = 0;
  std::size_t target_token = 0;
  Vector input_mask;  // dropout mask on the embedded input, empty when off
  LstmStepCache lstm;
  AttentionTrace trace;  // unused on attention-free variants
  OutputCache out;
};

/// Everything backward() needs: per-step caches plus the consumed example.
struct ForwardResult {
  double loss = 0.0;  // sum of per-step negative log likelihoods
  std::size_t scored_steps = 0;
  std::vector<Vector> distributions;
  EncodeResult enc;
  std::vector<DecodeStepCache> dec_steps;
  BatchExample example;
  std::uint64_t model_version = 0;
};

/// Dropout applied during a training forward pass. rate 0 or a null rng
/// disables it.
struct DropoutSpec {
  double rate = 0.0;
  Rng* rng = nullptr;

  bool active() const { return rate > 0.0 && rng != nullptr; }
};

/// The surface-to-caption network: feature and word embeddings, encoder and
/// decoder LSTMs, attention layer, and output projection.
class Model {
 public:
  Model() = default;
  explicit Model(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  /// Uniform(-bound, bound) weights, zero biases. 0.08 is the training
  /// default; gradient checks use a larger bound so no gradient sits in the
  /// symmetric near-zero regime.
  void init_params(Rng& rng, double bound = 0.08);

  /// Stable declaration order; used by SGD, checkpoints, and grad checks.
  std::vector<Parameter*> parameters();
  void reset_grads();

  /// Bumped whenever parameter values change; forward caches record it so
  /// backward can reject stale caches.
  std::uint64_t version() const { return version_; }
  void touch() { ++version_; }

  /// Runs the encoder over the first true_count features (embedding each
  /// with the feature projection). Padded positions are never computed, so
  /// padding cannot perturb loss, gradients, or dropout streams.
  EncodeResult encode(const ObjectSequence& objects, std::size_t true_count,
                      const DropoutSpec& dropout = {}) const;

  /// Teacher-forced forward pass over one padded example: encodes, decodes
  /// token_count steps, and sums the negative log likelihood of the targets.
  ForwardResult forward(const BatchExample& example, const DropoutSpec& dropout = {}) const;

  /// Exact gradients of forward(); accumulates into parameters.
  void backward(const ForwardResult& result);

  /// One inference decode step: attention from prev.h, an LSTM step on the
  /// embedded input token, and the output distribution.
  struct StepResult {
    LstmState state;
    Vector probs;
    AttentionTrace trace;
  };
  StepResult decode_step(const EncodeResult& enc, const LstmState& prev,
                         std::size_t input_token) const;

  Parameter& feature_embedding() { return feature_embedding_; }
  Parameter& word_embedding() { return word_embedding_; }
  LstmParams& encoder() { return encoder_; }
  LstmParams& decoder() { return decoder_; }
  AttentionParams& attention() { return attention_; }
  const AttentionParams& attention() const { return attention_; }

 private:
  Vector embed_feature(const Vector& feature) const;
  Vector embed_token(std::size_t token) const;

  ModelConfig config_;
  Parameter feature_embedding_;  // hidden x feature_dim
  Parameter word_embedding_;     // hidden x vocab (one-hot column lookup)
  LstmParams encoder_;
  LstmParams decoder_;
  AttentionParams attention_;
  std::uint64_t version_ = 0;
};

}  // namespace mat
