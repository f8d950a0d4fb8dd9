#pragma once

#include <span>
#include <string>
#include <vector>

#include "mat/matrix.hpp"
#include "mat/rng.hpp"

namespace mat {

/// Parameters of the sequential attention layer plus the output projection
/// that turns the merged state into vocabulary logits.
struct AttentionParams {
  Parameter score_vec;       // hidden x 1, dots the scoring unit down to a scalar
  Parameter score_proj_enc;  // hidden x hidden, applied to each encoder state
  Parameter score_proj_dec;  // hidden x hidden, applied to the previous decoder state
  Parameter combine;         // hidden x 2*hidden, merges decoder state and context
  Parameter combine_bias;    // hidden x 1
  Parameter vocab_proj;      // vocab x hidden
  Parameter vocab_bias;      // vocab x 1

  AttentionParams() = default;
  AttentionParams(const std::string& prefix, std::size_t hidden_dim, std::size_t vocab_size);

  std::size_t hidden_dim() const { return score_vec.value.rows(); }
  std::size_t vocab_size() const { return vocab_bias.value.rows(); }

  std::vector<Parameter*> parameters();
  void init_uniform(double bound, Rng& rng);
};

/// Per-step attention readout: raw scores, their softmax, and the context
/// vector (convex combination of encoder states). tanh_units caches the
/// scoring nonlinearity outputs for the backward pass.
struct AttentionTrace {
  Vector scores;
  Vector weights;
  Vector context;
  std::vector<Vector> tanh_units;
};

/// Scores every encoder hidden state against the previous decoder state:
///   score_i = score_vec . tanh(score_proj_enc * h_i + score_proj_dec * d_prev)
/// weights = softmax(scores), context = sum_i weights_i * h_i.
AttentionTrace attend(const AttentionParams& params, std::span<const Vector> enc_states,
                      const Vector& d_prev);

/// Cached activations of the output projection for one decode step.
struct OutputCache {
  Vector merged;       // concat(d_t, context) after dropout, or d_t when no attention
  Vector dropout_mask; // empty when dropout inactive
  Vector hidden;       // combine * merged + combine_bias (attention path only)
  Vector probs;
  bool attention_path = true;
  bool filled = false;
};

/// Full output path: merged = concat(d_t, context), hidden = combine * merged
/// + bias, probs = softmax(vocab_proj * hidden + bias). A non-null
/// dropout_mask (length 2*hidden) is applied to merged before the projection.
Vector output_distribution(const AttentionParams& params, const Vector& d_t,
                           const AttentionTrace& trace,
                           const Vector* dropout_mask = nullptr,
                           OutputCache* cache = nullptr);

/// Attention-free output path: probs = softmax(vocab_proj * d_t + bias),
/// with an optional dropout mask of length hidden on d_t.
Vector output_distribution_direct(const AttentionParams& params, const Vector& d_t,
                                  const Vector* dropout_mask = nullptr,
                                  OutputCache* cache = nullptr);

struct OutputGrads {
  Vector d_dec_state;
  Vector d_context;  // empty on the direct path
};

/// Backward of output_distribution / output_distribution_direct given the
/// cotangent of the pre-softmax logits. Accumulates into params.
OutputGrads output_distribution_backward(AttentionParams& params, const OutputCache& cache,
                                         const Vector& d_logits);

struct AttendGrads {
  std::vector<Vector> d_enc_states;
  Vector d_prev;
};

/// Backward of attend given the cotangent of the context vector.
/// Accumulates into params.
AttendGrads attend_backward(AttentionParams& params, std::span<const Vector> enc_states,
                            const Vector& d_prev, const AttentionTrace& trace,
                            const Vector& d_context);

}  // namespace mat
