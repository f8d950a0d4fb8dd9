#include "mat/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace mat {

AttentionParams::AttentionParams(const std::string& prefix, std::size_t hidden_dim,
                                 std::size_t vocab_size)
    : score_vec(prefix + ".score_vec", hidden_dim, 1),
      score_proj_enc(prefix + ".score_proj_enc", hidden_dim, hidden_dim),
      score_proj_dec(prefix + ".score_proj_dec", hidden_dim, hidden_dim),
      combine(prefix + ".combine", hidden_dim, 2 * hidden_dim),
      combine_bias(prefix + ".combine_bias", hidden_dim, 1),
      vocab_proj(prefix + ".vocab_proj", vocab_size, hidden_dim),
      vocab_bias(prefix + ".vocab_bias", vocab_size, 1) {}

std::vector<Parameter*> AttentionParams::parameters() {
  return {&score_vec, &score_proj_enc, &score_proj_dec,
          &combine,   &combine_bias,   &vocab_proj,     &vocab_bias};
}

void AttentionParams::init_uniform(double bound, Rng& rng) {
  for (Parameter* p : parameters()) {
    if (p == &combine_bias || p == &vocab_bias) continue;
    for (std::size_t i = 0; i < p->value.size(); ++i)
      p->value[i] = rng.uniform(-bound, bound);
  }
}

AttentionTrace attend(const AttentionParams& params, std::span<const Vector> enc_states,
                      const Vector& d_prev) {
  if (enc_states.empty())
    throw std::invalid_argument("attend: empty encoder state sequence");
  const std::size_t hidden = params.hidden_dim();
  if (d_prev.size() != hidden)
    throw std::invalid_argument("attend: decoder state length mismatch");

  const std::size_t n = enc_states.size();
  AttentionTrace trace;
  trace.scores = Vector(n, 1);
  trace.tanh_units.reserve(n);

  Vector dec_part(hidden, 1);
  accumulate_matvec(dec_part, params.score_proj_dec.value, d_prev);

  for (std::size_t i = 0; i < n; ++i) {
    if (enc_states[i].size() != hidden)
      throw std::invalid_argument("attend: encoder state length mismatch");
    Vector unit = dec_part;
    accumulate_matvec(unit, params.score_proj_enc.value, enc_states[i]);
    for (std::size_t k = 0; k < hidden; ++k) unit[k] = std::tanh(unit[k]);
    trace.scores[i] = dot(params.score_vec.value, unit);
    trace.tanh_units.push_back(std::move(unit));
  }

  trace.weights = softmax(trace.scores);
  trace.context = Vector(hidden, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = trace.weights[i];
    const double* hd = enc_states[i].data();
    double* cd = trace.context.data();
    for (std::size_t k = 0; k < hidden; ++k) cd[k] += a * hd[k];
  }
  return trace;
}

Vector output_distribution(const AttentionParams& params, const Vector& d_t,
                           const AttentionTrace& trace, const Vector* dropout_mask,
                           OutputCache* cache) {
  const std::size_t hidden = params.hidden_dim();
  if (d_t.size() != hidden)
    throw std::invalid_argument("output_distribution: decoder state length mismatch");
  if (trace.context.size() != hidden)
    throw std::invalid_argument("output_distribution: context length mismatch");

  Vector merged = concat_rows(d_t, trace.context);
  if (dropout_mask) {
    if (dropout_mask->size() != merged.size())
      throw std::invalid_argument("output_distribution: dropout mask length mismatch");
    mul_in_place(merged, *dropout_mask);
  }

  Vector hidden_vec = params.combine_bias.value;
  accumulate_matvec(hidden_vec, params.combine.value, merged);

  Vector logits = params.vocab_bias.value;
  accumulate_matvec(logits, params.vocab_proj.value, hidden_vec);
  Vector probs = softmax(logits);

  if (cache) {
    cache->merged = std::move(merged);
    cache->dropout_mask = dropout_mask ? *dropout_mask : Vector();
    cache->hidden = std::move(hidden_vec);
    cache->probs = probs;
    cache->attention_path = true;
    cache->filled = true;
  }
  return probs;
}

Vector output_distribution_direct(const AttentionParams& params, const Vector& d_t,
                                  const Vector* dropout_mask, OutputCache* cache) {
  if (d_t.size() != params.hidden_dim())
    throw std::invalid_argument("output_distribution_direct: decoder state length mismatch");

  Vector merged = d_t;
  if (dropout_mask) {
    if (dropout_mask->size() != merged.size())
      throw std::invalid_argument("output_distribution_direct: dropout mask length mismatch");
    mul_in_place(merged, *dropout_mask);
  }

  Vector logits = params.vocab_bias.value;
  accumulate_matvec(logits, params.vocab_proj.value, merged);
  Vector probs = softmax(logits);

  if (cache) {
    cache->merged = std::move(merged);
    cache->dropout_mask = dropout_mask ? *dropout_mask : Vector();
    cache->hidden = Vector();
    cache->probs = probs;
    cache->attention_path = false;
    cache->filled = true;
  }
  return probs;
}

OutputGrads output_distribution_backward(AttentionParams& params, const OutputCache& cache,
                                         const Vector& d_logits) {
  if (!cache.filled)
    throw std::invalid_argument("output_distribution_backward: missing forward cache");
  if (d_logits.size() != params.vocab_size())
    throw std::invalid_argument("output_distribution_backward: logit cotangent mismatch");
  const std::size_t hidden = params.hidden_dim();

  OutputGrads grads;
  if (cache.attention_path) {
    accumulate_outer(params.vocab_proj.grad, d_logits, cache.hidden);
    add_in_place(params.vocab_bias.grad, d_logits);
    Vector d_hidden(hidden, 1);
    accumulate_matvec_transpose(d_hidden, params.vocab_proj.value, d_logits);

    accumulate_outer(params.combine.grad, d_hidden, cache.merged);
    add_in_place(params.combine_bias.grad, d_hidden);
    Vector d_merged(2 * hidden, 1);
    accumulate_matvec_transpose(d_merged, params.combine.value, d_hidden);
    if (!cache.dropout_mask.empty()) mul_in_place(d_merged, cache.dropout_mask);

    grads.d_dec_state = Vector(hidden, 1);
    grads.d_context = Vector(hidden, 1);
    for (std::size_t k = 0; k < hidden; ++k) {
      grads.d_dec_state[k] = d_merged[k];
      grads.d_context[k] = d_merged[hidden + k];
    }
  } else {
    accumulate_outer(params.vocab_proj.grad, d_logits, cache.merged);
    add_in_place(params.vocab_bias.grad, d_logits);
    Vector d_merged(hidden, 1);
    accumulate_matvec_transpose(d_merged, params.vocab_proj.value, d_logits);
    if (!cache.dropout_mask.empty()) mul_in_place(d_merged, cache.dropout_mask);
    grads.d_dec_state = std::move(d_merged);
  }
  return grads;
}

AttendGrads attend_backward(AttentionParams& params, std::span<const Vector> enc_states,
                            const Vector& d_prev, const AttentionTrace& trace,
                            const Vector& d_context) {
  const std::size_t n = enc_states.size();
  if (trace.tanh_units.size() != n || trace.weights.size() != n)
    throw std::invalid_argument("attend_backward: trace does not match encoder states");
  const std::size_t hidden = params.hidden_dim();
  if (d_context.size() != hidden)
    throw std::invalid_argument("attend_backward: context cotangent mismatch");

  AttendGrads grads;
  grads.d_enc_states.assign(n, Vector(hidden, 1));
  grads.d_prev = Vector(hidden, 1);

  // context = sum_i a_i h_i
  Vector d_weights(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    d_weights[i] = dot(d_context, enc_states[i]);
    const double a = trace.weights[i];
    double* gd = grads.d_enc_states[i].data();
    const double* cd = d_context.data();
    for (std::size_t k = 0; k < hidden; ++k) gd[k] += a * cd[k];
  }

  // softmax jacobian: d_score_i = a_i * (d_weight_i - sum_j a_j d_weight_j)
  double weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) weighted += trace.weights[i] * d_weights[i];
  Vector d_scores(n, 1);
  for (std::size_t i = 0; i < n; ++i)
    d_scores[i] = trace.weights[i] * (d_weights[i] - weighted);

  for (std::size_t i = 0; i < n; ++i) {
    const Vector& unit = trace.tanh_units[i];
    const double ds = d_scores[i];
    // score_i = score_vec . unit_i
    Vector d_unit(hidden, 1);
    for (std::size_t k = 0; k < hidden; ++k) {
      params.score_vec.grad[k] += ds * unit[k];
      d_unit[k] = ds * params.score_vec.value[k] * (1.0 - unit[k] * unit[k]);
    }
    accumulate_outer(params.score_proj_enc.grad, d_unit, enc_states[i]);
    accumulate_matvec_transpose(grads.d_enc_states[i], params.score_proj_enc.value, d_unit);
    accumulate_outer(params.score_proj_dec.grad, d_unit, d_prev);
    accumulate_matvec_transpose(grads.d_prev, params.score_proj_dec.value, d_unit);
  }
  return grads;
}

}  // namespace mat
