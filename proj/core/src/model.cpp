#include "mat/model.hpp"

#include <cmath>
#include <stdexcept>

namespace mat {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::kFull: return "mat";
    case Variant::kNoAttention: return "no-attention";
    case Variant::kSingleVector: return "single-vector";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "mat") return Variant::kFull;
  if (s == "no-attention") return Variant::kNoAttention;
  if (s == "single-vector") return Variant::kSingleVector;
  throw std::invalid_argument("unknown variant: " + s);
}

Model::Model(const ModelConfig& config)
    : config_(config),
      feature_embedding_("feature_embedding", config.hidden_dim, config.feature_dim),
      word_embedding_("word_embedding", config.hidden_dim, config.vocab_size),
      encoder_("encoder", config.hidden_dim, config.hidden_dim),
      decoder_("decoder", config.hidden_dim, config.hidden_dim),
      attention_("attention", config.hidden_dim, config.vocab_size) {
  if (config.hidden_dim == 0 || config.feature_dim == 0 || config.vocab_size == 0)
    throw std::invalid_argument("Model: all dimensions must be positive");
}

void Model::init_params(Rng& rng, double bound) {
  for (std::size_t i = 0; i < feature_embedding_.value.size(); ++i)
    feature_embedding_.value[i] = rng.uniform(-bound, bound);
  for (std::size_t i = 0; i < word_embedding_.value.size(); ++i)
    word_embedding_.value[i] = rng.uniform(-bound, bound);
  encoder_.init_uniform(bound, rng);
  decoder_.init_uniform(bound, rng);
  attention_.init_uniform(bound, rng);
  touch();
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out{&feature_embedding_, &word_embedding_};
  for (Parameter* p : encoder_.parameters()) out.push_back(p);
  for (Parameter* p : decoder_.parameters()) out.push_back(p);
  for (Parameter* p : attention_.parameters()) out.push_back(p);
  return out;
}

void Model::reset_grads() {
  for (Parameter* p : parameters()) p->reset_grad();
}

Vector Model::embed_feature(const Vector& feature) const {
  if (feature.size() != config_.feature_dim)
    throw std::invalid_argument("encode: feature dim " + std::to_string(feature.size()) +
                                " does not match model feature dim " +
                                std::to_string(config_.feature_dim));
  Vector x(config_.hidden_dim, 1);
  accumulate_matvec(x, feature_embedding_.value, feature);
  return x;
}

Vector Model::embed_token(std::size_t token) const {
  if (token >= config_.vocab_size)
    throw std::invalid_argument("decode: token index " + std::to_string(token) +
                                " out of vocabulary range " +
                                std::to_string(config_.vocab_size));
  Vector x(config_.hidden_dim, 1);
  for (std::size_t k = 0; k < config_.hidden_dim; ++k)
    x[k] = word_embedding_.value(k, token);
  return x;
}

EncodeResult Model::encode(const ObjectSequence& objects, std::size_t true_count,
                           const DropoutSpec& dropout) const {
  if (objects.empty() || true_count == 0)
    throw std::invalid_argument("encode: empty object sequence");
  if (true_count > objects.size())
    throw std::invalid_argument("encode: true_count exceeds sequence length");

  EncodeResult result;
  // The single-vector variant consumes only the global feature, which sits
  // at the end of the real (unpadded) prefix.
  if (config_.variant == Variant::kSingleVector) {
    result.input_features.push_back(objects.features[true_count - 1]);
  } else {
    for (std::size_t i = 0; i < true_count; ++i)
      result.input_features.push_back(objects.features[i]);
  }

  const std::size_t steps = result.input_features.size();
  result.states.reserve(steps);
  result.step_caches.resize(steps);
  LstmState state = zero_state(config_.hidden_dim);
  for (std::size_t t = 0; t < steps; ++t) {
    Vector x = embed_feature(result.input_features[t]);
    if (dropout.active()) {
      Vector mask = dropout_mask(x.size(), dropout.rate, *dropout.rng);
      mul_in_place(x, mask);
      result.input_masks.push_back(std::move(mask));
    }
    state = lstm_step(encoder_, x, state, config_.modulation, &result.step_caches[t]);
    result.states.push_back(state.h);
  }
  result.final_state = std::move(state);
  return result;
}

ForwardResult Model::forward(const BatchExample& example, const DropoutSpec& dropout) const {
  if (example.token_count == 0)
    throw std::invalid_argument("forward: example has no scored tokens");
  if (example.tokens.size() < example.token_count + 1)
    throw std::invalid_argument("forward: token list shorter than token_count + 1");

  ForwardResult result;
  result.model_version = version_;
  result.example = example;
  result.enc = encode(example.objects, example.object_count, dropout);

  const bool attentive = config_.variant == Variant::kFull;
  LstmState state = result.enc.final_state;
  result.dec_steps.resize(example.token_count);
  result.distributions.reserve(example.token_count);

  double loss = 0.0;
  for (std::size_t t = 0; t < example.token_count; ++t) {
    DecodeStepCache& step = result.dec_steps[t];
    step.input_token = example.tokens[t];
    step.target_token = example.tokens[t + 1];

    if (attentive)
      step.trace = attend(attention_, result.enc.states, state.h);

    Vector x = embed_token(step.input_token);
    if (dropout.active()) {
      step.input_mask = dropout_mask(x.size(), dropout.rate, *dropout.rng);
      mul_in_place(x, step.input_mask);
    }
    state = lstm_step(decoder_, x, state, config_.modulation, &step.lstm);

    Vector probs;
    if (attentive) {
      Vector mask;
      const Vector* mask_ptr = nullptr;
      if (dropout.active()) {
        mask = dropout_mask(2 * config_.hidden_dim, dropout.rate, *dropout.rng);
        mask_ptr = &mask;
      }
      probs = output_distribution(attention_, state.h, step.trace, mask_ptr, &step.out);
    } else {
      Vector mask;
      const Vector* mask_ptr = nullptr;
      if (dropout.active()) {
        mask = dropout_mask(config_.hidden_dim, dropout.rate, *dropout.rng);
        mask_ptr = &mask;
      }
      probs = output_distribution_direct(attention_, state.h, mask_ptr, &step.out);
    }

    loss -= std::log(probs[step.target_token]);
    result.distributions.push_back(std::move(probs));
  }

  result.loss = loss;
  result.scored_steps = example.token_count;
  return result;
}

void Model::backward(const ForwardResult& result) {
  if (result.model_version != version_)
    throw std::invalid_argument("backward: stale forward cache (parameters changed)");
  if (result.dec_steps.empty())
    throw std::invalid_argument("backward: empty forward cache");

  const std::size_t hidden = config_.hidden_dim;
  const bool attentive = config_.variant == Variant::kFull;
  const std::size_t enc_steps = result.enc.step_caches.size();

  std::vector<Vector> d_enc_states(enc_steps, Vector(hidden, 1));
  Vector dh_next(hidden, 1);
  Vector dc_next(hidden, 1);

  for (std::size_t t = result.dec_steps.size(); t-- > 0;) {
    const DecodeStepCache& step = result.dec_steps[t];

    // nll through softmax: d_logits = probs - onehot(target)
    Vector d_logits = step.out.probs;
    d_logits[step.target_token] -= 1.0;

    OutputGrads out_grads = output_distribution_backward(attention_, step.out, d_logits);
    Vector dh = std::move(dh_next);
    add_in_place(dh, out_grads.d_dec_state);

    Vector dh_prev_attn;
    if (attentive) {
      AttendGrads att = attend_backward(attention_, result.enc.states,
                                        step.lstm.h_prev, step.trace,
                                        out_grads.d_context);
      for (std::size_t i = 0; i < enc_steps; ++i)
        add_in_place(d_enc_states[i], att.d_enc_states[i]);
      dh_prev_attn = std::move(att.d_prev);
    }

    LstmStepGrads grads = lstm_step_backward(decoder_, step.lstm, config_.modulation,
                                             dh, dc_next);

    // word embedding column for the input token
    Vector dx = std::move(grads.dx);
    if (!step.input_mask.empty()) mul_in_place(dx, step.input_mask);
    for (std::size_t k = 0; k < hidden; ++k)
      word_embedding_.grad(k, step.input_token) += dx[k];

    dh_next = std::move(grads.dh_prev);
    if (!dh_prev_attn.empty()) add_in_place(dh_next, dh_prev_attn);
    dc_next = std::move(grads.dc_prev);
  }

  // decoder initial state is the encoder final state
  for (std::size_t t = enc_steps; t-- > 0;) {
    add_in_place(dh_next, d_enc_states[t]);
    LstmStepGrads grads = lstm_step_backward(encoder_, result.enc.step_caches[t],
                                             config_.modulation, dh_next, dc_next);
    Vector dx = std::move(grads.dx);
    if (!result.enc.input_masks.empty()) mul_in_place(dx, result.enc.input_masks[t]);
    accumulate_outer(feature_embedding_.grad, dx, result.enc.input_features[t]);
    dh_next = std::move(grads.dh_prev);
    dc_next = std::move(grads.dc_prev);
  }
}

Model::StepResult Model::decode_step(const EncodeResult& enc, const LstmState& prev,
                                     std::size_t input_token) const {
  StepResult result;
  const bool attentive = config_.variant == Variant::kFull;
  if (attentive) result.trace = attend(attention_, enc.states, prev.h);

  Vector x = embed_token(input_token);
  result.state = lstm_step(decoder_, x, prev, config_.modulation, nullptr);
  result.probs = attentive
                     ? output_distribution(attention_, result.state.h, result.trace)
                     : output_distribution_direct(attention_, result.state.h);
  return result;
}

}  // namespace mat
