#include "mat/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace mat {

using nlohmann::json;

void validate(const TrainConfig& config) {
  if (config.batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be positive");
  if (config.lr_initial <= 0.0 || config.lr_initial > 1.0)
    throw std::invalid_argument("TrainConfig: lr_initial must be in (0, 1]");
  if (config.dropout_rate < 0.0 || config.dropout_rate >= 1.0)
    throw std::invalid_argument("TrainConfig: dropout_rate must be in [0, 1)");
  if (config.plateau_patience < 1) throw std::invalid_argument("TrainConfig: plateau_patience must be >= 1");
  if (config.early_stop_patience < 1)
    throw std::invalid_argument("TrainConfig: early_stop_patience must be >= 1");
  if (config.max_epochs == 0) throw std::invalid_argument("TrainConfig: max_epochs must be positive");
  if (config.threads == 0) throw std::invalid_argument("TrainConfig: threads must be positive");
  if (config.grad_clip_norm < 0.0)
    throw std::invalid_argument("TrainConfig: grad_clip_norm must be >= 0");
  validate_buckets(config.buckets);
}

void sgd_step(const std::vector<Parameter*>& params, double lr) {
  for (Parameter* p : params) {
    double* v = p->value.data();
    double* g = p->grad.data();
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      v[i] -= lr * g[i];
      g[i] = 0.0;
    }
  }
}

double scale_and_clip_grads(const std::vector<Parameter*>& params, double factor,
                            double max_norm) {
  double norm2 = 0.0;
  for (Parameter* p : params) {
    scale_in_place(p->grad, factor);
    norm2 += squared_norm(p->grad);
  }
  const double norm = std::sqrt(norm2);
  if (max_norm > 0.0 && norm > max_norm) {
    const double shrink = max_norm / norm;
    for (Parameter* p : params) scale_in_place(p->grad, shrink);
  }
  return norm;
}

Vector apply_dropout(const Vector& v, double drop_rate, Rng& rng) {
  if (drop_rate == 0.0) return v;
  Vector out = v;
  Vector mask = dropout_mask(v.size(), drop_rate, rng);
  mul_in_place(out, mask);
  return out;
}

namespace {

// shortest round-trip representation
std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string history_to_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,train_loss,val_loss,lr\n";
  for (const EpochStats& e : history) {
    out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," +
           format_double(e.val_loss) + "," + format_double(e.lr) + "\n";
  }
  return out;
}

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write history file: " + path);
  out << history_to_csv(history);
}

Checkpoint Checkpoint::capture(Model& model, const Vocabulary& vocab,
                               const TrainConfig& config, std::size_t epoch,
                               const std::string& rng_state) {
  Checkpoint ckpt;
  ckpt.model_config = model.config();
  ckpt.train_config = config;
  ckpt.vocab_tokens = vocab.tokens();
  ckpt.vocab_min_count = vocab.min_count();
  ckpt.epoch = epoch;
  ckpt.rng_state = rng_state;
  for (Parameter* p : model.parameters()) {
    Tensor t;
    t.name = p->name;
    t.rows = p->value.rows();
    t.cols = p->value.cols();
    t.values.assign(p->value.data(), p->value.data() + p->value.size());
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

void Checkpoint::restore_into(Model& model) const {
  std::vector<Parameter*> params = model.parameters();
  if (params.size() != tensors.size())
    throw std::runtime_error("checkpoint: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& t = tensors[i];
    Parameter* p = params[i];
    if (p->name != t.name || p->value.rows() != t.rows || p->value.cols() != t.cols)
      throw std::runtime_error("checkpoint: tensor " + t.name + " does not match model");
    std::copy(t.values.begin(), t.values.end(), p->value.data());
  }
  model.touch();
}

Model Checkpoint::build_model() const {
  Model model(model_config);
  restore_into(model);
  return model;
}

Vocabulary Checkpoint::build_vocabulary() const {
  return Vocabulary::from_tokens(vocab_tokens, vocab_min_count);
}

namespace {

json bucket_list_to_json(const std::vector<Bucket>& buckets) {
  json arr = json::array();
  for (const Bucket& b : buckets) arr.push_back({b.max_objects, b.max_tokens});
  return arr;
}

std::vector<Bucket> bucket_list_from_json(const json& arr) {
  std::vector<Bucket> buckets;
  for (const json& b : arr) buckets.push_back({b.at(0).get<std::size_t>(), b.at(1).get<std::size_t>()});
  return buckets;
}

json train_config_to_json(const TrainConfig& c) {
  return json{{"batch_size", c.batch_size},
              {"lr_initial", c.lr_initial},
              {"plateau_patience", c.plateau_patience},
              {"plateau_min_rel_improvement", c.plateau_min_rel_improvement},
              {"dropout_rate", c.dropout_rate},
              {"early_stop_patience", c.early_stop_patience},
              {"max_epochs", c.max_epochs},
              {"seed", c.seed},
              {"grad_clip_norm", c.grad_clip_norm},
              {"threads", c.threads},
              {"buckets", bucket_list_to_json(c.buckets)},
              {"modulation", to_string(c.modulation)},
              {"variant", to_string(c.variant)},
              {"hidden_dim", c.hidden_dim},
              {"feature_dim", c.feature_dim}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.lr_initial = j.at("lr_initial").get<double>();
  c.plateau_patience = j.at("plateau_patience").get<std::size_t>();
  c.plateau_min_rel_improvement = j.at("plateau_min_rel_improvement").get<double>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.early_stop_patience = j.at("early_stop_patience").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.grad_clip_norm = j.at("grad_clip_norm").get<double>();
  c.threads = j.at("threads").get<std::size_t>();
  c.buckets = bucket_list_from_json(j.at("buckets"));
  c.modulation = modulation_mode_from_string(j.at("modulation").get<std::string>());
  c.variant = variant_from_string(j.at("variant").get<std::string>());
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.feature_dim = j.at("feature_dim").get<std::size_t>();
  return c;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  json j;
  j["format_version"] = kFormatVersion;
  j["model"] = {{"hidden_dim", model_config.hidden_dim},
                {"feature_dim", model_config.feature_dim},
                {"vocab_size", model_config.vocab_size},
                {"variant", to_string(model_config.variant)},
                {"modulation", to_string(model_config.modulation)}};
  j["train_config"] = train_config_to_json(train_config);
  j["vocabulary"] = {{"tokens", vocab_tokens}, {"min_count", vocab_min_count}};
  j["epoch"] = epoch;
  j["rng_state"] = rng_state;
  json tens = json::array();
  for (const Tensor& t : tensors)
    tens.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"values", t.values}});
  j["parameters"] = std::move(tens);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + tmp);
    out << j.dump();
    if (!out) throw std::runtime_error("failed writing checkpoint: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("checkpoint parse error: " + std::string(e.what()));
  }
  if (!j.contains("format_version") || j["format_version"].get<int>() != kFormatVersion)
    throw std::runtime_error("checkpoint: missing or unsupported format_version");

  Checkpoint ckpt;
  const json& m = j.at("model");
  ckpt.model_config.hidden_dim = m.at("hidden_dim").get<std::size_t>();
  ckpt.model_config.feature_dim = m.at("feature_dim").get<std::size_t>();
  ckpt.model_config.vocab_size = m.at("vocab_size").get<std::size_t>();
  ckpt.model_config.variant = variant_from_string(m.at("variant").get<std::string>());
  ckpt.model_config.modulation =
      modulation_mode_from_string(m.at("modulation").get<std::string>());
  ckpt.train_config = train_config_from_json(j.at("train_config"));
  ckpt.vocab_tokens = j.at("vocabulary").at("tokens").get<std::vector<std::string>>();
  ckpt.vocab_min_count = j.at("vocabulary").at("min_count").get<std::size_t>();
  ckpt.epoch = j.at("epoch").get<std::size_t>();
  ckpt.rng_state = j.at("rng_state").get<std::string>();
  for (const json& t : j.at("parameters")) {
    Tensor tensor;
    tensor.name = t.at("name").get<std::string>();
    tensor.rows = t.at("rows").get<std::size_t>();
    tensor.cols = t.at("cols").get<std::size_t>();
    tensor.values = t.at("values").get<std::vector<double>>();
    if (tensor.values.size() != tensor.rows * tensor.cols)
      throw std::runtime_error("checkpoint: tensor " + tensor.name + " size mismatch");
    ckpt.tensors.push_back(std::move(tensor));
  }
  return ckpt;
}

namespace {

struct BatchShapeKey {
  std::size_t objects, tokens;
  bool operator==(const BatchShapeKey&) const = default;
};

// Batches are homogeneous in padded shape: examples are bucketed by their
// padded dims, shuffled order decides batch membership.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<BatchExample>& set,
                                                   std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> order(set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::pair<BatchShapeKey, std::vector<std::size_t>>> pending;
  for (std::size_t idx : order) {
    const BatchShapeKey key{set[idx].objects.size(), set[idx].tokens.size()};
    auto it = std::find_if(pending.begin(), pending.end(),
                           [&](const auto& p) { return p.first == key; });
    if (it == pending.end()) {
      pending.push_back({key, {}});
      it = std::prev(pending.end());
    }
    it->second.push_back(idx);
    if (it->second.size() == batch_size) {
      batches.push_back(std::move(it->second));
      pending.erase(it);
    }
  }
  for (auto& [key, rest] : pending)
    if (!rest.empty()) batches.push_back(std::move(rest));
  return batches;
}

struct BatchOutcome {
  double loss_sum = 0.0;      // summed per-example nll
  std::size_t token_sum = 0;  // scored tokens
};

// Forward/backward over one batch with grads accumulated into the model.
// Work is split into `threads` contiguous chunks; chunk grads are reduced in
// chunk order, so a run is reproducible for a fixed thread count. Dropout
// masks come from per-example rngs seeded by a global example counter, so
// masks do not depend on the thread split at all.
BatchOutcome run_batch(Model& model, const std::vector<BatchExample>& set,
                       const std::vector<std::size_t>& batch, double dropout_rate,
                       std::uint64_t mask_seed_base, std::size_t threads) {
  const std::size_t n = batch.size();
  threads = std::min(threads, n);

  struct ChunkResult {
    std::vector<Matrix> grads;
    double loss_sum = 0.0;
    std::size_t token_sum = 0;
    std::string error;
  };

  std::vector<Parameter*> params = model.parameters();

  auto process_range = [&](std::size_t lo, std::size_t hi, Model& m, ChunkResult& out) {
    try {
      for (std::size_t bi = lo; bi < hi; ++bi) {
        const BatchExample& ex = set[batch[bi]];
        Rng mask_rng(mask_seed_base + 0x9e3779b97f4a7c15ULL * (bi + 1));
        DropoutSpec dropout;
        if (dropout_rate > 0.0) {
          dropout.rate = dropout_rate;
          dropout.rng = &mask_rng;
        }
        ForwardResult fr = m.forward(ex, dropout);
        out.loss_sum += fr.loss;
        out.token_sum += fr.scored_steps;
        m.backward(fr);
      }
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  };

  BatchOutcome outcome;
  if (threads <= 1) {
    ChunkResult res;
    process_range(0, n, model, res);
    if (!res.error.empty()) throw std::runtime_error(res.error);
    outcome.loss_sum = res.loss_sum;
    outcome.token_sum = res.token_sum;
    return outcome;
  }

  // Worker chunks run on parameter copies; the main model keeps chunk 0.
  std::vector<Model> workers(threads - 1);
  std::vector<ChunkResult> results(threads);
  for (std::size_t w = 0; w + 1 < threads; ++w) {
    workers[w] = model;
    workers[w].reset_grads();
  }

  std::vector<std::thread> pool;
  const std::size_t per = (n + threads - 1) / threads;
  for (std::size_t w = 1; w < threads; ++w) {
    const std::size_t lo = std::min(n, w * per);
    const std::size_t hi = std::min(n, (w + 1) * per);
    pool.emplace_back([&, w, lo, hi] { process_range(lo, hi, workers[w - 1], results[w]); });
  }
  process_range(0, std::min(n, per), model, results[0]);
  for (auto& t : pool) t.join();

  for (std::size_t w = 0; w < threads; ++w) {
    if (!results[w].error.empty()) throw std::runtime_error(results[w].error);
    outcome.loss_sum += results[w].loss_sum;
    outcome.token_sum += results[w].token_sum;
  }
  for (std::size_t w = 1; w < threads; ++w) {
    std::vector<Parameter*> wp = workers[w - 1].parameters();
    for (std::size_t i = 0; i < params.size(); ++i)
      add_in_place(params[i]->grad, wp[i]->grad);
  }
  return outcome;
}

}  // namespace

double evaluate_loss(const Model& model, const std::vector<BatchExample>& examples,
                     std::size_t threads) {
  if (examples.empty()) throw std::invalid_argument("evaluate_loss: empty set");
  threads = std::max<std::size_t>(1, std::min(threads, examples.size()));

  std::vector<double> losses(examples.size());
  std::vector<std::size_t> tokens(examples.size());
  auto eval_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      ForwardResult fr = model.forward(examples[i]);
      losses[i] = fr.loss;
      tokens[i] = fr.scored_steps;
    }
  };
  if (threads == 1) {
    eval_range(0, examples.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t per = (examples.size() + threads - 1) / threads;
    for (std::size_t w = 1; w < threads; ++w) {
      const std::size_t lo = std::min(examples.size(), w * per);
      const std::size_t hi = std::min(examples.size(), (w + 1) * per);
      pool.emplace_back([&, lo, hi] { eval_range(lo, hi); });
    }
    eval_range(0, std::min(examples.size(), per));
    for (auto& t : pool) t.join();
  }

  // fixed summation order regardless of thread count
  double loss_sum = 0.0;
  std::size_t token_sum = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    loss_sum += losses[i];
    token_sum += tokens[i];
  }
  return loss_sum / static_cast<double>(token_sum);
}

TrainResult train(const TrainConfig& config, Model& model, const Vocabulary& vocab,
                  const std::vector<BatchExample>& train_set,
                  const std::vector<BatchExample>& val_set, const EpochCallback& on_epoch) {
  validate(config);
  if (train_set.empty() || val_set.empty())
    throw std::invalid_argument("train: datasets must be non-empty");

  std::vector<Parameter*> params = model.parameters();
  Rng shuffle_rng(config.seed ^ 0x5bf03635d290c1a3ULL);
  double lr = config.lr_initial;

  TrainResult result;
  double best_train = std::numeric_limits<double>::infinity();
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t plateau_streak = 0;
  std::size_t early_stop_streak = 0;
  std::uint64_t step_counter = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double epoch_lr = lr;
    double loss_sum = 0.0;
    std::size_t token_sum = 0;

    const auto batches = make_batches(train_set, config.batch_size, shuffle_rng);
    for (const auto& batch : batches) {
      model.reset_grads();
      const std::uint64_t mask_seed =
          config.seed ^ (0xd1b54a32d192ed03ULL * (++step_counter));
      BatchOutcome out = run_batch(model, train_set, batch, config.dropout_rate,
                                   mask_seed, config.threads);
      if (!std::isfinite(out.loss_sum))
        throw TrainingDiverged("training diverged: non-finite loss at epoch " +
                               std::to_string(epoch));
      loss_sum += out.loss_sum;
      token_sum += out.token_sum;

      scale_and_clip_grads(params, 1.0 / static_cast<double>(batch.size()),
                           config.grad_clip_norm);
      sgd_step(params, lr);
      model.touch();
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = epoch_lr;
    stats.train_loss = loss_sum / static_cast<double>(token_sum);
    stats.val_loss = evaluate_loss(model, val_set, config.threads);
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);

    // lr halving on train-loss plateau
    const double improvement = (best_train - stats.train_loss) /
                               std::max(std::abs(best_train), 1e-12);
    if (std::isfinite(best_train) && improvement <= config.plateau_min_rel_improvement) {
      if (++plateau_streak >= config.plateau_patience) {
        lr *= 0.5;
        plateau_streak = 0;
      }
    } else {
      plateau_streak = 0;
    }
    best_train = std::min(best_train, stats.train_loss);

    // early stopping on validation loss
    if (stats.val_loss < best_val) {
      best_val = stats.val_loss;
      early_stop_streak = 0;
      result.best = Checkpoint::capture(model, vocab, config, epoch, shuffle_rng.state());
      result.best_val_loss = best_val;
      result.best_epoch = epoch;
    } else if (++early_stop_streak >= config.early_stop_patience) {
      break;
    }
  }

  if (result.best.tensors.empty())
    result.best = Checkpoint::capture(model, vocab, config, result.history.size(),
                                      shuffle_rng.state());
  return result;
}

}  // namespace mat
