#pragma once

#include <stdexcept>
#include <string>

#include "mat/data.hpp"
#include "mat/training.hpp"

namespace mat {

/// Parse failure with the 1-based line it occurred on.
struct ConfigError : std::runtime_error {
  ConfigError(std::size_t line_in, const std::string& message)
      : std::runtime_error("config line " + std::to_string(line_in) + ": " + message),
        line(line_in) {}
  std::size_t line;
};

/// Experiment configuration: training schedule, model dims, synthetic-corpus
/// recipe, decoding options, and optional paths. Every key is optional and
/// defaults follow the training module; unknown keys are rejected.
struct RunConfig {
  TrainConfig train;       // includes hidden_dim / feature_dim / variant / modulation
  SyntheticSpec synthetic; // feature_dim mirrors train.feature_dim
  std::size_t num_train = 4000;
  std::size_t num_val = 500;
  std::size_t min_count = 5;
  std::size_t beam_size = 20;
  std::size_t max_len = 30;
  bool length_normalize = false;
  bool cider_d = false;
  std::string data_dir;
  std::string val_dir;
  std::string out_dir;
};

/// Lines are `key = value`; blank lines and `#` comments are skipped.
RunConfig parse_run_config_text(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Serializes every key; parse(to_text(c)) reproduces c.
std::string to_text(const RunConfig& config);

std::string buckets_to_string(const std::vector<Bucket>& buckets);
std::vector<Bucket> buckets_from_string(const std::string& text);

}  // namespace mat
