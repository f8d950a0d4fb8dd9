#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mat/model.hpp"
#include "mat/rng.hpp"
#include "mat/vocabulary.hpp"

namespace mat {

/// One shape class for rectangular batching: sequences are padded to
/// (max_objects, max_tokens). max_tokens counts START and END.
struct Bucket {
  std::size_t max_objects = 0;
  std::size_t max_tokens = 0;

  bool operator==(const Bucket&) const = default;
};

std::vector<Bucket> default_buckets();  // {(2,10), (4,15), (6,20), (8,30)}

/// Throws unless both dims are strictly increasing across the list.
void validate_buckets(const std::vector<Bucket>& buckets);

/// First bucket that fits both counts (token count includes START and END).
/// Oversize sequences map to the largest bucket; prepare_example truncates
/// them to fit.
Bucket assign_bucket(const std::vector<Bucket>& buckets, std::size_t object_count,
                     std::size_t token_count_with_start_end);

/// Zero-pads objects to bucket.max_objects and PAD-extends tokens to
/// bucket.max_tokens, recording the true lengths.
BatchExample pad_example(const ObjectSequence& objects,
                         const std::vector<std::size_t>& tokens_with_start_end,
                         const Bucket& bucket);

/// Strips padding back off using the recorded true lengths.
std::pair<ObjectSequence, std::vector<std::size_t>> unpad_example(const BatchExample& ex);

/// One raw dataset record: features plus the tokenized caption.
struct CaptionedExample {
  std::string id;
  ObjectSequence objects;
  std::vector<std::string> caption;
};

using Dataset = std::vector<CaptionedExample>;

using WarnFn = std::function<void(const std::string&)>;

/// Encodes, truncates oversize sequences to the largest bucket (dropping the
/// lowest-scored objects while keeping the trailing global feature, and
/// keeping the caption prefix plus END), assigns a bucket, and pads.
BatchExample prepare_example(const CaptionedExample& ex, const Vocabulary& vocab,
                             const std::vector<Bucket>& buckets,
                             const WarnFn& warn = nullptr);

std::vector<BatchExample> prepare_dataset(const Dataset& data, const Vocabulary& vocab,
                                          const std::vector<Bucket>& buckets,
                                          const WarnFn& warn = nullptr);

/// Recipe for the synthetic corpus: each example draws between 1 and
/// max_objects class prototypes with Gaussian noise, appends the mean as the
/// global feature, and captions the sequence with a fixed grammar that
/// mentions objects in order, merging consecutive runs of one class into a
/// count word ("dog dog cat" -> "two dog and a cat").
struct SyntheticSpec {
  std::size_t num_classes = 12;
  std::size_t feature_dim = 16;
  double noise_std = 0.1;
  std::size_t max_objects = 5;
  double prototype_scale = 3.0;  // feature vector norm per class
  std::uint64_t seed = 7;        // fixes the class prototypes (task identity)
};

void validate(const SyntheticSpec& spec);

/// Class prototypes: fixed unit-norm random vectors derived from spec.seed.
std::vector<Vector> synthetic_prototypes(const SyntheticSpec& spec);

const std::vector<std::string>& synthetic_class_names(std::size_t num_classes);

/// Deterministic dataset: same spec and sample_seed give identical examples.
/// Distinct sample_seeds share the prototypes, so train/val splits describe
/// the same task.
Dataset generate_synthetic(const SyntheticSpec& spec, std::size_t count,
                           std::uint64_t sample_seed);

// JSON-lines feature file: one record per image,
//   {"id": str, "dim": int, "objects": [[...], ...], "global": [...]}
// The loader appends "global" as the final encoder input and preserves file
// order (callers supply score-descending order).
std::vector<std::pair<std::string, ObjectSequence>> load_features(const std::string& path);
void write_features(const std::string& path,
                    const std::vector<std::pair<std::string, ObjectSequence>>& records);

// JSON-lines caption file: {"id": str, "caption": str}; captions are
// space-tokenized lowercase.
std::vector<std::pair<std::string, std::string>> load_captions(const std::string& path);
void write_captions(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& records);

/// Joins features and captions on id (caption order, error on missing id).
Dataset join_dataset(const std::vector<std::pair<std::string, ObjectSequence>>& features,
                     const std::vector<std::pair<std::string, std::string>>& captions);

void write_dataset(const std::string& features_path, const std::string& captions_path,
                   const Dataset& data);
Dataset load_dataset(const std::string& features_path, const std::string& captions_path);

}  // namespace mat
