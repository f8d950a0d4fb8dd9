#include "mat/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace mat {

using nlohmann::json;

std::vector<Bucket> default_buckets() {
  return {{2, 10}, {4, 15}, {6, 20}, {8, 30}};
}

void validate_buckets(const std::vector<Bucket>& buckets) {
  if (buckets.empty()) throw std::invalid_argument("buckets: empty list");
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    if (buckets[i].max_objects == 0 || buckets[i].max_tokens == 0)
      throw std::invalid_argument("buckets: zero dimension at position " + std::to_string(i));
    if (i > 0 && (buckets[i].max_objects <= buckets[i - 1].max_objects ||
                  buckets[i].max_tokens <= buckets[i - 1].max_tokens))
      throw std::invalid_argument("buckets: dims must be strictly increasing at position " +
                                  std::to_string(i));
  }
}

Bucket assign_bucket(const std::vector<Bucket>& buckets, std::size_t object_count,
                     std::size_t token_count_with_start_end) {
  validate_buckets(buckets);
  if (object_count == 0 || token_count_with_start_end == 0)
    throw std::invalid_argument("assign_bucket: counts must be positive");
  for (const Bucket& b : buckets) {
    if (b.max_objects >= object_count && b.max_tokens >= token_count_with_start_end)
      return b;
  }
  return buckets.back();
}

BatchExample pad_example(const ObjectSequence& objects,
                         const std::vector<std::size_t>& tokens_with_start_end,
                         const Bucket& bucket) {
  if (objects.empty()) throw std::invalid_argument("pad_example: empty object sequence");
  if (tokens_with_start_end.size() < 2 || tokens_with_start_end.front() != Vocabulary::kStart)
    throw std::invalid_argument("pad_example: token list must begin with START");
  if (objects.size() > bucket.max_objects ||
      tokens_with_start_end.size() > bucket.max_tokens)
    throw std::invalid_argument("pad_example: sequence exceeds bucket dims");

  BatchExample ex;
  ex.object_count = objects.size();
  ex.token_count = tokens_with_start_end.size() - 1;  // scored decode steps
  ex.objects = objects;
  const std::size_t dim = objects.features.front().size();
  while (ex.objects.features.size() < bucket.max_objects)
    ex.objects.features.push_back(Vector(dim, 1));
  ex.tokens = tokens_with_start_end;
  ex.tokens.resize(bucket.max_tokens, Vocabulary::kPad);
  return ex;
}

std::pair<ObjectSequence, std::vector<std::size_t>> unpad_example(const BatchExample& ex) {
  ObjectSequence objects;
  objects.features.assign(ex.objects.features.begin(),
                          ex.objects.features.begin() + ex.object_count);
  std::vector<std::size_t> tokens(ex.tokens.begin(),
                                  ex.tokens.begin() + ex.token_count + 1);
  return {std::move(objects), std::move(tokens)};
}

BatchExample prepare_example(const CaptionedExample& ex, const Vocabulary& vocab,
                             const std::vector<Bucket>& buckets, const WarnFn& warn) {
  validate_buckets(buckets);
  ObjectSequence objects = ex.objects;
  std::vector<std::size_t> tokens = vocab.encode(ex.caption);
  const Bucket largest = buckets.back();

  if (objects.size() > largest.max_objects) {
    if (warn)
      warn("example " + ex.id + ": " + std::to_string(objects.size()) +
           " objects truncated to " + std::to_string(largest.max_objects));
    // keep the highest-scored objects and the trailing global feature
    Vector global = objects.features.back();
    objects.features.resize(largest.max_objects - 1);
    objects.features.push_back(std::move(global));
  }
  if (tokens.size() > largest.max_tokens) {
    if (warn)
      warn("example " + ex.id + ": " + std::to_string(tokens.size()) +
           " tokens truncated to " + std::to_string(largest.max_tokens));
    tokens.resize(largest.max_tokens - 1);
    tokens.push_back(Vocabulary::kEnd);
  }

  const Bucket bucket = assign_bucket(buckets, objects.size(), tokens.size());
  return pad_example(objects, tokens, bucket);
}

std::vector<BatchExample> prepare_dataset(const Dataset& data, const Vocabulary& vocab,
                                          const std::vector<Bucket>& buckets,
                                          const WarnFn& warn) {
  std::vector<BatchExample> out;
  out.reserve(data.size());
  for (const CaptionedExample& ex : data)
    out.push_back(prepare_example(ex, vocab, buckets, warn));
  return out;
}

void validate(const SyntheticSpec& spec) {
  if (spec.num_classes < 2)
    throw std::invalid_argument("SyntheticSpec: num_classes must be >= 2");
  if (spec.feature_dim == 0)
    throw std::invalid_argument("SyntheticSpec: feature_dim must be positive");
  if (spec.noise_std < 0.0)
    throw std::invalid_argument("SyntheticSpec: noise_std must be >= 0");
  if (spec.max_objects == 0 || spec.max_objects > 9)
    throw std::invalid_argument(
        "SyntheticSpec: max_objects must be in [1, 9] (count words stop at nine)");
  if (spec.prototype_scale <= 0.0)
    throw std::invalid_argument("SyntheticSpec: prototype_scale must be positive");
}

std::vector<Vector> synthetic_prototypes(const SyntheticSpec& spec) {
  validate(spec);
  Rng rng(spec.seed * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
  std::vector<Vector> protos;
  protos.reserve(spec.num_classes);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    Vector p(spec.feature_dim, 1);
    for (std::size_t k = 0; k < spec.feature_dim; ++k) p[k] = rng.normal();
    // Gram-Schmidt against earlier prototypes while they span less than the
    // whole space; extra classes stay plain random directions.
    if (c < spec.feature_dim) {
      for (const Vector& q : protos) {
        const double proj = dot(p, q) / dot(q, q);
        for (std::size_t k = 0; k < spec.feature_dim; ++k) p[k] -= proj * q[k];
      }
    }
    scale_in_place(p, spec.prototype_scale / std::sqrt(squared_norm(p)));
    protos.push_back(std::move(p));
  }
  return protos;
}

const std::vector<std::string>& synthetic_class_names(std::size_t num_classes) {
  static const std::vector<std::string> base = {
      "dog", "cat",   "car",  "tree",  "bird",  "boat",
      "house", "horse", "fish", "apple", "chair", "truck",
      "lamp", "plane", "cup",  "clock"};
  static std::vector<std::string> extended;
  if (num_classes <= base.size()) return base;
  if (extended.size() < num_classes) {
    extended = base;
    for (std::size_t c = extended.size(); c < num_classes; ++c)
      extended.push_back("thing" + std::to_string(c));
  }
  return extended;
}

namespace {

const char* count_word(std::size_t n) {
  static const char* words[] = {"",     "",      "two",  "three", "four",
                                "five", "six",   "seven", "eight", "nine"};
  if (n < 2 || n > 9) throw std::logic_error("count_word: unsupported count");
  return words[n];
}

std::vector<std::string> caption_for_classes(const std::vector<std::size_t>& classes,
                                             const std::vector<std::string>& names) {
  // mention objects in sequence order, merging runs of the same class into a
  // count word ("dog dog cat dog" -> "two dog and a cat and a dog")
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < classes.size()) {
    std::size_t run = 1;
    while (i + run < classes.size() && classes[i + run] == classes[i]) ++run;
    if (i > 0) words.push_back("and");
    words.push_back(run == 1 ? "a" : count_word(run));
    words.push_back(names[classes[i]]);
    i += run;
  }
  return words;
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec, std::size_t count,
                           std::uint64_t sample_seed) {
  validate(spec);
  const std::vector<Vector> protos = synthetic_prototypes(spec);
  const std::vector<std::string>& names = synthetic_class_names(spec.num_classes);

  Rng rng(sample_seed);
  Dataset data;
  data.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t k = 1 + rng.index(spec.max_objects);
    std::vector<std::size_t> classes;
    classes.reserve(k);
    for (std::size_t i = 0; i < k; ++i) classes.push_back(rng.index(spec.num_classes));

    CaptionedExample ex;
    std::ostringstream id;
    id << "synth-" << sample_seed << "-" << n;
    ex.id = id.str();

    Vector global(spec.feature_dim, 1);
    for (std::size_t c : classes) {
      Vector f = protos[c];
      if (spec.noise_std > 0.0)
        for (std::size_t d = 0; d < spec.feature_dim; ++d)
          f[d] += rng.normal(0.0, spec.noise_std);
      add_in_place(global, f);
      ex.objects.features.push_back(std::move(f));
    }
    scale_in_place(global, 1.0 / static_cast<double>(k));
    ex.objects.features.push_back(std::move(global));
    ex.caption = caption_for_classes(classes, names);
    data.push_back(std::move(ex));
  }
  return data;
}

namespace {

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (std::size_t i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const json& arr, std::size_t expect_dim, const char* what,
                        std::size_t record_index) {
  if (!arr.is_array() || (expect_dim != 0 && arr.size() != expect_dim))
    throw std::runtime_error("features record " + std::to_string(record_index) +
                             ": bad " + what + " length");
  Vector v(arr.size(), 1);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number())
      throw std::runtime_error("features record " + std::to_string(record_index) +
                               ": non-numeric " + what + " entry");
    v[i] = arr[i].get<double>();
  }
  return v;
}

}  // namespace

std::vector<std::pair<std::string, ObjectSequence>> load_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open feature file: " + path);
  std::vector<std::pair<std::string, ObjectSequence>> out;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("features record " + std::to_string(index) +
                               ": parse error: " + e.what());
    }
    if (!rec.contains("id") || !rec.contains("dim") || !rec.contains("objects") ||
        !rec.contains("global"))
      throw std::runtime_error("features record " + std::to_string(index) +
                               ": missing required field");
    const std::size_t dim = rec["dim"].get<std::size_t>();
    ObjectSequence seq;
    for (const json& obj : rec["objects"])
      seq.features.push_back(vector_from_json(obj, dim, "object vector", index));
    seq.features.push_back(vector_from_json(rec["global"], dim, "global vector", index));
    out.emplace_back(rec["id"].get<std::string>(), std::move(seq));
    ++index;
  }
  return out;
}

void write_features(const std::string& path,
                    const std::vector<std::pair<std::string, ObjectSequence>>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write feature file: " + path);
  for (const auto& [id, seq] : records) {
    if (seq.empty()) throw std::invalid_argument("write_features: empty sequence for " + id);
    json rec;
    rec["id"] = id;
    rec["dim"] = seq.features.front().size();
    json objects = json::array();
    for (std::size_t i = 0; i + 1 < seq.features.size(); ++i)
      objects.push_back(vector_to_json(seq.features[i]));
    rec["objects"] = std::move(objects);
    rec["global"] = vector_to_json(seq.features.back());
    out << rec.dump() << '\n';
  }
}

std::vector<std::pair<std::string, std::string>> load_captions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open caption file: " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("captions record " + std::to_string(index) +
                               ": parse error: " + e.what());
    }
    if (!rec.contains("id") || !rec.contains("caption"))
      throw std::runtime_error("captions record " + std::to_string(index) +
                               ": missing required field");
    out.emplace_back(rec["id"].get<std::string>(), rec["caption"].get<std::string>());
    ++index;
  }
  return out;
}

void write_captions(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write caption file: " + path);
  for (const auto& [id, caption] : records) {
    json rec;
    rec["id"] = id;
    rec["caption"] = caption;
    out << rec.dump() << '\n';
  }
}

Dataset join_dataset(const std::vector<std::pair<std::string, ObjectSequence>>& features,
                     const std::vector<std::pair<std::string, std::string>>& captions) {
  std::unordered_map<std::string, const ObjectSequence*> by_id;
  for (const auto& [id, seq] : features) by_id[id] = &seq;
  Dataset data;
  data.reserve(captions.size());
  for (const auto& [id, caption] : captions) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw std::runtime_error("join_dataset: caption id without features: " + id);
    CaptionedExample ex;
    ex.id = id;
    ex.objects = *it->second;
    ex.caption = split_tokens(caption);
    data.push_back(std::move(ex));
  }
  return data;
}

void write_dataset(const std::string& features_path, const std::string& captions_path,
                   const Dataset& data) {
  std::vector<std::pair<std::string, ObjectSequence>> features;
  std::vector<std::pair<std::string, std::string>> captions;
  features.reserve(data.size());
  captions.reserve(data.size());
  for (const CaptionedExample& ex : data) {
    features.emplace_back(ex.id, ex.objects);
    std::string joined;
    for (const auto& w : ex.caption) {
      if (!joined.empty()) joined += ' ';
      joined += w;
    }
    captions.emplace_back(ex.id, joined);
  }
  write_features(features_path, features);
  write_captions(captions_path, captions);
}

Dataset load_dataset(const std::string& features_path, const std::string& captions_path) {
  return join_dataset(load_features(features_path), load_captions(captions_path));
}

}  // namespace mat
