#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace mat {

/// Token <-> index map with fixed special entries and a frequency cutoff.
/// Indices: PAD=0, START=1, END=2, UNK=3, then kept tokens by descending
/// corpus frequency (ties broken lexicographically).
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kStart = 1;
  static constexpr std::size_t kEnd = 2;
  static constexpr std::size_t kUnk = 3;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kStartToken = "<s>";
  static constexpr const char* kEndToken = "</s>";
  static constexpr const char* kUnkToken = "<unk>";

  Vocabulary() = default;

  /// Builds from tokenized captions; tokens occurring fewer than min_count
  /// times map to UNK.
  static Vocabulary build(const std::vector<std::vector<std::string>>& captions,
                          std::size_t min_count);

  /// Rebuilds from a serialized index->token list (specials included).
  static Vocabulary from_tokens(const std::vector<std::string>& tokens,
                                std::size_t min_count);

  std::size_t size() const { return index_to_token_.size(); }
  std::size_t min_count() const { return min_count_; }

  std::size_t index(const std::string& token) const;
  const std::string& token(std::size_t index) const;
  bool contains(const std::string& token) const;

  const std::vector<std::string>& tokens() const { return index_to_token_; }

  /// START + indices + END, unknown words mapped to UNK.
  std::vector<std::size_t> encode(const std::vector<std::string>& words) const;

  /// Joins tokens with spaces, skipping START/END/PAD; UNK renders as its
  /// placeholder string.
  std::string decode(const std::vector<std::size_t>& indices) const;

 private:
  void add_token(const std::string& token);

  std::vector<std::string> index_to_token_;
  std::unordered_map<std::string, std::size_t> token_to_index_;
  std::size_t min_count_ = 1;
};

std::vector<std::string> split_tokens(const std::string& text);

}  // namespace mat
