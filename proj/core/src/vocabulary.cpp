#include "mat/vocabulary.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mat {

std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

void Vocabulary::add_token(const std::string& token) {
  token_to_index_.emplace(token, index_to_token_.size());
  index_to_token_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& captions,
                             std::size_t min_count) {
  if (captions.empty()) throw std::invalid_argument("Vocabulary::build: empty corpus");
  if (min_count < 1) throw std::invalid_argument("Vocabulary::build: min_count must be >= 1");

  // std::map keys give the lexicographic tie-break for free.
  std::map<std::string, std::size_t> freq;
  for (const auto& caption : captions)
    for (const auto& word : caption) ++freq[word];

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [word, count] : freq)
    if (count >= min_count) kept.emplace_back(word, count);
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary vocab;
  vocab.min_count_ = min_count;
  vocab.add_token(kPadToken);
  vocab.add_token(kStartToken);
  vocab.add_token(kEndToken);
  vocab.add_token(kUnkToken);
  for (const auto& [word, count] : kept) vocab.add_token(word);
  return vocab;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens,
                                   std::size_t min_count) {
  if (tokens.size() < 4 || tokens[kPad] != kPadToken || tokens[kStart] != kStartToken ||
      tokens[kEnd] != kEndToken || tokens[kUnk] != kUnkToken)
    throw std::invalid_argument("Vocabulary::from_tokens: special tokens missing");
  Vocabulary vocab;
  vocab.min_count_ = min_count;
  for (const auto& t : tokens) {
    if (vocab.token_to_index_.count(t))
      throw std::invalid_argument("Vocabulary::from_tokens: duplicate token " + t);
    vocab.add_token(t);
  }
  return vocab;
}

std::size_t Vocabulary::index(const std::string& token) const {
  auto it = token_to_index_.find(token);
  return it == token_to_index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(std::size_t index) const {
  if (index >= index_to_token_.size())
    throw std::out_of_range("Vocabulary::token: index " + std::to_string(index) +
                            " out of range " + std::to_string(index_to_token_.size()));
  return index_to_token_[index];
}

bool Vocabulary::contains(const std::string& token) const {
  return token_to_index_.count(token) > 0;
}

std::vector<std::size_t> Vocabulary::encode(const std::vector<std::string>& words) const {
  std::vector<std::size_t> out;
  out.reserve(words.size() + 2);
  out.push_back(kStart);
  for (const auto& w : words) out.push_back(index(w));
  out.push_back(kEnd);
  return out;
}

std::string Vocabulary::decode(const std::vector<std::size_t>& indices) const {
  std::string out;
  for (std::size_t idx : indices) {
    if (idx == kStart || idx == kEnd || idx == kPad) continue;
    if (!out.empty()) out += ' ';
    out += token(idx);
  }
  return out;
}

}  // namespace mat
