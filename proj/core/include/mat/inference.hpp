#pragma once

#include <string>
#include <vector>

#include "mat/model.hpp"
#include "mat/vocabulary.hpp"

namespace mat {

/// A partial decoded sequence under beam search. tokens excludes START;
/// finished iff the last token is END.
struct Hypothesis {
  std::vector<std::size_t> tokens;
  double log_prob = 0.0;
  LstmState state;
  bool finished = false;
  std::vector<Vector> attention;  // per-step weights over encoder states
};

struct BeamResult {
  std::vector<std::size_t> tokens;  // includes the trailing END when finished
  double log_prob = 0.0;
  bool finished = false;
  std::vector<Vector> attention;
};

/// Breadth-limited best-first decoding: each live hypothesis expands over
/// the whole vocabulary, the top beam_size candidates by cumulative
/// log-probability survive, and hypotheses that emit END retire into a
/// completed pool. Returns the best completed hypothesis, or the best
/// unfinished one at max_len when nothing completed. Ties break toward the
/// lexicographically smaller token sequence. Scores are plain sums of token
/// log-probabilities unless length_normalize divides by sequence length.
BeamResult beam_search(const Model& model, const ObjectSequence& objects,
                       std::size_t beam_size = 20, std::size_t max_len = 30,
                       bool length_normalize = false);

struct CaptionResult {
  std::string text;
  double log_prob = 0.0;
  std::vector<Vector> attention;
};

/// beam_search plus detokenization (START/END stripped, UNK rendered as its
/// placeholder).
CaptionResult caption(const Model& model, const Vocabulary& vocab,
                      const ObjectSequence& objects, std::size_t beam_size = 20,
                      std::size_t max_len = 30, bool length_normalize = false);

/// Teacher-forced log-probability of the given tokens (END included); the
/// re-scoring dual of beam_search.
double score_sequence(const Model& model, const ObjectSequence& objects,
                      const std::vector<std::size_t>& tokens);

}  // namespace mat
