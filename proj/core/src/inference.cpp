#include "mat/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mat {

namespace {

struct Candidate {
  std::size_t hyp_index;
  std::size_t token;
  double log_prob;   // cumulative
  double sort_score; // length-normalized when requested
};

// Higher score first; ties toward the lexicographically smaller extended
// sequence (prefixes sort before extensions).
bool candidate_less(const std::vector<Hypothesis>& live, const Candidate& a,
                    const Candidate& b) {
  if (a.sort_score != b.sort_score) return a.sort_score > b.sort_score;
  const auto& ta = live[a.hyp_index].tokens;
  const auto& tb = live[b.hyp_index].tokens;
  const std::size_t la = ta.size() + 1, lb = tb.size() + 1;
  for (std::size_t i = 0; i < std::min(la, lb); ++i) {
    const std::size_t va = i < ta.size() ? ta[i] : a.token;
    const std::size_t vb = i < tb.size() ? tb[i] : b.token;
    if (va != vb) return va < vb;
  }
  return la < lb;
}

bool result_better(const BeamResult& a, const BeamResult& b, bool length_normalize) {
  const double sa = length_normalize && !a.tokens.empty()
                        ? a.log_prob / static_cast<double>(a.tokens.size())
                        : a.log_prob;
  const double sb = length_normalize && !b.tokens.empty()
                        ? b.log_prob / static_cast<double>(b.tokens.size())
                        : b.log_prob;
  if (sa != sb) return sa > sb;
  return std::lexicographical_compare(a.tokens.begin(), a.tokens.end(),
                                      b.tokens.begin(), b.tokens.end());
}

}  // namespace

BeamResult beam_search(const Model& model, const ObjectSequence& objects,
                       std::size_t beam_size, std::size_t max_len,
                       bool length_normalize) {
  if (objects.empty()) throw std::invalid_argument("beam_search: empty object sequence");
  if (beam_size < 1) throw std::invalid_argument("beam_search: beam_size must be >= 1");
  if (max_len < 1) throw std::invalid_argument("beam_search: max_len must be >= 1");

  const EncodeResult enc = model.encode(objects, objects.size());
  const std::size_t vocab = model.config().vocab_size;

  std::vector<Hypothesis> live(1);
  live[0].state = enc.final_state;

  BeamResult best_completed;
  bool have_completed = false;

  for (std::size_t step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<Candidate> candidates;
    candidates.reserve(live.size() * vocab);
    std::vector<Model::StepResult> steps(live.size());

    for (std::size_t hi = 0; hi < live.size(); ++hi) {
      const std::size_t input =
          live[hi].tokens.empty() ? Vocabulary::kStart : live[hi].tokens.back();
      steps[hi] = model.decode_step(enc, live[hi].state, input);
      for (std::size_t tok = 0; tok < vocab; ++tok) {
        const double lp = live[hi].log_prob + std::log(steps[hi].probs[tok]);
        const double score =
            length_normalize ? lp / static_cast<double>(live[hi].tokens.size() + 1) : lp;
        candidates.push_back({hi, tok, lp, score});
      }
    }

    const std::size_t keep = std::min(beam_size, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end(),
                      [&](const Candidate& a, const Candidate& b) {
                        return candidate_less(live, a, b);
                      });
    candidates.resize(keep);

    std::vector<Hypothesis> next;
    next.reserve(keep);
    for (const Candidate& cand : candidates) {
      const Hypothesis& parent = live[cand.hyp_index];
      Hypothesis hyp;
      hyp.tokens = parent.tokens;
      hyp.tokens.push_back(cand.token);
      hyp.log_prob = cand.log_prob;
      hyp.state = steps[cand.hyp_index].state;
      hyp.attention = parent.attention;
      if (!steps[cand.hyp_index].trace.weights.empty())
        hyp.attention.push_back(steps[cand.hyp_index].trace.weights);
      hyp.finished = cand.token == Vocabulary::kEnd;

      if (hyp.finished) {
        BeamResult done{hyp.tokens, hyp.log_prob, true, hyp.attention};
        if (!have_completed || result_better(done, best_completed, length_normalize)) {
          best_completed = std::move(done);
          have_completed = true;
        }
      } else {
        next.push_back(std::move(hyp));
      }
    }
    live = std::move(next);
  }

  if (have_completed) return best_completed;
  if (live.empty()) throw std::logic_error("beam_search: no hypotheses survived");

  BeamResult best{live[0].tokens, live[0].log_prob, false, live[0].attention};
  for (std::size_t i = 1; i < live.size(); ++i) {
    BeamResult other{live[i].tokens, live[i].log_prob, false, live[i].attention};
    if (result_better(other, best, length_normalize)) best = std::move(other);
  }
  return best;
}

CaptionResult caption(const Model& model, const Vocabulary& vocab,
                      const ObjectSequence& objects, std::size_t beam_size,
                      std::size_t max_len, bool length_normalize) {
  BeamResult beam = beam_search(model, objects, beam_size, max_len, length_normalize);
  CaptionResult result;
  result.text = vocab.decode(beam.tokens);
  result.log_prob = beam.log_prob;
  result.attention = std::move(beam.attention);
  return result;
}

double score_sequence(const Model& model, const ObjectSequence& objects,
                      const std::vector<std::size_t>& tokens) {
  if (tokens.empty()) throw std::invalid_argument("score_sequence: empty sequence");
  const EncodeResult enc = model.encode(objects, objects.size());
  LstmState state = enc.final_state;
  double log_prob = 0.0;
  std::size_t input = Vocabulary::kStart;
  for (std::size_t token : tokens) {
    if (token >= model.config().vocab_size)
      throw std::invalid_argument("score_sequence: token index out of range");
    Model::StepResult step = model.decode_step(enc, state, input);
    log_prob += std::log(step.probs[token]);
    state = std::move(step.state);
    input = token;
  }
  return log_prob;
}

}  // namespace mat
