#pragma once

#include <string>
#include <vector>

namespace mat {

/// One candidate sentence with its reference set (at least one reference).
struct EvalPair {
  std::vector<std::string> candidate;
  std::vector<std::vector<std::string>> references;
};

/// Corpus-level BLEU with uniform weights over n-gram orders 1..max_order:
/// clipped modified precision and the closest-reference-length brevity
/// penalty exp(1 - r/c) when c < r. Returns a value in [0, 1].
double bleu(const std::vector<EvalPair>& corpus, int max_order);

/// Mean over pairs of the best-reference LCS F-measure with beta = 1.2.
double rouge_l(const std::vector<EvalPair>& corpus, double beta = 1.2);

struct CiderOptions {
  bool cider_d = false;  // count-clipped similarity with a length gaussian
  double sigma = 6.0;    // gaussian width for cider_d
};

/// Tf-idf weighted n-gram cosine similarity to the references, averaged over
/// n = 1..4 and over references, scaled by 10. Idf statistics come from the
/// reference corpus; a single-image corpus has degenerate idf and scores 0
/// with a warning on stderr.
double cider(const std::vector<EvalPair>& corpus, const CiderOptions& options = {});

struct MetricReport {
  double bleu1 = 0.0, bleu2 = 0.0, bleu3 = 0.0, bleu4 = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
};

MetricReport evaluate_all(const std::vector<EvalPair>& corpus,
                          const CiderOptions& cider_options = {});

}  // namespace mat
