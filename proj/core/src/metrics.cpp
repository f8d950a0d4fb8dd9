#include "mat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace mat {

namespace {

constexpr int kCiderMaxOrder = 4;

using NgramCounts = std::unordered_map<std::string, std::size_t>;

std::string ngram_key(const std::vector<std::string>& tokens, std::size_t start,
                      std::size_t n) {
  std::string key = tokens[start];
  for (std::size_t i = 1; i < n; ++i) {
    key += '\x1f';
    key += tokens[start + i];
  }
  return key;
}

NgramCounts count_ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() >= n)
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++counts[ngram_key(tokens, i, n)];
  return counts;
}

void check_corpus(const std::vector<EvalPair>& corpus) {
  if (corpus.empty()) throw std::invalid_argument("metrics: empty corpus");
  for (const EvalPair& pair : corpus)
    if (pair.references.empty())
      throw std::invalid_argument("metrics: candidate without references");
}

}  // namespace

double bleu(const std::vector<EvalPair>& corpus, int max_order) {
  check_corpus(corpus);
  if (max_order < 1) throw std::invalid_argument("bleu: order must be >= 1");

  std::vector<double> matched(max_order, 0.0), total(max_order, 0.0);
  double candidate_len = 0.0, reference_len = 0.0;

  for (const EvalPair& pair : corpus) {
    const std::size_t c = pair.candidate.size();
    candidate_len += static_cast<double>(c);

    // closest reference length; ties toward the shorter one
    std::size_t best_r = pair.references.front().size();
    for (const auto& ref : pair.references) {
      const std::size_t r = ref.size();
      const auto diff = [&](std::size_t len) {
        return len > c ? len - c : c - len;
      };
      if (diff(r) < diff(best_r) || (diff(r) == diff(best_r) && r < best_r)) best_r = r;
    }
    reference_len += static_cast<double>(best_r);

    for (int n = 1; n <= max_order; ++n) {
      const NgramCounts cand = count_ngrams(pair.candidate, n);
      NgramCounts max_ref;
      for (const auto& ref : pair.references)
        for (const auto& [key, count] : count_ngrams(ref, n))
          max_ref[key] = std::max(max_ref[key], count);
      for (const auto& [key, count] : cand) {
        auto it = max_ref.find(key);
        if (it != max_ref.end())
          matched[n - 1] += static_cast<double>(std::min(count, it->second));
      }
      total[n - 1] += static_cast<double>(c >= static_cast<std::size_t>(n)
                                              ? c - n + 1
                                              : 0);
    }
  }

  double log_precision_sum = 0.0;
  for (int n = 0; n < max_order; ++n) {
    if (matched[n] == 0.0 || total[n] == 0.0) return 0.0;
    log_precision_sum += std::log(matched[n] / total[n]);
  }
  const double geo_mean = std::exp(log_precision_sum / max_order);
  const double bp = candidate_len < reference_len
                        ? std::exp(1.0 - reference_len / candidate_len)
                        : 1.0;
  return bp * geo_mean;
}

namespace {

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), curr(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      curr[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], curr[j - 1]);
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

}  // namespace

double rouge_l(const std::vector<EvalPair>& corpus, double beta) {
  check_corpus(corpus);
  double sum = 0.0;
  for (const EvalPair& pair : corpus) {
    double best = 0.0;
    for (const auto& ref : pair.references) {
      if (pair.candidate.empty() || ref.empty()) continue;
      const double lcs = static_cast<double>(lcs_length(pair.candidate, ref));
      if (lcs == 0.0) continue;
      const double precision = lcs / static_cast<double>(pair.candidate.size());
      const double recall = lcs / static_cast<double>(ref.size());
      const double f = (1.0 + beta * beta) * precision * recall /
                       (recall + beta * beta * precision);
      best = std::max(best, f);
    }
    sum += best;
  }
  return sum / static_cast<double>(corpus.size());
}

namespace {

// tf-idf vector per n-gram order; idf = log(corpus size / document frequency)
using TfIdf = std::unordered_map<std::string, double>;

struct CiderStats {
  std::vector<TfIdf> vec;  // one per order
  std::vector<double> norm;
  std::size_t length = 0;
};

CiderStats make_stats(const std::vector<std::string>& tokens,
                      const std::unordered_map<std::string, double>& idf) {
  CiderStats stats;
  stats.length = tokens.size();
  stats.vec.resize(kCiderMaxOrder);
  stats.norm.assign(kCiderMaxOrder, 0.0);
  for (int n = 1; n <= kCiderMaxOrder; ++n) {
    TfIdf& v = stats.vec[n - 1];
    for (const auto& [key, count] : count_ngrams(tokens, n)) {
      auto it = idf.find(key);
      const double w = static_cast<double>(count) * (it == idf.end() ? 0.0 : it->second);
      v[key] = w;
      stats.norm[n - 1] += w * w;
    }
    stats.norm[n - 1] = std::sqrt(stats.norm[n - 1]);
  }
  return stats;
}

}  // namespace

double cider(const std::vector<EvalPair>& corpus, const CiderOptions& options) {
  check_corpus(corpus);
  if (corpus.size() == 1)
    std::cerr << "cider: warning: single-image corpus has degenerate idf; score is 0\n";

  // document frequency over images: an n-gram counts once per image whose
  // reference set contains it
  std::unordered_map<std::string, double> df;
  for (const EvalPair& pair : corpus) {
    std::unordered_set<std::string> seen;
    for (const auto& ref : pair.references)
      for (int n = 1; n <= kCiderMaxOrder; ++n)
        for (const auto& [key, count] : count_ngrams(ref, n)) seen.insert(key);
    for (const auto& key : seen) df[key] += 1.0;
  }
  const double log_corpus = std::log(static_cast<double>(corpus.size()));
  std::unordered_map<std::string, double> idf;
  idf.reserve(df.size());
  for (const auto& [key, freq] : df) idf[key] = log_corpus - std::log(freq);

  double corpus_sum = 0.0;
  for (const EvalPair& pair : corpus) {
    const CiderStats cand = make_stats(pair.candidate, idf);
    double pair_sum = 0.0;
    for (const auto& ref : pair.references) {
      const CiderStats rs = make_stats(ref, idf);
      double order_sum = 0.0;
      for (int n = 0; n < kCiderMaxOrder; ++n) {
        double dot = 0.0;
        for (const auto& [key, w] : cand.vec[n]) {
          auto it = rs.vec[n].find(key);
          if (it == rs.vec[n].end()) continue;
          dot += options.cider_d ? std::min(w, it->second) * it->second : w * it->second;
        }
        const double denom = cand.norm[n] * rs.norm[n];
        double sim = denom > 0.0 ? dot / denom : 0.0;
        if (options.cider_d) {
          const double delta = static_cast<double>(cand.length) -
                               static_cast<double>(rs.length);
          sim *= std::exp(-delta * delta / (2.0 * options.sigma * options.sigma));
        }
        order_sum += sim;
      }
      pair_sum += order_sum / kCiderMaxOrder;
    }
    corpus_sum += pair_sum / static_cast<double>(pair.references.size());
  }
  return 10.0 * corpus_sum / static_cast<double>(corpus.size());
}

MetricReport evaluate_all(const std::vector<EvalPair>& corpus,
                          const CiderOptions& cider_options) {
  MetricReport report;
  report.bleu1 = bleu(corpus, 1);
  report.bleu2 = bleu(corpus, 2);
  report.bleu3 = bleu(corpus, 3);
  report.bleu4 = bleu(corpus, 4);
  report.rouge_l = rouge_l(corpus);
  report.cider = cider(corpus, cider_options);
  return report;
}

}  // namespace mat
