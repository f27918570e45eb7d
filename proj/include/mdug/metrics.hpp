#pragma once

// Boundary and generation metrics.
//
// Boundary scores are micro-averaged over every utterance; precision, recall
// and F1 are for the positive (boundary) class and are 0 when undefined.
// Generation metrics follow the coco-caption conventions: corpus-level BLEU-1
// with closest-reference brevity penalty, per-pair ROUGE-L (beta = 1.2)
// averaged over the corpus, CIDEr over 1..4-grams scaled by 10, and a
// simplified METEOR without a synonym table.

#include <cstdint>
#include <string>
#include <vector>

#include "mdug/vocab.hpp"

namespace mdug {

struct BoundaryScore {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  double acc = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;  // fractions in [0, 1]
};

/// Fills the derived rates of a confusion count.
BoundaryScore score_from_counts(long tp, long fp, long tn, long fn);
BoundaryScore boundary_score(const std::vector<int>& preds, const std::vector<int>& golds);
/// Harmonic mean of precision and recall; 0 when both are 0.
double f1_from(double precision, double recall);

struct GenScore {
  double bleu1 = 0.0, rouge_l = 0.0, meteor = 0.0;  // [0, 1]
  double cider = 0.0;                               // [0, 10]
  /// Mean of the four on their reported scales: BLEU-1, ROUGE-L and METEOR in percent, CIDEr raw.
  double avg() const { return (100.0 * bleu1 + 100.0 * rouge_l + 100.0 * meteor + cider) / 4.0; }
};

using Tokens = std::vector<std::string>;
using References = std::vector<Tokens>;  // one or more references per candidate

double bleu1(const std::vector<Tokens>& candidates, const std::vector<References>& references);
double rouge_l(const std::vector<Tokens>& candidates, const std::vector<References>& references);
double meteor_lite(const std::vector<Tokens>& candidates, const std::vector<References>& references);
/// Document frequencies come from `idf_corpus` (one reference set per document).
double cider(const std::vector<Tokens>& candidates, const std::vector<References>& references,
             const std::vector<References>& idf_corpus);
/// idf from the references themselves.
double cider(const std::vector<Tokens>& candidates, const std::vector<References>& references);

/// Per-pair building blocks, exposed for tests.
std::size_t lcs_length(const Tokens& a, const Tokens& b);
double rouge_l_pair(const Tokens& candidate, const References& refs);
double meteor_pair(const Tokens& candidate, const References& refs);
/// Crude suffix stripper used for METEOR's stem-match stage.
std::string stem(const std::string& word);

/// All four generation metrics over raw strings, tokenised with the corpus tokenizer.
GenScore score_generation(const std::vector<std::string>& candidates, const std::vector<std::string>& references);

/// Seeded coin-flip boundary predictor: one independent fair coin per utterance.
std::vector<int> random_boundaries(std::size_t n, std::uint64_t seed);
/// Seeded random responses: 1..max_len tokens drawn uniformly from the non-special vocabulary.
std::vector<std::string> random_responses(std::size_t n, const Vocabulary& vocab, int max_len, std::uint64_t seed);

}  // namespace mdug
