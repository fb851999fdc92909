#pragma once

#include <Eigen/Dense>
#include <compare>
#include <cstdint>
#include <vector>

#include "blner/encoder.hpp"
#include "blner/types.hpp"

namespace blner {

// Inclusive 1-based token span.
struct Span {
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  auto operator<=>(const Span&) const = default;
};

// All spans of length <= threshold, ordered by (start, end). Position 0 is
// never part of a span.
std::vector<Span> enumerate_spans(int n, int threshold);

// Closed-form count: e(2n-e+1)/2 for e = min(threshold, n).
long long span_count(int n, int threshold);

enum class SpanRepMethod { boundary, pooling, hybrid };

struct SpanRepParams {
  Eigen::MatrixXd len_embed;  // threshold rows, one learned vector per length
  Eigen::MatrixXd w;          // |types| x rep_dim
  Eigen::VectorXd b;          // |types|
};

int span_rep_dim(SpanRepMethod method, int embed_dim, int len_embed_dim);

// Span vector layouts (single-token spans duplicate the token embedding as
// head and tail):
//   boundary: [head ; tail ; len]
//   pooling:  [max-pool(span) ; global ; len]
//   hybrid:   [head ; tail ; max-pool(span) ; global ; len]
// pool_argmax, when given, receives the 0-based token column winning each
// pooled component (left empty for the boundary method).
Eigen::VectorXd represent(const Span& span, const EmbeddingMatrix& embeddings,
                          SpanRepMethod method, const SpanRepParams& p,
                          Eigen::VectorXi* pool_argmax = nullptr);

struct SpanPrediction {
  Span span;
  Eigen::VectorXd probs;  // over the type set, sums to 1
  int argmax_type = 0;    // lowest index on ties
  double argmax_prob = 0;
};

SpanPrediction classify(const Span& span, const Eigen::Ref<const Eigen::VectorXd>& rep,
                        const SpanRepParams& p);

// Mean cross-entropy over span instances; gold type is the None id for
// negatives. Zero probabilities are clamped at 1e-12 with a warning.
double span_loss(const std::vector<SpanPrediction>& predictions,
                 const std::vector<int>& gold_types);

// Uniform sample without replacement of min(|candidates - gold|, cap)
// non-gold spans, deterministic per seed.
std::vector<Span> sample_negatives(const std::vector<Span>& all_spans,
                                   const std::vector<Entity>& gold_entities,
                                   int cap, std::uint64_t seed);

// Drop None-argmax predictions, rank the rest by (probability desc, start
// asc, length asc), and greedily keep spans that overlap nothing kept.
std::vector<Entity> heuristic_decode(const std::vector<SpanPrediction>& predictions,
                                     const TypeSet& types);

}  // namespace blner
