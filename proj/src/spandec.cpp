#include "blner/spandec.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "blner/numeric.hpp"

namespace blner {

std::vector<Span> enumerate_spans(int n, int threshold) {
  if (n < 1) fail(ErrorKind::input, "enumerate_spans needs n >= 1");
  if (threshold < 1) fail(ErrorKind::input, "enumerate_spans needs threshold >= 1");
  std::vector<Span> spans;
  spans.reserve(static_cast<std::size_t>(span_count(n, threshold)));
  for (int start = 1; start <= n; ++start)
    for (int end = start; end <= std::min(n, start + threshold - 1); ++end)
      spans.push_back({start, end});
  return spans;
}

long long span_count(int n, int threshold) {
  if (n < 1) fail(ErrorKind::input, "span_count needs n >= 1");
  if (threshold < 1) fail(ErrorKind::input, "span_count needs threshold >= 1");
  const long long e = std::min(threshold, n);
  return e * (2LL * n - e + 1) / 2;
}

int span_rep_dim(SpanRepMethod method, int embed_dim, int len_embed_dim) {
  switch (method) {
    case SpanRepMethod::boundary: return 2 * embed_dim + len_embed_dim;
    case SpanRepMethod::pooling: return 2 * embed_dim + len_embed_dim;
    case SpanRepMethod::hybrid: return 4 * embed_dim + len_embed_dim;
  }
  fail(ErrorKind::input, "unknown representation method");
}

Eigen::VectorXd represent(const Span& span, const EmbeddingMatrix& embeddings,
                          SpanRepMethod method, const SpanRepParams& p,
                          Eigen::VectorXi* pool_argmax) {
  const int n = embeddings.count(), d = embeddings.dim();
  if (span.start < 1 || span.start > span.end || span.end > n)
    fail(ErrorKind::input, "span " + std::to_string(span.start) + ".." +
                               std::to_string(span.end) +
                               " outside a sentence of " + std::to_string(n) +
                               " tokens");
  if (span.length() > p.len_embed.rows())
    fail(ErrorKind::input, "span length " + std::to_string(span.length()) +
                               " exceeds the threshold " +
                               std::to_string(p.len_embed.rows()));

  const Eigen::VectorXd len = p.len_embed.row(span.length() - 1).transpose();
  const int dl = static_cast<int>(len.size());
  if (pool_argmax) pool_argmax->resize(0);

  auto pool = [&](Eigen::Ref<Eigen::VectorXd> out) {
    if (pool_argmax) pool_argmax->resize(d);
    for (int r = 0; r < d; ++r) {
      int best = span.start - 1;
      for (int c = span.start; c < span.end; ++c)
        if (embeddings.tokens(r, c) > embeddings.tokens(r, best)) best = c;
      if (pool_argmax) (*pool_argmax)[r] = best;
      out[r] = embeddings.tokens(r, best);
    }
  };

  switch (method) {
    case SpanRepMethod::boundary: {
      Eigen::VectorXd rep(2 * d + dl);
      rep.head(d) = embeddings.tokens.col(span.start - 1);
      rep.segment(d, d) = embeddings.tokens.col(span.end - 1);
      rep.tail(dl) = len;
      return rep;
    }
    case SpanRepMethod::pooling: {
      Eigen::VectorXd rep(2 * d + dl);
      pool(rep.head(d));
      rep.segment(d, d) = embeddings.global;
      rep.tail(dl) = len;
      return rep;
    }
    case SpanRepMethod::hybrid: {
      Eigen::VectorXd rep(4 * d + dl);
      rep.head(d) = embeddings.tokens.col(span.start - 1);
      rep.segment(d, d) = embeddings.tokens.col(span.end - 1);
      pool(rep.segment(2 * d, d));
      rep.segment(3 * d, d) = embeddings.global;
      rep.tail(dl) = len;
      return rep;
    }
  }
  fail(ErrorKind::input, "unknown representation method");
}

SpanPrediction classify(const Span& span, const Eigen::Ref<const Eigen::VectorXd>& rep,
                        const SpanRepParams& p) {
  if (p.w.cols() != rep.size() || p.b.size() != p.w.rows())
    fail(ErrorKind::shape, "span classifier shapes disagree with the representation");
  SpanPrediction pred;
  pred.span = span;
  pred.probs = softmax(p.w * rep + p.b);
  pred.argmax_type = argmax_lowest(pred.probs);
  pred.argmax_prob = pred.probs[pred.argmax_type];
  return pred;
}

double span_loss(const std::vector<SpanPrediction>& predictions,
                 const std::vector<int>& gold_types) {
  if (predictions.size() != gold_types.size())
    fail(ErrorKind::shape, "one gold type per span prediction required");
  if (predictions.empty()) fail(ErrorKind::input, "span_loss over zero instances");
  double total = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int g = gold_types[i];
    if (g < 0 || g >= predictions[i].probs.size())
      fail(ErrorKind::schema, "gold type id " + std::to_string(g) +
                                  " outside the type set");
    double prob = predictions[i].probs[g];
    if (prob < 1e-12) {
      warn("span_loss: probability " + std::to_string(prob) + " clamped at 1e-12");
      prob = 1e-12;
    }
    total -= std::log(prob);
  }
  return total / static_cast<double>(predictions.size());
}

std::vector<Span> sample_negatives(const std::vector<Span>& all_spans,
                                   const std::vector<Entity>& gold_entities,
                                   int cap, std::uint64_t seed) {
  if (cap < 0) fail(ErrorKind::input, "negative cap must be >= 0");
  std::set<std::pair<int, int>> gold;
  for (const Entity& e : gold_entities) gold.emplace(e.start, e.end);

  std::vector<Span> pool;
  pool.reserve(all_spans.size());
  for (const Span& s : all_spans)
    if (!gold.count({s.start, s.end})) pool.push_back(s);

  const std::size_t k = std::min<std::size_t>(pool.size(), cap);
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i)
    std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
  pool.resize(k);
  return pool;
}

std::vector<Entity> heuristic_decode(const std::vector<SpanPrediction>& predictions,
                                     const TypeSet& types) {
  std::vector<const SpanPrediction*> ranked;
  for (const SpanPrediction& p : predictions)
    if (p.argmax_type != types.none_id()) ranked.push_back(&p);
  std::sort(ranked.begin(), ranked.end(),
            [](const SpanPrediction* a, const SpanPrediction* b) {
              if (a->argmax_prob != b->argmax_prob)
                return a->argmax_prob > b->argmax_prob;
              if (a->span.start != b->span.start) return a->span.start < b->span.start;
              return a->span.length() < b->span.length();
            });

  std::vector<Entity> kept;
  for (const SpanPrediction* p : ranked) {
    const bool clear = std::none_of(kept.begin(), kept.end(), [&](const Entity& e) {
      return spans_overlap(e.start, e.end, p->span.start, p->span.end);
    });
    if (clear)
      kept.push_back({p->span.start, p->span.end, types.name(p->argmax_type), ""});
  }
  std::sort(kept.begin(), kept.end(),
            [](const Entity& a, const Entity& b) { return a.start < b.start; });
  return kept;
}

}  // namespace blner
