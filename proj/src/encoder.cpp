#include "blner/encoder.hpp"

#include <algorithm>
#include <cmath>

namespace blner {

void SubtokenAlignment::validate(int subtoken_count) const {
  if (ranges.empty()) fail(ErrorKind::input, "alignment covers no tokens");
  int cursor = 0;
  for (const auto& [first, last] : ranges) {
    if (first != cursor || last <= first)
      fail(ErrorKind::input, "alignment ranges must be non-empty, ordered, and "
                             "contiguous");
    cursor = last;
  }
  if (cursor != subtoken_count)
    fail(ErrorKind::input, "alignment covers " + std::to_string(cursor) + " of " +
                               std::to_string(subtoken_count) + " subtokens");
}

std::vector<std::string> subtokenize(const std::string& text, int chunk_len) {
  if (chunk_len < 1) fail(ErrorKind::input, "chunk length must be >= 1");
  if (text.empty()) fail(ErrorKind::input, "cannot subtokenize an empty token");
  std::vector<std::string> chunks;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = i;
    for (int cp = 0; cp < chunk_len && j < text.size(); ++cp) {
      const unsigned char lead = static_cast<unsigned char>(text[j]);
      std::size_t width = lead < 0x80 ? 1 : lead < 0xE0 ? 2 : lead < 0xF0 ? 3 : 4;
      if (lead >= 0x80 && lead < 0xC0) width = 1;  // stray continuation byte
      j = std::min(text.size(), j + width);
    }
    chunks.push_back(text.substr(i, j - i));
    i = j;
  }
  return chunks;
}

Eigen::MatrixXd subtoken_pool(const Eigen::Ref<const Eigen::MatrixXd>& subtoken_vectors,
                              const SubtokenAlignment& alignment) {
  alignment.validate(static_cast<int>(subtoken_vectors.cols()));
  Eigen::MatrixXd pooled(subtoken_vectors.rows(), alignment.token_count());
  for (int t = 0; t < alignment.token_count(); ++t) {
    const auto [first, last] = alignment.ranges[t];
    pooled.col(t) =
        subtoken_vectors.middleCols(first, last - first).rowwise().maxCoeff();
  }
  return pooled;
}

SubtokenVocab SubtokenVocab::from_words(std::vector<std::string> words,
                                        int chunk_len) {
  SubtokenVocab vocab;
  vocab.chunk_len_ = chunk_len;
  vocab.words_ = {"<unk>", "<global>"};
  for (int i = 0; i < static_cast<int>(vocab.words_.size()); ++i)
    vocab.ids_[vocab.words_[i]] = i;
  for (const std::string& word : words)
    for (std::string& chunk : subtokenize(word, chunk_len))
      if (vocab.ids_.emplace(chunk, vocab.size()).second)
        vocab.words_.push_back(std::move(chunk));
  return vocab;
}

SubtokenVocab SubtokenVocab::build(const Dataset& train, int chunk_len) {
  std::vector<std::string> words;
  for (const Sentence& s : train.sentences)
    for (const Token& t : s.tokens) words.push_back(t.text);
  return from_words(std::move(words), chunk_len);
}

int SubtokenVocab::id_of(const std::string& word) const {
  const auto it = ids_.find(word);
  return it == ids_.end() ? kUnk : it->second;
}

EmbeddingMatrix encode(const Sentence& sentence, const Encoder& encoder,
                       EncodeCache* cache) {
  if (sentence.tokens.empty()) fail(ErrorKind::input, "cannot encode an empty sentence");
  const int n = sentence.size();
  const int d = encoder.cfg.dim;
  const EncoderParams& p = encoder.params;
  if (p.embed.cols() != d || p.mix_w.rows() != d || p.mix_w.cols() != 2 * d ||
      p.mix_b.size() != d || p.global_w.rows() != d || p.global_w.cols() != d ||
      p.embed.rows() != encoder.vocab.size())
    fail(ErrorKind::shape, "encoder parameter shapes disagree with the config");

  EncodeCache local;
  EncodeCache& c = cache ? *cache : local;
  c.subtoken_ids.clear();
  c.alignment.ranges.clear();
  for (const Token& t : sentence.tokens) {
    const int first = static_cast<int>(c.subtoken_ids.size());
    for (const std::string& chunk : subtokenize(t.text, encoder.vocab.chunk_len()))
      c.subtoken_ids.push_back(encoder.vocab.id_of(chunk));
    c.alignment.ranges.emplace_back(first, static_cast<int>(c.subtoken_ids.size()));
  }
  const int n_sub = static_cast<int>(c.subtoken_ids.size());

  c.subtoken_vectors.resize(d, n_sub);
  for (int k = 0; k < n_sub; ++k)
    c.subtoken_vectors.col(k) = p.embed.row(c.subtoken_ids[k]).transpose();

  c.pooled.resize(d, n);
  c.pool_argmax.resize(d, n);
  for (int t = 0; t < n; ++t) {
    const auto [first, last] = c.alignment.ranges[t];
    for (int r = 0; r < d; ++r) {
      int best = first;
      for (int k = first + 1; k < last; ++k)
        if (c.subtoken_vectors(r, k) > c.subtoken_vectors(r, best)) best = k;
      c.pool_argmax(r, t) = best;
      c.pooled(r, t) = c.subtoken_vectors(r, best);
    }
  }

  const int w = encoder.cfg.window_radius;
  c.window_avg = Eigen::MatrixXd::Zero(d, n);
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - w), hi = std::min(n - 1, i + w);
    const int neighbours = hi - lo + 1 - 1;  // window minus self
    if (neighbours == 0) continue;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
    for (int j = lo; j <= hi; ++j)
      if (j != i) sum += c.pooled.col(j);
    c.window_avg.col(i) = sum / neighbours;
  }

  c.mix_input.resize(2 * d, n);
  c.mix_input.topRows(d) = c.window_avg;
  c.mix_input.bottomRows(d) = c.pooled;
  c.mixed = ((p.mix_w * c.mix_input).colwise() + p.mix_b).array().tanh();

  c.mean = c.mixed.rowwise().mean();
  c.global =
      (p.global_w * c.mean + p.embed.row(SubtokenVocab::kGlobalSlot).transpose())
          .array()
          .tanh();

  return {c.global, c.mixed};
}

void encode_backward(const Encoder& encoder, const EncodeCache& cache,
                     const Eigen::Ref<const Eigen::MatrixXd>& d_tokens,
                     const Eigen::Ref<const Eigen::VectorXd>& d_global,
                     EncoderParams& grad) {
  const EncoderParams& p = encoder.params;
  const int d = encoder.cfg.dim;
  const int n = static_cast<int>(cache.mixed.cols());
  const int w = encoder.cfg.window_radius;
  if (d_tokens.rows() != d || d_tokens.cols() != n || d_global.size() != d)
    fail(ErrorKind::shape, "upstream gradient shapes disagree with the cache");

  const Eigen::VectorXd g_global =
      (d_global.array() * (1.0 - cache.global.array().square())).matrix();
  grad.global_w += g_global * cache.mean.transpose();
  grad.embed.row(SubtokenVocab::kGlobalSlot) += g_global.transpose();
  const Eigen::VectorXd d_mean = p.global_w.transpose() * g_global;

  Eigen::MatrixXd d_mixed = d_tokens;
  d_mixed.colwise() += (d_mean / n).eval();

  const Eigen::MatrixXd g_mix =
      (d_mixed.array() * (1.0 - cache.mixed.array().square())).matrix();
  grad.mix_w += g_mix * cache.mix_input.transpose();
  grad.mix_b += g_mix.rowwise().sum();
  const Eigen::MatrixXd d_mix_input = p.mix_w.transpose() * g_mix;

  Eigen::MatrixXd d_pooled = d_mix_input.bottomRows(d);
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - w), hi = std::min(n - 1, i + w);
    const int neighbours = hi - lo + 1 - 1;
    if (neighbours == 0) continue;
    const Eigen::VectorXd share = d_mix_input.col(i).head(d) / neighbours;
    for (int j = lo; j <= hi; ++j)
      if (j != i) d_pooled.col(j) += share;
  }

  Eigen::MatrixXd d_sub =
      Eigen::MatrixXd::Zero(d, static_cast<int>(cache.subtoken_vectors.cols()));
  for (int t = 0; t < n; ++t)
    for (int r = 0; r < d; ++r) d_sub(r, cache.pool_argmax(r, t)) += d_pooled(r, t);

  for (int k = 0; k < d_sub.cols(); ++k)
    grad.embed.row(cache.subtoken_ids[k]) += d_sub.col(k).transpose();
}

}  // namespace blner
