#pragma once

#include <Eigen/Dense>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "blner/types.hpp"

namespace blner {

// Per-token contextual vectors (columns of `tokens`, one per sentence token)
// plus one global text vector occupying the reserved position 0.
struct EmbeddingMatrix {
  Eigen::VectorXd global;
  Eigen::MatrixXd tokens;  // dim x n, column i-1 holds token i

  int dim() const { return static_cast<int>(tokens.rows()); }
  int count() const { return static_cast<int>(tokens.cols()); }
};

// Contiguous [first, last) ranges into a subtoken list, one per token; the
// ranges partition the list in order.
struct SubtokenAlignment {
  std::vector<std::pair<int, int>> ranges;

  int token_count() const { return static_cast<int>(ranges.size()); }
  void validate(int subtoken_count) const;  // throws ErrorKind::input
};

// Fixed-width character chunks (UTF-8 code points, at most chunk_len each).
std::vector<std::string> subtokenize(const std::string& text, int chunk_len);

// Componentwise max over each token's aligned subtoken vectors.
// subtoken_vectors is dim x n_subtokens; result is dim x n_tokens.
Eigen::MatrixXd subtoken_pool(const Eigen::Ref<const Eigen::MatrixXd>& subtoken_vectors,
                              const SubtokenAlignment& alignment);

// Subtoken string table. Index 0 is the UNK fallback, index 1 the reserved
// global-slot row; the remainder follows first appearance in the build corpus.
class SubtokenVocab {
 public:
  SubtokenVocab() = default;
  static SubtokenVocab build(const Dataset& train, int chunk_len);
  static SubtokenVocab from_words(std::vector<std::string> words, int chunk_len);

  static constexpr int kUnk = 0;
  static constexpr int kGlobalSlot = 1;

  int id_of(const std::string& word) const;  // kUnk when absent
  int size() const { return static_cast<int>(words_.size()); }
  int chunk_len() const { return chunk_len_; }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
  int chunk_len_ = 6;
};

struct EncoderConfig {
  int dim = 64;            // embedding dimension d
  int window_radius = 2;   // neighbour window for context mixing
};

struct EncoderParams {
  Eigen::MatrixXd embed;     // vocab x d; row kGlobalSlot doubles as the global bias
  Eigen::MatrixXd mix_w;     // d x 2d, input [window-average ; self]
  Eigen::VectorXd mix_b;     // d
  Eigen::MatrixXd global_w;  // d x d, applied to the mean token vector
};

struct Encoder {
  EncoderConfig cfg;
  SubtokenVocab vocab;
  EncoderParams params;
};

// Intermediate activations kept for the backward pass.
struct EncodeCache {
  std::vector<int> subtoken_ids;
  SubtokenAlignment alignment;
  Eigen::MatrixXd subtoken_vectors;  // d x n_sub
  Eigen::MatrixXd pooled;            // d x n
  Eigen::MatrixXi pool_argmax;       // d x n, subtoken column per component
  Eigen::MatrixXd window_avg;        // d x n
  Eigen::MatrixXd mix_input;         // 2d x n
  Eigen::MatrixXd mixed;             // d x n (the token vectors)
  Eigen::VectorXd mean;              // d
  Eigen::VectorXd global;            // d
};

// Reference encoder: chunk subtokenization, embedding lookup with UNK
// fallback, max-pooling to token vectors, one tanh context-mixing layer over
// [window-averaged neighbours ; self], and a tanh global head over the mean
// token vector. Deterministic given params.
EmbeddingMatrix encode(const Sentence& sentence, const Encoder& encoder,
                       EncodeCache* cache = nullptr);

// Accumulates parameter gradients for upstream d(tokens), d(global).
void encode_backward(const Encoder& encoder, const EncodeCache& cache,
                     const Eigen::Ref<const Eigen::MatrixXd>& d_tokens,
                     const Eigen::Ref<const Eigen::VectorXd>& d_global,
                     EncoderParams& grad);

}  // namespace blner
