#pragma once

#include <Eigen/Dense>
#include <vector>

#include "blner/encoder.hpp"
#include "blner/types.hpp"

namespace blner {

struct EmissionParams {
  Eigen::MatrixXd w;  // |labels| x d
  Eigen::VectorXd b;  // |labels|
};

// Transition scores. Row 0 is the synthetic START state feeding position 1;
// row 1 + l holds transitions out of label l. No stop state.
struct CrfParams {
  Eigen::MatrixXd a;  // (|labels|+1) x |labels|

  bool empty() const { return a.size() == 0; }
};

// Per-token affine label scores, one row per token.
Eigen::MatrixXd emissions(const EmbeddingMatrix& embeddings, const EmissionParams& p);

// Row-wise stable softmax of the emissions; every row sums to 1.
Eigen::MatrixXd softmax_tag(const EmbeddingMatrix& embeddings, const EmissionParams& p);

// Mean cross-entropy of the gold labels under per-token distributions.
// Zero probabilities are clamped at 1e-12 with a warning.
double softmax_loss(const Eigen::Ref<const Eigen::MatrixXd>& distributions,
                    const std::vector<int>& gold_labels);

// Score-space primitives shared by the loss, the decoder, and the tests.
double crf_path_score(const Eigen::Ref<const Eigen::MatrixXd>& emission_scores,
                      const Eigen::Ref<const Eigen::MatrixXd>& transitions,
                      const std::vector<int>& path);
double crf_log_partition(const Eigen::Ref<const Eigen::MatrixXd>& emission_scores,
                         const Eigen::Ref<const Eigen::MatrixXd>& transitions);
std::vector<int> viterbi_scores(const Eigen::Ref<const Eigen::MatrixXd>& emission_scores,
                                const Eigen::Ref<const Eigen::MatrixXd>& transitions);

// Negative log-likelihood of the gold path: log-partition minus path score,
// with the partition computed by the forward algorithm in log space.
double crf_nll(const EmbeddingMatrix& embeddings, const EmissionParams& ep,
               const CrfParams& cp, const std::vector<int>& gold_labels);

// Max-score label path; ties break toward the lowest label index at every
// backpointer and at the final argmax.
std::vector<int> viterbi(const EmbeddingMatrix& embeddings, const EmissionParams& ep,
                         const CrfParams& cp);

// Adds scale * d(nll)/d(emissions) and scale * d(nll)/d(transitions) via
// forward-backward marginals. Returns the sentence NLL.
double crf_nll_backward(const Eigen::Ref<const Eigen::MatrixXd>& emission_scores,
                        const Eigen::Ref<const Eigen::MatrixXd>& transitions,
                        const std::vector<int>& gold_labels, double scale,
                        Eigen::MatrixXd& d_emissions, Eigen::MatrixXd& d_transitions);

// BIO label sequence -> entities. B-X opens, I-X extends an open X entity;
// stray I-X opens a new entity; any type switch closes the previous one.
// Surfaces are left empty (attach_surfaces fills them from a sentence).
std::vector<Entity> combine_labels(const std::vector<int>& labels,
                                   const LabelScheme& scheme);

}  // namespace blner
