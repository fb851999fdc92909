#include "blner/seqdec.hpp"

#include <cmath>

#include "blner/numeric.hpp"

namespace blner {

namespace {

void check_labels(const std::vector<int>& labels, int label_count, int n) {
  if (static_cast<int>(labels.size()) != n)
    fail(ErrorKind::shape, "expected " + std::to_string(n) + " labels, got " +
                               std::to_string(labels.size()));
  for (int l : labels)
    if (l < 0 || l >= label_count)
      fail(ErrorKind::schema, "label id " + std::to_string(l) +
                                  " outside the 0.." +
                                  std::to_string(label_count - 1) + " alphabet");
}

void check_crf_shapes(const Eigen::Ref<const Eigen::MatrixXd>& emission_scores,
                      const Eigen::Ref<const Eigen::MatrixXd>& transitions) {
  if (emission_scores.rows() < 1) fail(ErrorKind::shape, "empty emission matrix");
  if (transitions.rows() != emission_scores.cols() + 1 ||
      transitions.cols() != emission_scores.cols())
    fail(ErrorKind::shape, "transition matrix must be (|labels|+1) x |labels|");
}

double clamped_log(double p, const char* what) {
  if (p < 1e-12) {
    warn(std::string(what) + ": probability " + std::to_string(p) +
         " clamped at 1e-12");
    p = 1e-12;
  }
  return std::log(p);
}

}  // namespace

Eigen::MatrixXd emissions(const EmbeddingMatrix& embeddings, const EmissionParams& p) {
  if (p.w.cols() != embeddings.dim() || p.b.size() != p.w.rows())
    fail(ErrorKind::shape, "emission parameters disagree with the embedding dim");
  return ((p.w * embeddings.tokens).colwise() + p.b).transpose();
}

Eigen::MatrixXd softmax_tag(const EmbeddingMatrix& embeddings,
                            const EmissionParams& p) {
  Eigen::MatrixXd scores = emissions(embeddings, p);
  for (Eigen::Index i = 0; i < scores.rows(); ++i)
    scores.row(i) = softmax(scores.row(i).transpose()).transpose();
  return scores;
}

double softmax_loss(const Eigen::Ref<const Eigen::MatrixXd>& distributions,
                    const std::vector<int>& gold_labels) {
  check_labels(gold_labels, static_cast<int>(distributions.cols()),
               static_cast<int>(distributions.rows()));
  double total = 0;
  for (Eigen::Index i = 0; i < distributions.rows(); ++i)
    total -= clamped_log(distributions(i, gold_labels[i]), "softmax_loss");
  return total / static_cast<double>(distributions.rows());
}

double crf_path_score(const Eigen::Ref<const Eigen::MatrixXd>& emission_scores,
                      const Eigen::Ref<const Eigen::MatrixXd>& transitions,
                      const std::vector<int>& path) {
  check_crf_shapes(emission_scores, transitions);
  check_labels(path, static_cast<int>(emission_scores.cols()),
               static_cast<int>(emission_scores.rows()));
  double score = 0;
  int prev_row = 0;  // synthetic START
  for (Eigen::Index i = 0; i < emission_scores.rows(); ++i) {
    score += emission_scores(i, path[i]) + transitions(prev_row, path[i]);
    prev_row = 1 + path[i];
  }
  return score;
}

double crf_log_partition(const Eigen::Ref<const Eigen::MatrixXd>& emission_scores,
                         const Eigen::Ref<const Eigen::MatrixXd>& transitions) {
  check_crf_shapes(emission_scores, transitions);
  const Eigen::Index n = emission_scores.rows(), L = emission_scores.cols();
  Eigen::VectorXd alpha =
      emission_scores.row(0).transpose() + transitions.row(0).transpose();
  for (Eigen::Index i = 1; i < n; ++i) {
    Eigen::VectorXd next(L);
    for (Eigen::Index l = 0; l < L; ++l)
      next[l] = emission_scores(i, l) +
                log_sum_exp(alpha + transitions.block(1, l, L, 1));
    alpha = next;
  }
  return log_sum_exp(alpha);
}

std::vector<int> viterbi_scores(const Eigen::Ref<const Eigen::MatrixXd>& emission_scores,
                                const Eigen::Ref<const Eigen::MatrixXd>& transitions) {
  check_crf_shapes(emission_scores, transitions);
  const Eigen::Index n = emission_scores.rows(), L = emission_scores.cols();
  Eigen::VectorXd best =
      emission_scores.row(0).transpose() + transitions.row(0).transpose();
  Eigen::MatrixXi back(n, L);
  for (Eigen::Index i = 1; i < n; ++i) {
    Eigen::VectorXd next(L);
    for (Eigen::Index l = 0; l < L; ++l) {
      int from = 0;
      double top = best[0] + transitions(1, l);
      for (Eigen::Index k = 1; k < L; ++k) {
        const double cand = best[k] + transitions(1 + k, l);
        if (cand > top) {
          top = cand;
          from = static_cast<int>(k);
        }
      }
      back(i, l) = from;
      next[l] = emission_scores(i, l) + top;
    }
    best = next;
  }
  std::vector<int> path(n);
  path[n - 1] = argmax_lowest(best);
  for (Eigen::Index i = n - 1; i > 0; --i) path[i - 1] = back(i, path[i]);
  return path;
}

double crf_nll(const EmbeddingMatrix& embeddings, const EmissionParams& ep,
               const CrfParams& cp, const std::vector<int>& gold_labels) {
  const Eigen::MatrixXd em = emissions(embeddings, ep);
  return crf_log_partition(em, cp.a) - crf_path_score(em, cp.a, gold_labels);
}

std::vector<int> viterbi(const EmbeddingMatrix& embeddings, const EmissionParams& ep,
                         const CrfParams& cp) {
  return viterbi_scores(emissions(embeddings, ep), cp.a);
}

double crf_nll_backward(const Eigen::Ref<const Eigen::MatrixXd>& emission_scores,
                        const Eigen::Ref<const Eigen::MatrixXd>& transitions,
                        const std::vector<int>& gold_labels, double scale,
                        Eigen::MatrixXd& d_emissions, Eigen::MatrixXd& d_transitions) {
  check_crf_shapes(emission_scores, transitions);
  check_labels(gold_labels, static_cast<int>(emission_scores.cols()),
               static_cast<int>(emission_scores.rows()));
  if (d_emissions.rows() != emission_scores.rows() ||
      d_emissions.cols() != emission_scores.cols() ||
      d_transitions.rows() != transitions.rows() ||
      d_transitions.cols() != transitions.cols())
    fail(ErrorKind::shape, "gradient accumulators disagree with the inputs");

  const Eigen::Index n = emission_scores.rows(), L = emission_scores.cols();

  Eigen::MatrixXd alpha(n, L);
  alpha.row(0) = emission_scores.row(0) + transitions.row(0);
  for (Eigen::Index i = 1; i < n; ++i)
    for (Eigen::Index l = 0; l < L; ++l)
      alpha(i, l) = emission_scores(i, l) +
                    log_sum_exp(alpha.row(i - 1).transpose() +
                                transitions.block(1, l, L, 1));

  Eigen::MatrixXd beta(n, L);
  beta.row(n - 1).setZero();
  for (Eigen::Index i = n - 2; i >= 0; --i)
    for (Eigen::Index k = 0; k < L; ++k)
      beta(i, k) = log_sum_exp(transitions.row(1 + k).transpose() +
                               emission_scores.row(i + 1).transpose() +
                               beta.row(i + 1).transpose());

  const double log_z = log_sum_exp(alpha.row(n - 1).transpose());

  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index l = 0; l < L; ++l) {
      const double marginal = std::exp(alpha(i, l) + beta(i, l) - log_z);
      d_emissions(i, l) += scale * (marginal - (gold_labels[i] == l ? 1.0 : 0.0));
    }

  for (Eigen::Index l = 0; l < L; ++l) {
    const double marginal = std::exp(alpha(0, l) + beta(0, l) - log_z);
    d_transitions(0, l) += scale * (marginal - (gold_labels[0] == l ? 1.0 : 0.0));
  }
  for (Eigen::Index i = 1; i < n; ++i)
    for (Eigen::Index k = 0; k < L; ++k)
      for (Eigen::Index l = 0; l < L; ++l) {
        const double marginal = std::exp(alpha(i - 1, k) + transitions(1 + k, l) +
                                         emission_scores(i, l) + beta(i, l) - log_z);
        const bool on_path = gold_labels[i - 1] == k && gold_labels[i] == l;
        d_transitions(1 + k, l) += scale * (marginal - (on_path ? 1.0 : 0.0));
      }

  return log_z - crf_path_score(emission_scores, transitions, gold_labels);
}

std::vector<Entity> combine_labels(const std::vector<int>& labels,
                                   const LabelScheme& scheme) {
  for (int l : labels)
    if (l < 0 || l >= scheme.size())
      fail(ErrorKind::schema, "label id " + std::to_string(l) +
                                  " outside the label scheme");
  std::vector<Entity> entities;
  int open_start = 0, open_type = -1;
  auto close = [&](int end) {
    if (open_type < 0) return;
    entities.push_back({open_start, end, scheme.type_name(open_type), ""});
    open_type = -1;
  };
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int pos = static_cast<int>(i) + 1;
    const int l = labels[i];
    if (l == LabelScheme::kOutside) {
      close(pos - 1);
    } else if (scheme.is_begin(l)) {
      close(pos - 1);
      open_start = pos;
      open_type = scheme.type_of(l);
    } else {
      const int type = scheme.type_of(l);
      if (type != open_type) {  // stray I-X opens a new entity
        close(pos - 1);
        open_start = pos;
        open_type = type;
      }
    }
  }
  close(static_cast<int>(labels.size()));
  return entities;
}

}  // namespace blner
