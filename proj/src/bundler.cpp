#include "blner/bundler.hpp"

#include <algorithm>
#include <cmath>

#include "blner/corpus.hpp"
#include "blner/evaluator.hpp"

namespace blner {

double bl_loss(double seq_loss, double span_loss, double alpha) {
  if (!(alpha >= 0 && alpha <= 1)) fail(ErrorKind::config, "alpha must lie in [0, 1]");
  if (!std::isfinite(seq_loss) || !std::isfinite(span_loss))
    fail(ErrorKind::numeric, "non-finite loss component");
  return alpha * seq_loss + (1 - alpha) * span_loss;
}

std::vector<std::vector<Span>> draw_negatives(const Model& model,
                                              std::span<const Sentence> batch,
                                              Rng& rng) {
  std::vector<std::vector<Span>> negatives;
  negatives.reserve(batch.size());
  for (const Sentence& sentence : batch) {
    const auto all = enumerate_spans(sentence.size(), model.hp.span_threshold);
    negatives.push_back(
        sample_negatives(all, sentence.gold, model.hp.negative_cap, rng.next()));
  }
  return negatives;
}

namespace {

struct SentencePass {
  EncodeCache cache;
  EmbeddingMatrix embeddings;
  // sequence head
  std::vector<int> gold_labels;
  Eigen::MatrixXd em;     // n x |labels|
  Eigen::MatrixXd probs;  // softmax tagging only
  double seq_sum = 0;     // token-summed cross-entropy, or sentence NLL
  // span head
  std::vector<Span> spans;  // gold spans under the threshold, then negatives
  std::vector<int> gold_types;
  std::vector<Eigen::VectorXd> reps;
  std::vector<Eigen::VectorXi> pool_argmax;
  std::vector<SpanPrediction> preds;
  double span_sum = 0;
};

SentencePass forward_sentence(const Model& model, const Sentence& sentence,
                              const std::vector<Span>* negatives, RunMode mode) {
  SentencePass pass;
  pass.embeddings = encode(sentence, model.encoder, &pass.cache);

  if (mode_uses_seq_head(mode)) {
    pass.gold_labels = bio_encode(sentence, model.scheme);
    pass.em = emissions(pass.embeddings, model.emission);
    if (model.hp.tagging == TaggingMode::softmax) {
      pass.probs.resize(pass.em.rows(), pass.em.cols());
      for (Eigen::Index i = 0; i < pass.em.rows(); ++i)
        pass.probs.row(i) = softmax(pass.em.row(i).transpose()).transpose();
      pass.seq_sum = softmax_loss(pass.probs, pass.gold_labels) *
                     static_cast<double>(sentence.size());
    } else {
      pass.seq_sum = crf_log_partition(pass.em, model.crf.a) -
                     crf_path_score(pass.em, model.crf.a, pass.gold_labels);
    }
  }

  if (mode_uses_span_head(mode)) {
    for (const Entity& e : sentence.gold) {
      if (e.length() > model.hp.span_threshold) continue;
      const int type = model.types.id_of(e.etype);
      if (type < 0 || type == model.types.none_id())
        fail(ErrorKind::schema, "entity type '" + e.etype + "' not in the type set");
      pass.spans.push_back({e.start, e.end});
      pass.gold_types.push_back(type);
    }
    if (negatives)
      for (const Span& s : *negatives) {
        pass.spans.push_back(s);
        pass.gold_types.push_back(model.types.none_id());
      }
    pass.reps.reserve(pass.spans.size());
    pass.pool_argmax.resize(pass.spans.size());
    for (std::size_t i = 0; i < pass.spans.size(); ++i) {
      pass.reps.push_back(represent(pass.spans[i], pass.embeddings,
                                    model.hp.representation, model.span,
                                    &pass.pool_argmax[i]));
      pass.preds.push_back(classify(pass.spans[i], pass.reps.back(), model.span));
    }
    if (!pass.preds.empty())
      pass.span_sum = span_loss(pass.preds, pass.gold_types) *
                      static_cast<double>(pass.preds.size());
  }

  return pass;
}

void backward_sentence(const Model& model, SentencePass& pass, double scale_seq,
                       double scale_span, Gradients& grads) {
  const int d = model.encoder.cfg.dim;
  const int n = static_cast<int>(pass.embeddings.count());
  Eigen::MatrixXd d_tokens = Eigen::MatrixXd::Zero(d, n);
  Eigen::VectorXd d_global = Eigen::VectorXd::Zero(d);

  if (scale_seq != 0) {
    Eigen::MatrixXd d_em = Eigen::MatrixXd::Zero(pass.em.rows(), pass.em.cols());
    if (model.hp.tagging == TaggingMode::softmax) {
      d_em = scale_seq * pass.probs;
      for (Eigen::Index i = 0; i < d_em.rows(); ++i)
        d_em(i, pass.gold_labels[i]) -= scale_seq;
    } else {
      crf_nll_backward(pass.em, model.crf.a, pass.gold_labels, scale_seq, d_em,
                       grads.crf.a);
    }
    grads.emission.w += d_em.transpose() * pass.embeddings.tokens.transpose();
    grads.emission.b += d_em.colwise().sum().transpose();
    d_tokens += model.emission.w.transpose() * d_em.transpose();
  }

  if (scale_span != 0) {
    const int dl = model.hp.len_embed_dim;
    for (std::size_t i = 0; i < pass.spans.size(); ++i) {
      const Span& span = pass.spans[i];
      Eigen::VectorXd d_logits = scale_span * pass.preds[i].probs;
      d_logits[pass.gold_types[i]] -= scale_span;
      grads.span.w += d_logits * pass.reps[i].transpose();
      grads.span.b += d_logits;
      const Eigen::VectorXd d_rep = model.span.w.transpose() * d_logits;

      auto scatter_pool = [&](int offset) {
        const Eigen::VectorXi& argmax = pass.pool_argmax[i];
        for (int r = 0; r < d; ++r) d_tokens(r, argmax[r]) += d_rep[offset + r];
      };
      switch (model.hp.representation) {
        case SpanRepMethod::boundary:
          d_tokens.col(span.start - 1) += d_rep.head(d);
          d_tokens.col(span.end - 1) += d_rep.segment(d, d);
          break;
        case SpanRepMethod::pooling:
          scatter_pool(0);
          d_global += d_rep.segment(d, d);
          break;
        case SpanRepMethod::hybrid:
          d_tokens.col(span.start - 1) += d_rep.head(d);
          d_tokens.col(span.end - 1) += d_rep.segment(d, d);
          scatter_pool(2 * d);
          d_global += d_rep.segment(3 * d, d);
          break;
      }
      grads.span.len_embed.row(span.length() - 1) += d_rep.tail(dl).transpose();
    }
  }

  encode_backward(model.encoder, pass.cache, d_tokens, d_global, grads.encoder);
}

struct BatchScales {
  double seq = 0;
  double span = 0;
};

LossBreakdown summarize(const Model& model, const std::vector<SentencePass>& passes,
                        std::span<const Sentence> batch, RunMode mode,
                        BatchScales* scales) {
  LossBreakdown breakdown;
  double seq_sum = 0, span_sum = 0;
  for (std::size_t i = 0; i < passes.size(); ++i) {
    breakdown.tokens += batch[i].size();
    breakdown.span_instances += static_cast<long>(passes[i].spans.size());
    seq_sum += passes[i].seq_sum;
    span_sum += passes[i].span_sum;
  }
  if (mode_uses_seq_head(mode))
    breakdown.seq = seq_sum / static_cast<double>(breakdown.tokens);
  if (mode_uses_span_head(mode) && breakdown.span_instances > 0)
    breakdown.span = span_sum / static_cast<double>(breakdown.span_instances);

  switch (mode) {
    case RunMode::seq: breakdown.combined = breakdown.seq; break;
    case RunMode::span: breakdown.combined = breakdown.span; break;
    case RunMode::bl_seq:
    case RunMode::bl_span:
      breakdown.combined = bl_loss(breakdown.seq, breakdown.span, model.hp.alpha);
      break;
  }

  if (scales) {
    const double alpha = is_bundled(mode) ? model.hp.alpha
                         : mode == RunMode::seq ? 1.0
                                                : 0.0;
    if (mode_uses_seq_head(mode))
      scales->seq = alpha / static_cast<double>(breakdown.tokens);
    if (mode_uses_span_head(mode) && breakdown.span_instances > 0)
      scales->span = (1 - alpha) / static_cast<double>(breakdown.span_instances);
  }
  return breakdown;
}

std::vector<SentencePass> forward_batch(const Model& model,
                                        std::span<const Sentence> batch,
                                        const std::vector<std::vector<Span>>& negatives,
                                        RunMode mode) {
  if (batch.empty()) fail(ErrorKind::input, "empty batch");
  if (mode_uses_span_head(mode) && negatives.size() != batch.size())
    fail(ErrorKind::input, "one negative list per batch sentence required");
  std::vector<SentencePass> passes;
  passes.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i)
    passes.push_back(forward_sentence(
        model, batch[i], mode_uses_span_head(mode) ? &negatives[i] : nullptr, mode));
  return passes;
}

}  // namespace

LossBreakdown batch_loss(const Model& model, std::span<const Sentence> batch,
                         const std::vector<std::vector<Span>>& negatives,
                         RunMode mode) {
  const auto passes = forward_batch(model, batch, negatives, mode);
  return summarize(model, passes, batch, mode, nullptr);
}

LossBreakdown batch_loss_backward(const Model& model, std::span<const Sentence> batch,
                                  const std::vector<std::vector<Span>>& negatives,
                                  RunMode mode, Gradients& grads) {
  auto passes = forward_batch(model, batch, negatives, mode);
  BatchScales scales;
  const LossBreakdown breakdown = summarize(model, passes, batch, mode, &scales);
  for (SentencePass& pass : passes)
    backward_sentence(model, pass, scales.seq, scales.span, grads);
  return breakdown;
}

namespace {

struct AdamW {
  double lr_base;
  double weight_decay;
  long total_steps;
  long warmup_steps;
  long step = 0;
  Eigen::VectorXd m, v;
  static constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

  AdamW(double lr, double wd, long total, double warmup_ratio, Eigen::Index size)
      : lr_base(lr),
        weight_decay(wd),
        total_steps(total),
        warmup_steps(static_cast<long>(warmup_ratio * static_cast<double>(total))),
        m(Eigen::VectorXd::Zero(size)),
        v(Eigen::VectorXd::Zero(size)) {}

  double schedule() const {
    if (warmup_steps > 0 && step <= warmup_steps)
      return lr_base * static_cast<double>(step) / static_cast<double>(warmup_steps);
    const long left = total_steps - step;
    const long span = std::max<long>(1, total_steps - warmup_steps);
    return lr_base * static_cast<double>(std::max<long>(0, left)) /
           static_cast<double>(span);
  }

  void update(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    ++step;
    const double lr = schedule();
    m = kBeta1 * m + (1 - kBeta1) * grad;
    v = kBeta2 * v + (1 - kBeta2) * grad.cwiseProduct(grad);
    const double c1 = 1 - std::pow(kBeta1, static_cast<double>(step));
    const double c2 = 1 - std::pow(kBeta2, static_cast<double>(step));
    params.array() -= lr * ((m.array() / c1) / ((v.array() / c2).sqrt() + kEps) +
                            weight_decay * params.array());
  }
};

}  // namespace

TrainResult train(const Dataset& train_data, const Dataset& dev_data,
                  const Hyperparams& hp, RunMode mode) {
  validate_dataset(train_data);
  validate_dataset(dev_data);

  TrainResult result;
  result.model = Model::init(train_data, hp, mode);
  Model& model = result.model;
  Model best = model;
  double best_f1 = -1;
  int best_epoch = 0;

  const long n = static_cast<long>(train_data.sentences.size());
  const long steps_per_epoch = (n + hp.batch_size - 1) / hp.batch_size;
  const long total_steps = static_cast<long>(hp.epochs) * steps_per_epoch;

  auto refs = param_refs(model, active_groups(mode));
  Eigen::VectorXd flat = flatten(refs);
  AdamW optimizer(hp.learning_rate, hp.weight_decay, total_steps, hp.warmup_ratio,
                  flat.size());
  Gradients grads = Gradients::zeros_like(model);
  auto grad_refs = param_refs(grads, active_groups(mode));

  Rng rng(hp.seed);
  std::vector<int> order(train_data.sentences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_combined = 0, epoch_seq = 0, epoch_span = 0;

    for (long b = 0; b < steps_per_epoch; ++b) {
      const long lo = b * hp.batch_size;
      const long hi = std::min<long>(n, lo + hp.batch_size);
      std::vector<Sentence> batch;
      batch.reserve(hi - lo);
      for (long i = lo; i < hi; ++i)
        batch.push_back(train_data.sentences[order[i]]);

      const auto negatives = draw_negatives(model, batch, rng);
      grads.set_zero();
      const LossBreakdown loss =
          batch_loss_backward(model, batch, negatives, mode, grads);
      if (!std::isfinite(loss.combined))
        fail(ErrorKind::numeric,
             "non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                 std::to_string(b) + " (seq=" + std::to_string(loss.seq) +
                 ", span=" + std::to_string(loss.span) + ")");

      const double weight = static_cast<double>(hi - lo) / static_cast<double>(n);
      epoch_combined += loss.combined * weight;
      epoch_seq += loss.seq * weight;
      epoch_span += loss.span * weight;

      flat = flatten(refs);
      optimizer.update(flat, flatten(grad_refs));
      assign_flat(refs, flat);
    }

    const auto dev_pred = predict(model, dev_data.sentences, mode);
    const ScoreReport dev = score(dev_pred, dev_data);

    EpochStat stat;
    stat.epoch = epoch;
    stat.train_loss = epoch_combined;
    stat.seq_loss = epoch_seq;
    stat.span_loss = epoch_span;
    stat.dev_precision = dev.precision();
    stat.dev_recall = dev.recall();
    stat.dev_f1 = dev.f1();
    if (stat.dev_f1 > best_f1) {
      best_f1 = stat.dev_f1;
      best_epoch = epoch;
      best = model;
      stat.kept = true;
    }
    result.log.push_back(stat);
  }

  if (hp.epochs == 0) {
    const auto dev_pred = predict(model, dev_data.sentences, mode);
    best_f1 = score(dev_pred, dev_data).f1();
    best = model;
  }

  result.model = best;
  result.best_epoch = best_epoch;
  result.best_dev_f1 = best_f1;
  return result;
}

std::vector<Entity> predict_sentence(const Model& model, const Sentence& sentence,
                                     RunMode mode) {
  const bool span_head = mode_emits_from_span_head(mode);
  if (span_head && !mode_uses_span_head(model.trained_mode))
    fail(ErrorKind::config, std::string("model trained in mode ") +
                                to_string(model.trained_mode) +
                                " has no span head for mode " + to_string(mode));
  if (!span_head && !mode_uses_seq_head(model.trained_mode))
    fail(ErrorKind::config, std::string("model trained in mode ") +
                                to_string(model.trained_mode) +
                                " has no sequence head for mode " + to_string(mode));

  const EmbeddingMatrix embeddings = encode(sentence, model.encoder, nullptr);
  std::vector<Entity> entities;
  if (span_head) {
    std::vector<SpanPrediction> preds;
    for (const Span& span :
         enumerate_spans(sentence.size(), model.hp.span_threshold)) {
      const Eigen::VectorXd rep =
          represent(span, embeddings, model.hp.representation, model.span);
      preds.push_back(classify(span, rep, model.span));
    }
    entities = heuristic_decode(preds, model.types);
  } else {
    std::vector<int> labels;
    if (model.hp.tagging == TaggingMode::crf) {
      labels = viterbi(embeddings, model.emission, model.crf);
    } else {
      const Eigen::MatrixXd em = emissions(embeddings, model.emission);
      labels.resize(em.rows());
      for (Eigen::Index i = 0; i < em.rows(); ++i)
        labels[i] = argmax_lowest(em.row(i).transpose());
    }
    entities = combine_labels(labels, model.scheme);
  }
  attach_surfaces(sentence, entities);
  return entities;
}

std::vector<std::vector<Entity>> predict(const Model& model,
                                         const std::vector<Sentence>& sentences,
                                         RunMode mode) {
  std::vector<std::vector<Entity>> out;
  out.reserve(sentences.size());
  for (const Sentence& s : sentences) out.push_back(predict_sentence(model, s, mode));
  return out;
}

EquivalenceReport bundle_gradient_equivalence(const Hyperparams& hp,
                                              const std::vector<Sentence>& batch,
                                              double alpha) {
  if (batch.empty()) fail(ErrorKind::input, "equivalence check needs a batch");
  if (!(alpha >= 0 && alpha <= 1)) fail(ErrorKind::config, "alpha must lie in [0, 1]");

  Dataset train;
  train.split = Split::train;
  train.sentences = batch;
  for (const Sentence& s : batch)
    for (const Entity& e : s.gold)
      if (std::find(train.type_names.begin(), train.type_names.end(), e.etype) ==
          train.type_names.end())
        train.type_names.push_back(e.etype);

  Hyperparams hp2 = hp;
  hp2.alpha = alpha;
  Model model = Model::init(train, hp2, RunMode::bl_seq);

  Rng rng(hp2.seed);
  const auto negatives = draw_negatives(model, batch, rng);

  Gradients g_seq = Gradients::zeros_like(model);
  Gradients g_span = Gradients::zeros_like(model);
  Gradients g_bl = Gradients::zeros_like(model);
  batch_loss_backward(model, batch, negatives, RunMode::seq, g_seq);
  batch_loss_backward(model, batch, negatives, RunMode::span, g_span);
  batch_loss_backward(model, batch, negatives, RunMode::bl_seq, g_bl);

  const Eigen::VectorXd f_seq = flatten(param_refs(g_seq, kAllGroups));
  const Eigen::VectorXd f_span = flatten(param_refs(g_span, kAllGroups));
  const Eigen::VectorXd f_bl = flatten(param_refs(g_bl, kAllGroups));

  EquivalenceReport report;
  report.alpha = alpha;
  report.max_deviation =
      (f_bl - (alpha * f_seq + (1 - alpha) * f_span)).cwiseAbs().maxCoeff();

  double inactive = flatten(param_refs(g_seq, kSpanGroup)).cwiseAbs().maxCoeff();
  inactive = std::max(inactive,
                      flatten(param_refs(g_span, kSeqGroup)).cwiseAbs().maxCoeff());
  if (alpha == 0)
    inactive = std::max(inactive,
                        flatten(param_refs(g_bl, kSeqGroup)).cwiseAbs().maxCoeff());
  if (alpha == 1)
    inactive = std::max(inactive,
                        flatten(param_refs(g_bl, kSpanGroup)).cwiseAbs().maxCoeff());
  report.max_inactive_grad = inactive;
  return report;
}

}  // namespace blner
