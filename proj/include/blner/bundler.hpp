#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "blner/model.hpp"
#include "blner/numeric.hpp"

namespace blner {

// alpha * seq + (1 - alpha) * span. alpha outside [0,1] is a config error.
double bl_loss(double seq_loss, double span_loss, double alpha);

struct LossBreakdown {
  double seq = 0;       // mean over batch tokens
  double span = 0;      // mean over batch span instances
  double combined = 0;  // the loss the active mode trains on
  long tokens = 0;
  long span_instances = 0;
};

// Training negatives for each sentence of a batch, drawn from the given
// generator so identical streams reproduce identical batches.
std::vector<std::vector<Span>> draw_negatives(const Model& model,
                                              std::span<const Sentence> batch,
                                              Rng& rng);

LossBreakdown batch_loss(const Model& model, std::span<const Sentence> batch,
                         const std::vector<std::vector<Span>>& negatives,
                         RunMode mode);

// Forward plus hand-derived backward through both heads and the shared
// encoder; gradients of the active mode's loss accumulate into grads.
LossBreakdown batch_loss_backward(const Model& model, std::span<const Sentence> batch,
                                  const std::vector<std::vector<Span>>& negatives,
                                  RunMode mode, Gradients& grads);

struct EpochStat {
  int epoch = 0;
  double train_loss = 0;
  double seq_loss = 0;
  double span_loss = 0;
  double dev_precision = 0;
  double dev_recall = 0;
  double dev_f1 = 0;
  bool kept = false;  // became the best checkpoint so far
};

struct TrainResult {
  Model model;  // best dev-F1 checkpoint
  std::vector<EpochStat> log;
  int best_epoch = 0;
  double best_dev_f1 = 0;
};

// Seeded-shuffle batches, AdamW with decoupled weight decay and a linear
// warmup/decay schedule, per-batch negative resampling, dev micro-F1
// selection in the active mode. Deterministic per (data, hp, mode).
TrainResult train(const Dataset& train_data, const Dataset& dev_data,
                  const Hyperparams& hp, RunMode mode);

std::vector<Entity> predict_sentence(const Model& model, const Sentence& sentence,
                                     RunMode mode);
std::vector<std::vector<Entity>> predict(const Model& model,
                                         const std::vector<Sentence>& sentences,
                                         RunMode mode);

struct EquivalenceReport {
  double alpha = 0;
  double max_deviation = 0;     // bundled grad vs alpha-mix of head-only grads
  double max_inactive_grad = 0; // head grads that must vanish at alpha 0/1
};

// Verifies the bundled gradient is the alpha-weighted sum of the seq-only
// and span-only gradients, with identical sampled negatives on all passes.
EquivalenceReport bundle_gradient_equivalence(const Hyperparams& hp,
                                              const std::vector<Sentence>& batch,
                                              double alpha);

}  // namespace blner
