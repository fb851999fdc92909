#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "blner/encoder.hpp"
#include "blner/seqdec.hpp"
#include "blner/spandec.hpp"
#include "blner/types.hpp"

namespace blner {

enum class TaggingMode { softmax, crf };
enum class RunMode { seq, span, bl_seq, bl_span };

const char* to_string(TaggingMode mode);
const char* to_string(SpanRepMethod method);
const char* to_string(RunMode mode);
TaggingMode parse_tagging_mode(const std::string& text);
SpanRepMethod parse_rep_method(const std::string& text);
RunMode parse_run_mode(const std::string& text);

inline bool mode_uses_seq_head(RunMode mode) {
  return mode == RunMode::seq || mode == RunMode::bl_seq || mode == RunMode::bl_span;
}
inline bool mode_uses_span_head(RunMode mode) {
  return mode == RunMode::span || mode == RunMode::bl_seq || mode == RunMode::bl_span;
}
// The head a run mode emits entities from.
inline bool mode_emits_from_span_head(RunMode mode) {
  return mode == RunMode::span || mode == RunMode::bl_span;
}
inline bool is_bundled(RunMode mode) {
  return mode == RunMode::bl_seq || mode == RunMode::bl_span;
}

struct Hyperparams {
  double alpha = 0.1;           // seq-loss weight in the bundled loss
  int span_threshold = 6;       // maximum span length
  int negative_cap = 100;       // sampled negatives per sentence
  TaggingMode tagging = TaggingMode::softmax;
  SpanRepMethod representation = SpanRepMethod::hybrid;
  int epochs = 20;
  int batch_size = 16;
  double learning_rate = 1e-2;  // reference-encoder default; 5e-5 suits
                                // pretrained encoders
  double warmup_ratio = 0.1;
  double weight_decay = 1e-2;
  std::uint64_t seed = 1;
  // reference encoder dimensions
  int embed_dim = 64;
  int window_radius = 2;
  int chunk_len = 6;
  int len_embed_dim = 16;

  void validate() const;  // throws ErrorKind::config
};

struct Model {
  LabelScheme scheme;
  TypeSet types;
  Hyperparams hp;
  RunMode trained_mode = RunMode::bl_span;

  Encoder encoder;
  EmissionParams emission;
  CrfParams crf;  // allocated only in crf tagging mode
  SpanRepParams span;

  // Alphabets from train.type_names, vocab from the train tokens, parameters
  // uniform in [-0.1, 0.1] from hp.seed.
  static Model init(const Dataset& train, const Hyperparams& hp, RunMode mode);
};

// Same tensor shapes as the trainable parameters.
struct Gradients {
  EncoderParams encoder;
  EmissionParams emission;
  CrfParams crf;
  SpanRepParams span;

  static Gradients zeros_like(const Model& model);
  void set_zero();
};

struct TensorRef {
  double* data = nullptr;
  Eigen::Index size = 0;
};

inline constexpr unsigned kEncoderGroup = 1u;
inline constexpr unsigned kSeqGroup = 2u;
inline constexpr unsigned kSpanGroup = 4u;
inline constexpr unsigned kAllGroups = kEncoderGroup | kSeqGroup | kSpanGroup;

// Parameter groups touched by a run mode; heads outside the mode are never
// updated during training.
unsigned active_groups(RunMode mode);

std::vector<TensorRef> param_refs(Model& model, unsigned groups);
std::vector<TensorRef> param_refs(Gradients& grads, unsigned groups);

Eigen::VectorXd flatten(const std::vector<TensorRef>& refs);
void assign_flat(const std::vector<TensorRef>& refs,
                 const Eigen::Ref<const Eigen::VectorXd>& values);

// Versioned binary checkpoint holding every parameter tensor, the alphabets,
// the subtoken vocabulary, and the hyperparameters. Round-trips bit-exactly.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace blner
