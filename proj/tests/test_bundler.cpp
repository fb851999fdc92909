#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "blner/bundler.hpp"
#include "blner/corpus.hpp"
#include "blner/gradcheck.hpp"
#include "blner/model.hpp"
#include "test_support.hpp"

using namespace blner;
using test::kind_of;
using test::make_dataset;
using test::make_sentence;

namespace {

Hyperparams tiny_hp() {
  Hyperparams hp;
  hp.embed_dim = 6;
  hp.window_radius = 2;
  hp.chunk_len = 3;
  hp.len_embed_dim = 3;
  hp.span_threshold = 3;
  hp.negative_cap = 5;
  hp.alpha = 0.1;
  hp.batch_size = 4;
  hp.epochs = 2;
  hp.seed = 13;
  return hp;
}

Dataset five_token_train() {
  return make_dataset(
      {make_sentence({"rivet", "socket", "flange", "washer", "bolt"},
                     {{1, 2, "P", ""}, {4, 4, "Q", ""}}),
       make_sentence({"gasket", "socket", "valve", "rivet", "nut"},
                     {{3, 3, "Q", ""}}),
       make_sentence({"washer", "valve", "bolt", "gasket", "pin"},
                     {{1, 3, "P", ""}}),
       make_sentence({"pin", "nut", "flange", "valve", "socket"},
                     {{2, 2, "P", ""}, {4, 5, "Q", ""}})},
      {"P", "Q"});
}

long gold_span_instances(const Dataset& d, int threshold) {
  long count = 0;
  for (const Sentence& s : d.sentences)
    for (const Entity& e : s.gold)
      if (e.length() <= threshold) ++count;
  return count;
}

}  // namespace

TEST_CASE("bl_loss is the alpha-weighted sum") {
  CHECK(bl_loss(2.0, 1.0, 0.1) == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(bl_loss(3.0, 7.0, 0.0) == 7.0);
  CHECK(bl_loss(3.0, 7.0, 1.0) == 3.0);
  CHECK(kind_of([] { bl_loss(1, 1, -0.1); }) == ErrorKind::config);
  CHECK(kind_of([] { bl_loss(1, 1, 1.1); }) == ErrorKind::config);
}

TEST_CASE("batch_loss composes the mode loss from both heads") {
  const Dataset data = five_token_train();
  const Hyperparams hp = tiny_hp();
  const Model model = Model::init(data, hp, RunMode::bl_span);

  Rng rng(5);
  const auto negatives = draw_negatives(model, data.sentences, rng);
  REQUIRE(negatives.size() == data.sentences.size());
  long negative_count = 0;
  for (const auto& list : negatives) negative_count += list.size();

  const LossBreakdown seq =
      batch_loss(model, data.sentences, negatives, RunMode::seq);
  const LossBreakdown span =
      batch_loss(model, data.sentences, negatives, RunMode::span);
  const LossBreakdown bl_seq =
      batch_loss(model, data.sentences, negatives, RunMode::bl_seq);
  const LossBreakdown bl_span =
      batch_loss(model, data.sentences, negatives, RunMode::bl_span);

  CHECK(seq.combined == doctest::Approx(seq.seq).epsilon(1e-14));
  CHECK(span.combined == doctest::Approx(span.span).epsilon(1e-14));
  CHECK(bl_seq.combined ==
        doctest::Approx(bl_loss(bl_seq.seq, bl_seq.span, hp.alpha)).epsilon(1e-14));
  CHECK(bl_span.combined == doctest::Approx(bl_seq.combined).epsilon(1e-14));

  CHECK(seq.tokens == 20);
  CHECK(bl_span.span_instances ==
        gold_span_instances(data, hp.span_threshold) + negative_count);

  // Both heads see the same per-head losses regardless of the mode.
  CHECK(bl_seq.seq == doctest::Approx(seq.seq).epsilon(1e-14));
  CHECK(bl_seq.span == doctest::Approx(span.span).epsilon(1e-14));
}

TEST_CASE("batch_loss_backward reports the same breakdown as batch_loss") {
  const Dataset data = five_token_train();
  const Hyperparams hp = tiny_hp();
  const Model model = Model::init(data, hp, RunMode::bl_span);
  Rng rng(6);
  const auto negatives = draw_negatives(model, data.sentences, rng);

  Gradients grads = Gradients::zeros_like(model);
  const LossBreakdown fwd =
      batch_loss(model, data.sentences, negatives, RunMode::bl_span);
  const LossBreakdown bwd =
      batch_loss_backward(model, data.sentences, negatives, RunMode::bl_span, grads);
  CHECK(fwd.combined == doctest::Approx(bwd.combined).epsilon(1e-14));
  CHECK(fwd.seq == doctest::Approx(bwd.seq).epsilon(1e-14));
  CHECK(fwd.span == doctest::Approx(bwd.span).epsilon(1e-14));
  CHECK(fwd.tokens == bwd.tokens);
  CHECK(fwd.span_instances == bwd.span_instances);
}

TEST_CASE("single-head modes leave the other head untouched") {
  const Dataset data = five_token_train();
  const Hyperparams hp = tiny_hp();
  const Model model = Model::init(data, hp, RunMode::bl_span);
  Rng rng(7);
  const auto negatives = draw_negatives(model, data.sentences, rng);

  Gradients grads = Gradients::zeros_like(model);
  batch_loss_backward(model, data.sentences, negatives, RunMode::seq, grads);
  CHECK(flatten(param_refs(grads, kSpanGroup)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(flatten(param_refs(grads, kSeqGroup)).cwiseAbs().maxCoeff() > 0.0);
  CHECK(flatten(param_refs(grads, kEncoderGroup)).cwiseAbs().maxCoeff() > 0.0);

  grads.set_zero();
  batch_loss_backward(model, data.sentences, negatives, RunMode::span, grads);
  CHECK(flatten(param_refs(grads, kSeqGroup)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(flatten(param_refs(grads, kSpanGroup)).cwiseAbs().maxCoeff() > 0.0);
  CHECK(flatten(param_refs(grads, kEncoderGroup)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("analytic gradients match finite differences in every configuration") {
  const Dataset data = five_token_train();

  for (const TaggingMode tagging : {TaggingMode::softmax, TaggingMode::crf}) {
    for (const SpanRepMethod rep :
         {SpanRepMethod::boundary, SpanRepMethod::pooling, SpanRepMethod::hybrid}) {
      CAPTURE(to_string(tagging));
      CAPTURE(to_string(rep));

      Hyperparams hp = tiny_hp();
      hp.tagging = tagging;
      hp.representation = rep;

      Model model = Model::init(data, hp, RunMode::bl_span);
      Rng rng(8);
      const auto negatives = draw_negatives(model, data.sentences, rng);

      auto refs = param_refs(model, kAllGroups);
      const Eigen::VectorXd params0 = flatten(refs);

      auto loss_fn = [&](const Eigen::VectorXd& flat) {
        assign_flat(refs, flat);
        return batch_loss(model, data.sentences, negatives, RunMode::bl_span)
            .combined;
      };

      assign_flat(refs, params0);
      Gradients grads = Gradients::zeros_like(model);
      batch_loss_backward(model, data.sentences, negatives, RunMode::bl_span,
                          grads);
      const Eigen::VectorXd analytic = flatten(param_refs(grads, kAllGroups));

      const GradCheckReport report =
          grad_check(loss_fn, params0, analytic, 1e-4, 200, 31);
      INFO("max rel error ", report.max_rel_error, " at coordinate ",
           report.worst_coordinate, " analytic ", report.worst_analytic,
           " numeric ", report.worst_numeric);
      CHECK(report.pass());
    }
  }
}

TEST_CASE("bundled gradient is the alpha mix of the head gradients") {
  const Dataset data = five_token_train();
  const Hyperparams hp = tiny_hp();

  for (const double alpha : {0.0, 0.5, 1.0}) {
    CAPTURE(alpha);
    const EquivalenceReport report =
        bundle_gradient_equivalence(hp, data.sentences, alpha);
    CHECK(report.alpha == alpha);
    CHECK(report.max_deviation < 1e-10);
    if (alpha == 0.0 || alpha == 1.0) CHECK(report.max_inactive_grad < 1e-12);
  }
}

TEST_CASE("training with zero epochs returns the initialized model") {
  const SyntheticCorpus corpus = gen_synthetic(11, 40, {"P", "Q"});
  Hyperparams hp = tiny_hp();
  hp.epochs = 0;

  TrainResult result = train(corpus.train, corpus.dev, hp, RunMode::bl_span);
  CHECK(result.log.empty());
  CHECK(result.best_epoch == 0);

  Model init = Model::init(corpus.train, hp, RunMode::bl_span);
  CHECK(flatten(param_refs(result.model, kAllGroups)) ==
        flatten(param_refs(init, kAllGroups)));
}

TEST_CASE("training logs one row per epoch and tracks the best model") {
  const SyntheticCorpus corpus = gen_synthetic(11, 40, {"P", "Q"});
  Hyperparams hp = tiny_hp();
  hp.epochs = 3;

  const TrainResult result = train(corpus.train, corpus.dev, hp, RunMode::seq);
  REQUIRE(result.log.size() == 3);
  double best = -1;
  int best_epoch = 0;
  for (int i = 0; i < 3; ++i) {
    CHECK(result.log[i].epoch == i + 1);
    const bool improved = result.log[i].dev_f1 > best;
    CHECK(result.log[i].kept == improved);
    if (improved) {
      best = result.log[i].dev_f1;
      best_epoch = i + 1;
    }
  }
  CHECK(result.best_epoch == best_epoch);
  CHECK(result.best_dev_f1 == doctest::Approx(best));
}

TEST_CASE("training is bit-deterministic per seed") {
  const SyntheticCorpus corpus = gen_synthetic(11, 40, {"P", "Q"});
  const Hyperparams hp = tiny_hp();

  TrainResult a = train(corpus.train, corpus.dev, hp, RunMode::bl_span);
  TrainResult b = train(corpus.train, corpus.dev, hp, RunMode::bl_span);
  CHECK(flatten(param_refs(a.model, kAllGroups)) ==
        flatten(param_refs(b.model, kAllGroups)));
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].train_loss == b.log[i].train_loss);
    CHECK(a.log[i].dev_f1 == b.log[i].dev_f1);
  }

  Hyperparams other = hp;
  other.seed = hp.seed + 1;
  TrainResult c = train(corpus.train, corpus.dev, other, RunMode::bl_span);
  CHECK(flatten(param_refs(a.model, kAllGroups)) !=
        flatten(param_refs(c.model, kAllGroups)));
}

TEST_CASE("checkpoints round trip bit-exactly") {
  const SyntheticCorpus corpus = gen_synthetic(11, 40, {"P", "Q"});
  Hyperparams hp = tiny_hp();
  hp.tagging = TaggingMode::crf;
  hp.epochs = 1;

  TrainResult result = train(corpus.train, corpus.dev, hp, RunMode::bl_seq);
  const std::string dir = "bundler_ckpt_test";
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/model.bin";
  save_checkpoint(result.model, path);

  Model loaded = load_checkpoint(path);
  CHECK(flatten(param_refs(loaded, kAllGroups)) ==
        flatten(param_refs(result.model, kAllGroups)));
  CHECK(loaded.trained_mode == RunMode::bl_seq);
  CHECK(loaded.hp.tagging == TaggingMode::crf);
  CHECK(loaded.hp.alpha == hp.alpha);
  CHECK(loaded.scheme.labels() == result.model.scheme.labels());
  CHECK(loaded.types.names() == result.model.types.names());
  CHECK(loaded.encoder.vocab.words() == result.model.encoder.vocab.words());

  const auto before = predict(result.model, corpus.test.sentences, RunMode::bl_seq);
  const auto after = predict(loaded, corpus.test.sentences, RunMode::bl_seq);
  REQUIRE(before.size() == after.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    REQUIRE(before[i].size() == after[i].size());
    for (std::size_t j = 0; j < before[i].size(); ++j)
      CHECK(same_mention(before[i][j], after[i][j]));
  }

  CHECK(kind_of([&] { load_checkpoint(dir + "/absent.bin"); }) == ErrorKind::io);
}

TEST_CASE("prediction modes must match the trained heads") {
  const Dataset data = five_token_train();
  Hyperparams hp = tiny_hp();
  hp.epochs = 1;

  const Model seq_model = train(data, data, hp, RunMode::seq).model;
  CHECK_NOTHROW(predict_sentence(seq_model, data.sentences[0], RunMode::seq));
  CHECK(kind_of([&] {
          predict_sentence(seq_model, data.sentences[0], RunMode::span);
        }) == ErrorKind::config);
  CHECK(kind_of([&] {
          predict_sentence(seq_model, data.sentences[0], RunMode::bl_span);
        }) == ErrorKind::config);

  const Model span_model = train(data, data, hp, RunMode::span).model;
  CHECK_NOTHROW(predict_sentence(span_model, data.sentences[0], RunMode::span));
  CHECK(kind_of([&] {
          predict_sentence(span_model, data.sentences[0], RunMode::seq);
        }) == ErrorKind::config);

  const Model bl_model = train(data, data, hp, RunMode::bl_span).model;
  CHECK_NOTHROW(predict_sentence(bl_model, data.sentences[0], RunMode::seq));
  CHECK_NOTHROW(predict_sentence(bl_model, data.sentences[0], RunMode::span));
  CHECK_NOTHROW(predict_sentence(bl_model, data.sentences[0], RunMode::bl_seq));
  CHECK_NOTHROW(predict_sentence(bl_model, data.sentences[0], RunMode::bl_span));
}

TEST_CASE("predictions are well-formed entity lists") {
  const SyntheticCorpus corpus = gen_synthetic(19, 60, {"P", "Q"});
  Hyperparams hp = tiny_hp();
  hp.epochs = 2;
  const Model model = train(corpus.train, corpus.dev, hp, RunMode::bl_span).model;

  for (const RunMode mode : {RunMode::bl_seq, RunMode::bl_span}) {
    const auto lists = predict(model, corpus.test.sentences, mode);
    REQUIRE(lists.size() == corpus.test.sentences.size());
    for (std::size_t i = 0; i < lists.size(); ++i) {
      const Sentence& s = corpus.test.sentences[i];
      for (std::size_t j = 0; j < lists[i].size(); ++j) {
        const Entity& e = lists[i][j];
        CHECK(e.start >= 1);
        CHECK(e.end <= s.size());
        CHECK(model.types.id_of(e.etype) >= 0);
        CHECK(e.etype != TypeSet::kNoneName);
        CHECK(e.surface == surface_of(s, e.start, e.end));
        if (j > 0) CHECK(lists[i][j - 1].end < e.start);
      }
    }
  }
}
