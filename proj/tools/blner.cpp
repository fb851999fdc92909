#include <CLI11.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "blner/bundler.hpp"
#include "blner/config.hpp"
#include "blner/corpus.hpp"
#include "blner/error.hpp"
#include "blner/evaluator.hpp"
#include "blner/model.hpp"

namespace fs = std::filesystem;

using namespace blner;

namespace {

std::string output_root() {
  const char* env = std::getenv("BLNER_OUTPUT_ROOT");
  return env != nullptr && *env != '\0' ? env : ".";
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    fail(ErrorKind::io,
         "cannot create directory '" + dir.string() + "': " + ec.message());
}

// All text artifacts go through a temp file plus rename so a failed run never
// leaves a truncated output behind.
void atomic_write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) fail(ErrorKind::io, "short write on '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec)
    fail(ErrorKind::io, "cannot move '" + tmp.string() + "' into place: " +
                            ec.message());
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// Hyperparameter flags are collected as raw strings and layered over the
// config file, so the config module stays the single point of validation.
struct FlagOverrides {
  std::map<std::string, std::string> values;

  void attach(CLI::App* cmd) {
    static const char* const keys[] = {
        "mode",          "alpha",        "span_threshold", "negative_cap",
        "tagging",       "representation", "epochs",       "batch_size",
        "learning_rate", "warmup_ratio", "weight_decay",   "embed_dim",
        "window_radius", "chunk_len",    "len_embed_dim"};
    for (const char* key : keys) {
      std::string flag = "--" + std::string(key);
      for (char& c : flag)
        if (c == '_') c = '-';
      cmd->add_option(flag, values[key], std::string("config key ") + key);
    }
  }

  ConfigMap as_config() const {
    ConfigMap cfg;
    for (const auto& [key, value] : values)
      if (!value.empty()) cfg.emplace(key, value);
    return cfg;
  }
};

struct TrainArgs {
  std::string train_path;
  std::string dev_path;
  std::string config_path;
  std::string out_dir;
  std::vector<std::uint64_t> seeds;
  FlagOverrides overrides;
};

struct PredictArgs {
  std::string checkpoint;
  std::string input;
  std::string output;
  std::string mode;
};

struct EvaluateArgs {
  std::string pred;
  std::string gold;
  std::string out_dir;
};

struct DiagnoseArgs {
  std::string pred;
  std::string gold;
  std::string train;
  std::string out_dir;
};

struct CompareArgs {
  std::string pred_a;
  std::string pred_b;
  std::string gold;
  std::string train;
  std::string out_dir;
};

struct GenSynthArgs {
  std::uint64_t seed = 1;
  int sentences = 500;
  std::vector<std::string> types{"PER", "LOC", "ORG", "MISC"};
  std::string out_dir;
  bool as_json = false;
};

std::vector<std::vector<Entity>> entity_lists(const Dataset& dataset) {
  std::vector<std::vector<Entity>> lists;
  lists.reserve(dataset.sentences.size());
  for (const Sentence& s : dataset.sentences) lists.push_back(s.gold);
  return lists;
}

void check_alignment(const Dataset& pred, const Dataset& gold,
                     const std::string& pred_name) {
  if (pred.sentences.size() != gold.sentences.size())
    fail(ErrorKind::input,
         pred_name + " has " + std::to_string(pred.sentences.size()) +
             " sentences but gold has " + std::to_string(gold.sentences.size()));
}

std::string epoch_log_tsv(const TrainResult& result) {
  std::string text =
      "epoch\ttrain_loss\tseq_loss\tspan_loss\tdev_precision\tdev_recall\tdev_f1\tkept\n";
  for (const EpochStat& s : result.log) {
    text += std::to_string(s.epoch);
    text += '\t';
    text += fmt6(s.train_loss);
    text += '\t';
    text += fmt6(s.seq_loss);
    text += '\t';
    text += fmt6(s.span_loss);
    text += '\t';
    text += fmt6(s.dev_precision);
    text += '\t';
    text += fmt6(s.dev_recall);
    text += '\t';
    text += fmt6(s.dev_f1);
    text += '\t';
    text += s.kept ? '1' : '0';
    text += '\n';
  }
  return text;
}

void cmd_train(const TrainArgs& args) {
  ConfigMap cfg;
  if (!args.config_path.empty()) cfg = read_config_file(args.config_path);
  cfg = layer_configs(cfg, args.overrides.as_config());
  const RunConfig base = apply_config(cfg);

  std::vector<std::uint64_t> seeds = args.seeds;
  if (seeds.empty()) seeds.push_back(base.hp.seed);

  const Dataset train_data = read_dataset_file(args.train_path, Split::train);
  const Dataset dev_data = read_dataset_file(args.dev_path, Split::dev);

  const fs::path out_dir = args.out_dir;
  ensure_dir(out_dir);

  std::string summary =
      "seed\tbest_epoch\tdev_precision\tdev_recall\tdev_f1\n";
  std::array<double, 3> sum{}, sum_sq{};
  for (const std::uint64_t seed : seeds) {
    RunConfig run = base;
    run.hp.seed = seed;
    run.hp.validate();

    const TrainResult result = train(train_data, dev_data, run.hp, run.mode);
    const ScoreReport dev =
        score(predict(result.model, dev_data.sentences, run.mode), dev_data);

    const std::string tag = "seed" + std::to_string(seed);
    save_checkpoint(result.model, (out_dir / ("checkpoint-" + tag + ".bin")).string());
    atomic_write_text(out_dir / ("train-log-" + tag + ".tsv"),
                      epoch_log_tsv(result));
    atomic_write_text(out_dir / ("resolved-config-" + tag + ".txt"),
                      resolved_config(run));

    const std::array<double, 3> m{dev.precision(), dev.recall(), dev.f1()};
    for (int i = 0; i < 3; ++i) {
      sum[i] += m[i];
      sum_sq[i] += m[i] * m[i];
    }
    summary += std::to_string(seed) + "\t" + std::to_string(result.best_epoch) +
               "\t" + fmt6(m[0]) + "\t" + fmt6(m[1]) + "\t" + fmt6(m[2]) + "\n";
    std::cout << "seed " << seed << ": best epoch " << result.best_epoch
              << ", dev P " << fmt6(m[0]) << " R " << fmt6(m[1]) << " F1 "
              << fmt6(m[2]) << "\n";
  }

  const double n = static_cast<double>(seeds.size());
  std::array<double, 3> mean{}, sd{};
  for (int i = 0; i < 3; ++i) {
    mean[i] = sum[i] / n;
    sd[i] = std::sqrt(std::max(0.0, sum_sq[i] / n - mean[i] * mean[i]));
  }
  summary += "mean\t-\t" + fmt6(mean[0]) + "\t" + fmt6(mean[1]) + "\t" +
             fmt6(mean[2]) + "\n";
  summary += "std\t-\t" + fmt6(sd[0]) + "\t" + fmt6(sd[1]) + "\t" +
             fmt6(sd[2]) + "\n";
  atomic_write_text(out_dir / "summary.tsv", summary);
  std::cout << "dev F1 mean " << fmt6(mean[2]) << " std " << fmt6(sd[2])
            << " over " << seeds.size() << " seed(s)\n";
}

void cmd_predict(const PredictArgs& args) {
  const Model model = load_checkpoint(args.checkpoint);
  const RunMode mode =
      args.mode.empty() ? model.trained_mode : parse_run_mode(args.mode);
  const Dataset input =
      read_dataset_file(args.input, Split::test, /*require_flat=*/false);

  const auto preds = predict(model, input.sentences, mode);

  Dataset out;
  out.split = input.split;
  out.type_names = model.scheme.type_names();
  out.sentences.reserve(input.sentences.size());
  long total = 0;
  for (std::size_t i = 0; i < input.sentences.size(); ++i) {
    Sentence s;
    s.tokens = input.sentences[i].tokens;
    s.gold = preds[i];
    total += static_cast<long>(s.gold.size());
    out.sentences.push_back(std::move(s));
  }
  write_dataset_file(out, args.output, /*as_span_json=*/true);
  std::cout << "predicted " << total << " entities across "
            << out.sentences.size() << " sentences\n";
}

void cmd_evaluate(const EvaluateArgs& args) {
  const Dataset pred =
      read_dataset_file(args.pred, Split::test, /*require_flat=*/false);
  const Dataset gold = read_dataset_file(args.gold, Split::test);
  check_alignment(pred, gold, "prediction file");

  const ScoreReport report = score(entity_lists(pred), gold);

  const fs::path out_dir = args.out_dir;
  atomic_write_text(out_dir / "score.tsv", score_tsv(report));
  atomic_write_text(out_dir / "score.json", score_json(report));
  std::cout << score_tsv(report);
}

void cmd_diagnose(const DiagnoseArgs& args) {
  if (args.train.empty())
    fail(ErrorKind::config,
         "--train is required: the label-consistency attribute (eCon) is "
         "computed from train-split entity statistics");

  const Dataset pred =
      read_dataset_file(args.pred, Split::test, /*require_flat=*/false);
  const Dataset gold = read_dataset_file(args.gold, Split::test);
  const Dataset train_data = read_dataset_file(args.train, Split::train);
  check_alignment(pred, gold, "prediction file");

  const auto pred_lists = entity_lists(pred);
  const BucketReport buckets = bucket_report(pred_lists, gold, train_data);
  const AttributeProfile profile = attributes(gold, train_data);
  const ErrorReport errors = error_analysis(pred_lists, entity_lists(gold));

  const fs::path out_dir = args.out_dir;
  atomic_write_text(out_dir / "bucket.tsv", bucket_tsv(buckets));
  atomic_write_text(out_dir / "bucket.json", bucket_json(buckets));
  atomic_write_text(out_dir / "error.tsv", error_tsv(errors));
  atomic_write_text(out_dir / "error.json", error_json(errors));
  atomic_write_text(out_dir / "entity-profile.tsv", entity_profile_tsv(profile));
  atomic_write_text(out_dir / "sentence-profile.tsv",
                    sentence_profile_tsv(profile));
  std::cout << bucket_tsv(buckets) << error_tsv(errors);
}

void cmd_compare(const CompareArgs& args) {
  const Dataset pred_a =
      read_dataset_file(args.pred_a, Split::test, /*require_flat=*/false);
  const Dataset pred_b =
      read_dataset_file(args.pred_b, Split::test, /*require_flat=*/false);
  const Dataset gold = read_dataset_file(args.gold, Split::test);
  const Dataset train_data = read_dataset_file(args.train, Split::train);
  check_alignment(pred_a, gold, "first prediction file");
  check_alignment(pred_b, gold, "second prediction file");

  const BucketReport a = bucket_report(entity_lists(pred_a), gold, train_data);
  const BucketReport b = bucket_report(entity_lists(pred_b), gold, train_data);
  const HeatmapDelta delta = heatmap_delta(a, b);

  const fs::path out_dir = args.out_dir;
  atomic_write_text(out_dir / "delta.tsv", delta_tsv(delta));
  atomic_write_text(out_dir / "delta.json", delta_json(delta));
  atomic_write_text(out_dir / "delta-grid.txt", delta_grid(delta));
  std::cout << delta_grid(delta);
}

void cmd_gen_synth(const GenSynthArgs& args) {
  const SyntheticCorpus corpus =
      gen_synthetic(args.seed, args.sentences, args.types);

  const fs::path out_dir = args.out_dir;
  ensure_dir(out_dir);
  const char* ext = args.as_json ? ".jsonl" : ".conll";
  write_dataset_file(corpus.train, (out_dir / ("train" + std::string(ext))).string(),
                     args.as_json);
  write_dataset_file(corpus.dev, (out_dir / ("dev" + std::string(ext))).string(),
                     args.as_json);
  write_dataset_file(corpus.test, (out_dir / ("test" + std::string(ext))).string(),
                     args.as_json);
  std::cout << "train " << corpus.train.sentences.size() << " dev "
            << corpus.dev.sentences.size() << " test "
            << corpus.test.sentences.size() << " sentences\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bundled sequence-and-span named entity tagger"};
  app.require_subcommand(1);
  const std::string root = output_root();

  TrainArgs train_args;
  train_args.out_dir = root;
  CLI::App* train_cmd =
      app.add_subcommand("train", "train a model and write a checkpoint");
  train_cmd->add_option("--train", train_args.train_path, "training data file")
      ->required();
  train_cmd->add_option("--dev", train_args.dev_path, "development data file")
      ->required();
  train_cmd->add_option("--config", train_args.config_path,
                        "key=value config file, overridden by flags");
  train_cmd->add_option("--out", train_args.out_dir, "output directory");
  train_cmd->add_option("--seed", train_args.seeds,
                        "seed list; several seeds train several runs and "
                        "report mean and standard deviation");
  train_args.overrides.attach(train_cmd);

  PredictArgs predict_args;
  predict_args.output = root + "/predictions.jsonl";
  CLI::App* predict_cmd =
      app.add_subcommand("predict", "tag a file with a trained checkpoint");
  predict_cmd->add_option("--checkpoint", predict_args.checkpoint, "model file")
      ->required();
  predict_cmd->add_option("--input", predict_args.input, "sentences to tag")
      ->required();
  predict_cmd->add_option("--output", predict_args.output,
                          "span-JSON predictions file");
  predict_cmd->add_option("--mode", predict_args.mode,
                          "emission mode; defaults to the checkpoint's");

  EvaluateArgs eval_args;
  eval_args.out_dir = root;
  CLI::App* eval_cmd =
      app.add_subcommand("evaluate", "score predictions against gold");
  eval_cmd->add_option("--pred", eval_args.pred, "prediction file")->required();
  eval_cmd->add_option("--gold", eval_args.gold, "gold file")->required();
  eval_cmd->add_option("--out", eval_args.out_dir, "output directory");

  DiagnoseArgs diag_args;
  diag_args.out_dir = root;
  CLI::App* diag_cmd = app.add_subcommand(
      "diagnose", "per-attribute bucket scores and error breakdown");
  diag_cmd->add_option("--pred", diag_args.pred, "prediction file")->required();
  diag_cmd->add_option("--gold", diag_args.gold, "gold file")->required();
  diag_cmd->add_option("--train", diag_args.train,
                       "train file backing the eCon attribute");
  diag_cmd->add_option("--out", diag_args.out_dir, "output directory");

  CompareArgs cmp_args;
  cmp_args.out_dir = root;
  CLI::App* cmp_cmd = app.add_subcommand(
      "compare", "per-bucket F1 delta between two prediction files");
  cmp_cmd->add_option("--pred-a", cmp_args.pred_a, "first prediction file")
      ->required();
  cmp_cmd->add_option("--pred-b", cmp_args.pred_b, "second prediction file")
      ->required();
  cmp_cmd->add_option("--gold", cmp_args.gold, "gold file")->required();
  cmp_cmd->add_option("--train", cmp_args.train, "train file")->required();
  cmp_cmd->add_option("--out", cmp_args.out_dir, "output directory");

  GenSynthArgs gen_args;
  gen_args.out_dir = root;
  CLI::App* gen_cmd = app.add_subcommand(
      "gen-synth", "write a deterministic synthetic train/dev/test corpus");
  gen_cmd->add_option("--seed", gen_args.seed, "generator seed");
  gen_cmd->add_option("--sentences", gen_args.sentences, "total sentence count");
  gen_cmd->add_option("--types", gen_args.types, "entity type names");
  gen_cmd->add_option("--out", gen_args.out_dir, "output directory");
  gen_cmd->add_flag("--json", gen_args.as_json,
                    "emit span-JSON instead of token-label lines");

  train_cmd->callback([&] { cmd_train(train_args); });
  predict_cmd->callback([&] { cmd_predict(predict_args); });
  eval_cmd->callback([&] { cmd_evaluate(eval_args); });
  diag_cmd->callback([&] { cmd_diagnose(diag_args); });
  cmp_cmd->callback([&] { cmd_compare(cmp_args); });
  gen_cmd->callback([&] { cmd_gen_synth(gen_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::io ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
