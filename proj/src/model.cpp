#include "blner/model.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "blner/numeric.hpp"

namespace blner {

const char* to_string(TaggingMode mode) {
  switch (mode) {
    case TaggingMode::softmax: return "softmax";
    case TaggingMode::crf: return "crf";
  }
  return "?";
}

const char* to_string(SpanRepMethod method) {
  switch (method) {
    case SpanRepMethod::boundary: return "boundary";
    case SpanRepMethod::pooling: return "pooling";
    case SpanRepMethod::hybrid: return "hybrid";
  }
  return "?";
}

const char* to_string(RunMode mode) {
  switch (mode) {
    case RunMode::seq: return "seq";
    case RunMode::span: return "span";
    case RunMode::bl_seq: return "bl-seq";
    case RunMode::bl_span: return "bl-span";
  }
  return "?";
}

TaggingMode parse_tagging_mode(const std::string& text) {
  if (text == "softmax") return TaggingMode::softmax;
  if (text == "crf") return TaggingMode::crf;
  fail(ErrorKind::config, "unknown tagging mode '" + text + "' (softmax, crf)");
}

SpanRepMethod parse_rep_method(const std::string& text) {
  if (text == "boundary") return SpanRepMethod::boundary;
  if (text == "pooling") return SpanRepMethod::pooling;
  if (text == "hybrid") return SpanRepMethod::hybrid;
  fail(ErrorKind::config,
       "unknown representation '" + text + "' (boundary, pooling, hybrid)");
}

RunMode parse_run_mode(const std::string& text) {
  if (text == "seq") return RunMode::seq;
  if (text == "span") return RunMode::span;
  if (text == "bl-seq") return RunMode::bl_seq;
  if (text == "bl-span") return RunMode::bl_span;
  fail(ErrorKind::config,
       "unknown run mode '" + text + "' (seq, span, bl-seq, bl-span)");
}

void Hyperparams::validate() const {
  if (!(alpha >= 0 && alpha <= 1))
    fail(ErrorKind::config, "alpha must lie in [0, 1]");
  if (span_threshold < 1) fail(ErrorKind::config, "span_threshold must be >= 1");
  if (negative_cap < 0) fail(ErrorKind::config, "negative_cap must be >= 0");
  if (epochs < 0) fail(ErrorKind::config, "epochs must be >= 0");
  if (batch_size < 1) fail(ErrorKind::config, "batch_size must be >= 1");
  if (!(learning_rate > 0)) fail(ErrorKind::config, "learning_rate must be > 0");
  if (!(warmup_ratio >= 0 && warmup_ratio <= 1))
    fail(ErrorKind::config, "warmup_ratio must lie in [0, 1]");
  if (!(weight_decay >= 0)) fail(ErrorKind::config, "weight_decay must be >= 0");
  if (embed_dim < 1) fail(ErrorKind::config, "embed_dim must be >= 1");
  if (window_radius < 0) fail(ErrorKind::config, "window_radius must be >= 0");
  if (chunk_len < 1) fail(ErrorKind::config, "chunk_len must be >= 1");
  if (len_embed_dim < 1) fail(ErrorKind::config, "len_embed_dim must be >= 1");
}

namespace {

void seed_fill(Eigen::Ref<Eigen::MatrixXd> tensor, Rng& rng) {
  for (Eigen::Index i = 0; i < tensor.size(); ++i)
    tensor.data()[i] = rng.uniform(-0.1, 0.1);
}

}  // namespace

Model Model::init(const Dataset& train, const Hyperparams& hp, RunMode mode) {
  hp.validate();
  validate_dataset(train);
  if (train.sentences.empty())
    fail(ErrorKind::input, "cannot initialize a model from an empty train split");

  Model model;
  model.scheme = LabelScheme::from_types(train.type_names);
  model.types = TypeSet::from_names(train.type_names);
  model.hp = hp;
  model.trained_mode = mode;
  model.encoder.cfg = {hp.embed_dim, hp.window_radius};
  model.encoder.vocab = SubtokenVocab::build(train, hp.chunk_len);

  const int d = hp.embed_dim;
  Rng rng(hp.seed);
  EncoderParams& ep = model.encoder.params;
  ep.embed.resize(model.encoder.vocab.size(), d);
  ep.mix_w.resize(d, 2 * d);
  ep.mix_b.resize(d);
  ep.global_w.resize(d, d);
  seed_fill(ep.embed, rng);
  seed_fill(ep.mix_w, rng);
  seed_fill(ep.mix_b, rng);
  seed_fill(ep.global_w, rng);

  model.emission.w.resize(model.scheme.size(), d);
  model.emission.b.resize(model.scheme.size());
  seed_fill(model.emission.w, rng);
  seed_fill(model.emission.b, rng);
  if (hp.tagging == TaggingMode::crf) {
    model.crf.a.resize(model.scheme.size() + 1, model.scheme.size());
    seed_fill(model.crf.a, rng);
  }

  const int rep_dim = span_rep_dim(hp.representation, d, hp.len_embed_dim);
  model.span.len_embed.resize(hp.span_threshold, hp.len_embed_dim);
  model.span.w.resize(model.types.size(), rep_dim);
  model.span.b.resize(model.types.size());
  seed_fill(model.span.len_embed, rng);
  seed_fill(model.span.w, rng);
  seed_fill(model.span.b, rng);

  return model;
}

Gradients Gradients::zeros_like(const Model& model) {
  Gradients g;
  g.encoder.embed = Eigen::MatrixXd::Zero(model.encoder.params.embed.rows(),
                                          model.encoder.params.embed.cols());
  g.encoder.mix_w = Eigen::MatrixXd::Zero(model.encoder.params.mix_w.rows(),
                                          model.encoder.params.mix_w.cols());
  g.encoder.mix_b = Eigen::VectorXd::Zero(model.encoder.params.mix_b.size());
  g.encoder.global_w = Eigen::MatrixXd::Zero(model.encoder.params.global_w.rows(),
                                             model.encoder.params.global_w.cols());
  g.emission.w = Eigen::MatrixXd::Zero(model.emission.w.rows(), model.emission.w.cols());
  g.emission.b = Eigen::VectorXd::Zero(model.emission.b.size());
  if (!model.crf.empty())
    g.crf.a = Eigen::MatrixXd::Zero(model.crf.a.rows(), model.crf.a.cols());
  g.span.len_embed =
      Eigen::MatrixXd::Zero(model.span.len_embed.rows(), model.span.len_embed.cols());
  g.span.w = Eigen::MatrixXd::Zero(model.span.w.rows(), model.span.w.cols());
  g.span.b = Eigen::VectorXd::Zero(model.span.b.size());
  return g;
}

void Gradients::set_zero() {
  encoder.embed.setZero();
  encoder.mix_w.setZero();
  encoder.mix_b.setZero();
  encoder.global_w.setZero();
  emission.w.setZero();
  emission.b.setZero();
  if (crf.a.size() > 0) crf.a.setZero();
  span.len_embed.setZero();
  span.w.setZero();
  span.b.setZero();
}

unsigned active_groups(RunMode mode) {
  switch (mode) {
    case RunMode::seq: return kEncoderGroup | kSeqGroup;
    case RunMode::span: return kEncoderGroup | kSpanGroup;
    case RunMode::bl_seq:
    case RunMode::bl_span: return kAllGroups;
  }
  return 0;
}

namespace {

template <typename EncoderT, typename EmissionT, typename CrfT, typename SpanT>
std::vector<TensorRef> collect_refs(EncoderT& enc, EmissionT& em, CrfT& crf,
                                    SpanT& span, unsigned groups) {
  std::vector<TensorRef> refs;
  if (groups & kEncoderGroup) {
    refs.push_back({enc.embed.data(), enc.embed.size()});
    refs.push_back({enc.mix_w.data(), enc.mix_w.size()});
    refs.push_back({enc.mix_b.data(), enc.mix_b.size()});
    refs.push_back({enc.global_w.data(), enc.global_w.size()});
  }
  if (groups & kSeqGroup) {
    refs.push_back({em.w.data(), em.w.size()});
    refs.push_back({em.b.data(), em.b.size()});
    if (crf.a.size() > 0) refs.push_back({crf.a.data(), crf.a.size()});
  }
  if (groups & kSpanGroup) {
    refs.push_back({span.len_embed.data(), span.len_embed.size()});
    refs.push_back({span.w.data(), span.w.size()});
    refs.push_back({span.b.data(), span.b.size()});
  }
  return refs;
}

}  // namespace

std::vector<TensorRef> param_refs(Model& model, unsigned groups) {
  return collect_refs(model.encoder.params, model.emission, model.crf, model.span,
                      groups);
}

std::vector<TensorRef> param_refs(Gradients& grads, unsigned groups) {
  return collect_refs(grads.encoder, grads.emission, grads.crf, grads.span, groups);
}

Eigen::VectorXd flatten(const std::vector<TensorRef>& refs) {
  Eigen::Index total = 0;
  for (const TensorRef& r : refs) total += r.size;
  Eigen::VectorXd flat(total);
  Eigen::Index at = 0;
  for (const TensorRef& r : refs) {
    std::memcpy(flat.data() + at, r.data, sizeof(double) * r.size);
    at += r.size;
  }
  return flat;
}

void assign_flat(const std::vector<TensorRef>& refs,
                 const Eigen::Ref<const Eigen::VectorXd>& values) {
  Eigen::Index total = 0;
  for (const TensorRef& r : refs) total += r.size;
  if (total != values.size())
    fail(ErrorKind::shape, "flat vector of " + std::to_string(values.size()) +
                               " values cannot fill " + std::to_string(total) +
                               " parameters");
  Eigen::Index at = 0;
  for (const TensorRef& r : refs) {
    std::memcpy(r.data, values.data() + at, sizeof(double) * r.size);
    at += r.size;
  }
}

namespace {

constexpr char kMagic[8] = {'B', 'L', 'N', 'E', 'R', 'C', 'K', '1'};
constexpr std::uint64_t kVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_str(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) fail(ErrorKind::parse, "truncated checkpoint");
  return v;
}

double get_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) fail(ErrorKind::parse, "truncated checkpoint");
  return v;
}

std::string get_str(std::istream& in) {
  const std::uint64_t len = get_u64(in);
  if (len > (1u << 20)) fail(ErrorKind::parse, "implausible string in checkpoint");
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (!in) fail(ErrorKind::parse, "truncated checkpoint");
  return s;
}

void put_tensor(std::ostream& out, const Eigen::Ref<const Eigen::MatrixXd>& t) {
  put_u64(out, static_cast<std::uint64_t>(t.rows()));
  put_u64(out, static_cast<std::uint64_t>(t.cols()));
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(sizeof(double) * t.size()));
}

void get_tensor(std::istream& in, Eigen::MatrixXd& t) {
  const auto rows = get_u64(in), cols = get_u64(in);
  if (rows > (1u << 24) || cols > (1u << 24))
    fail(ErrorKind::parse, "implausible tensor shape in checkpoint");
  t.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  in.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(sizeof(double) * t.size()));
  if (!in) fail(ErrorKind::parse, "truncated checkpoint");
}

void get_tensor(std::istream& in, Eigen::VectorXd& t) {
  Eigen::MatrixXd m;
  get_tensor(in, m);
  if (m.cols() != 1) fail(ErrorKind::parse, "expected a vector tensor in checkpoint");
  t = m.col(0);
}

void put_hp(std::ostream& out, const Hyperparams& hp) {
  put_f64(out, hp.alpha);
  put_u64(out, static_cast<std::uint64_t>(hp.span_threshold));
  put_u64(out, static_cast<std::uint64_t>(hp.negative_cap));
  put_u64(out, static_cast<std::uint64_t>(hp.tagging));
  put_u64(out, static_cast<std::uint64_t>(hp.representation));
  put_u64(out, static_cast<std::uint64_t>(hp.epochs));
  put_u64(out, static_cast<std::uint64_t>(hp.batch_size));
  put_f64(out, hp.learning_rate);
  put_f64(out, hp.warmup_ratio);
  put_f64(out, hp.weight_decay);
  put_u64(out, hp.seed);
  put_u64(out, static_cast<std::uint64_t>(hp.embed_dim));
  put_u64(out, static_cast<std::uint64_t>(hp.window_radius));
  put_u64(out, static_cast<std::uint64_t>(hp.chunk_len));
  put_u64(out, static_cast<std::uint64_t>(hp.len_embed_dim));
}

Hyperparams get_hp(std::istream& in) {
  Hyperparams hp;
  hp.alpha = get_f64(in);
  hp.span_threshold = static_cast<int>(get_u64(in));
  hp.negative_cap = static_cast<int>(get_u64(in));
  hp.tagging = static_cast<TaggingMode>(get_u64(in));
  hp.representation = static_cast<SpanRepMethod>(get_u64(in));
  hp.epochs = static_cast<int>(get_u64(in));
  hp.batch_size = static_cast<int>(get_u64(in));
  hp.learning_rate = get_f64(in);
  hp.warmup_ratio = get_f64(in);
  hp.weight_decay = get_f64(in);
  hp.seed = get_u64(in);
  hp.embed_dim = static_cast<int>(get_u64(in));
  hp.window_radius = static_cast<int>(get_u64(in));
  hp.chunk_len = static_cast<int>(get_u64(in));
  hp.len_embed_dim = static_cast<int>(get_u64(in));
  return hp;
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write " + tmp);
    out.write(kMagic, sizeof kMagic);
    put_u64(out, kVersion);
    put_u64(out, static_cast<std::uint64_t>(model.trained_mode));
    put_hp(out, model.hp);

    put_u64(out, model.scheme.type_names().size());
    for (const std::string& t : model.scheme.type_names()) put_str(out, t);

    const auto& words = model.encoder.vocab.words();
    put_u64(out, words.size() - 2);  // reserved rows are implicit
    for (std::size_t i = 2; i < words.size(); ++i) put_str(out, words[i]);

    put_tensor(out, model.encoder.params.embed);
    put_tensor(out, model.encoder.params.mix_w);
    put_tensor(out, model.encoder.params.mix_b);
    put_tensor(out, model.encoder.params.global_w);
    put_tensor(out, model.emission.w);
    put_tensor(out, model.emission.b);
    if (model.hp.tagging == TaggingMode::crf) put_tensor(out, model.crf.a);
    put_tensor(out, model.span.len_embed);
    put_tensor(out, model.span.w);
    put_tensor(out, model.span.b);
    if (!out.good()) fail(ErrorKind::io, "short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::io, "cannot move " + tmp + " to " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path);

  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    fail(ErrorKind::parse, path + " is not a checkpoint");
  if (get_u64(in) != kVersion)
    fail(ErrorKind::parse, path + ": unsupported checkpoint version");

  Model model;
  model.trained_mode = static_cast<RunMode>(get_u64(in));
  model.hp = get_hp(in);
  model.hp.validate();

  std::vector<std::string> type_names(get_u64(in));
  for (std::string& t : type_names) t = get_str(in);
  model.scheme = LabelScheme::from_types(type_names);
  model.types = TypeSet::from_names(type_names);

  std::vector<std::string> words(get_u64(in));
  for (std::string& w : words) w = get_str(in);
  model.encoder.cfg = {model.hp.embed_dim, model.hp.window_radius};
  model.encoder.vocab = SubtokenVocab::from_words(std::move(words), model.hp.chunk_len);

  get_tensor(in, model.encoder.params.embed);
  get_tensor(in, model.encoder.params.mix_w);
  get_tensor(in, model.encoder.params.mix_b);
  get_tensor(in, model.encoder.params.global_w);
  get_tensor(in, model.emission.w);
  get_tensor(in, model.emission.b);
  if (model.hp.tagging == TaggingMode::crf) get_tensor(in, model.crf.a);
  get_tensor(in, model.span.len_embed);
  get_tensor(in, model.span.w);
  get_tensor(in, model.span.b);

  const int d = model.hp.embed_dim;
  const int rep_dim = span_rep_dim(model.hp.representation, d, model.hp.len_embed_dim);
  if (model.encoder.params.embed.rows() != model.encoder.vocab.size() ||
      model.encoder.params.embed.cols() != d ||
      model.encoder.params.mix_w.rows() != d ||
      model.encoder.params.mix_w.cols() != 2 * d ||
      model.encoder.params.global_w.rows() != d ||
      model.emission.w.rows() != model.scheme.size() ||
      model.emission.w.cols() != d ||
      model.span.len_embed.rows() != model.hp.span_threshold ||
      model.span.w.rows() != model.types.size() || model.span.w.cols() != rep_dim)
    fail(ErrorKind::parse, path + ": checkpoint shapes are inconsistent");
  return model;
}

}  // namespace blner
