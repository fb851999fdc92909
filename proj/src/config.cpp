#include "blner/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "blner/error.hpp"

namespace blner {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string fmt_double(double v) { return nlohmann::json(v).dump(); }

}  // namespace

ConfigMap parse_config(std::istream& in) {
  ConfigMap cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::config,
           "line " + std::to_string(line_no) + ": expected key=value, got '" + body +
               "'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty())
      fail(ErrorKind::config, "line " + std::to_string(line_no) + ": empty key");
    if (!cfg.emplace(key, value).second)
      fail(ErrorKind::config,
           "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }
  return cfg;
}

ConfigMap parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ConfigMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  try {
    return parse_config(in);
  } catch (const Error& e) {
    fail(e.kind(), path + ": " + e.what());
  }
}

ConfigMap layer_configs(const ConfigMap& base, const ConfigMap& over) {
  ConfigMap merged = base;
  for (const auto& [key, value] : over) merged.insert_or_assign(key, value);
  return merged;
}

namespace {

long parse_int(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(value.c_str(), &end, 10);
  if (errno != 0 || end == value.c_str() || *end != '\0')
    fail(ErrorKind::config, "key '" + key + "': '" + value + "' is not an integer");
  return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (errno != 0 || end == value.c_str() || *end != '\0' || value[0] == '-')
    fail(ErrorKind::config,
         "key '" + key + "': '" + value + "' is not a non-negative integer");
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (errno != 0 || end == value.c_str() || *end != '\0' || !std::isfinite(v))
    fail(ErrorKind::config,
         "key '" + key + "': '" + value + "' is not a finite number");
  return v;
}

}  // namespace

long config_int(const ConfigMap& cfg, const std::string& key, long fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : parse_int(key, it->second);
}

double config_double(const ConfigMap& cfg, const std::string& key, double fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : parse_double(key, it->second);
}

std::string config_string(const ConfigMap& cfg, const std::string& key,
                          const std::string& fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

RunConfig apply_config(const ConfigMap& cfg) {
  RunConfig run;
  Hyperparams& hp = run.hp;
  for (const auto& [key, value] : cfg) {
    if (key == "mode")
      run.mode = parse_run_mode(value);
    else if (key == "alpha")
      hp.alpha = parse_double(key, value);
    else if (key == "span_threshold")
      hp.span_threshold = static_cast<int>(parse_int(key, value));
    else if (key == "negative_cap")
      hp.negative_cap = static_cast<int>(parse_int(key, value));
    else if (key == "tagging")
      hp.tagging = parse_tagging_mode(value);
    else if (key == "representation")
      hp.representation = parse_rep_method(value);
    else if (key == "epochs")
      hp.epochs = static_cast<int>(parse_int(key, value));
    else if (key == "batch_size")
      hp.batch_size = static_cast<int>(parse_int(key, value));
    else if (key == "learning_rate")
      hp.learning_rate = parse_double(key, value);
    else if (key == "warmup_ratio")
      hp.warmup_ratio = parse_double(key, value);
    else if (key == "weight_decay")
      hp.weight_decay = parse_double(key, value);
    else if (key == "seed")
      hp.seed = parse_uint(key, value);
    else if (key == "embed_dim")
      hp.embed_dim = static_cast<int>(parse_int(key, value));
    else if (key == "window_radius")
      hp.window_radius = static_cast<int>(parse_int(key, value));
    else if (key == "chunk_len")
      hp.chunk_len = static_cast<int>(parse_int(key, value));
    else if (key == "len_embed_dim")
      hp.len_embed_dim = static_cast<int>(parse_int(key, value));
    else
      fail(ErrorKind::config, "unknown config key '" + key + "'");
  }
  hp.validate();
  return run;
}

std::string resolved_config(const RunConfig& run) {
  const Hyperparams& hp = run.hp;
  std::ostringstream out;
  out << "mode=" << to_string(run.mode) << '\n'
      << "alpha=" << fmt_double(hp.alpha) << '\n'
      << "span_threshold=" << hp.span_threshold << '\n'
      << "negative_cap=" << hp.negative_cap << '\n'
      << "tagging=" << to_string(hp.tagging) << '\n'
      << "representation=" << to_string(hp.representation) << '\n'
      << "epochs=" << hp.epochs << '\n'
      << "batch_size=" << hp.batch_size << '\n'
      << "learning_rate=" << fmt_double(hp.learning_rate) << '\n'
      << "warmup_ratio=" << fmt_double(hp.warmup_ratio) << '\n'
      << "weight_decay=" << fmt_double(hp.weight_decay) << '\n'
      << "seed=" << hp.seed << '\n'
      << "embed_dim=" << hp.embed_dim << '\n'
      << "window_radius=" << hp.window_radius << '\n'
      << "chunk_len=" << hp.chunk_len << '\n'
      << "len_embed_dim=" << hp.len_embed_dim << '\n';
  return out.str();
}

}  // namespace blner
