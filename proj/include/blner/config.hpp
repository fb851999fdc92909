#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "blner/model.hpp"

namespace blner {

// Flat key=value pairs; '#' comments and blank lines are skipped. Duplicate
// keys raise ErrorKind::config, later layers override earlier ones instead.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(std::istream& in);
ConfigMap parse_config_text(const std::string& text);
ConfigMap read_config_file(const std::string& path);

// `over` wins on shared keys.
ConfigMap layer_configs(const ConfigMap& base, const ConfigMap& over);

// Typed lookups; a present but malformed value raises ErrorKind::config.
long config_int(const ConfigMap& cfg, const std::string& key, long fallback);
double config_double(const ConfigMap& cfg, const std::string& key, double fallback);
std::string config_string(const ConfigMap& cfg, const std::string& key,
                          const std::string& fallback);

struct RunConfig {
  Hyperparams hp;
  RunMode mode = RunMode::bl_seq;
};

// Consumes every recognized key and rejects unknown ones so typos fail fast.
RunConfig apply_config(const ConfigMap& cfg);

// One key=value line per field in a fixed order, for logging the settings a
// run actually used.
std::string resolved_config(const RunConfig& run);

}  // namespace blner
