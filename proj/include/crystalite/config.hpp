#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "crystalite/edm.hpp"
#include "crystalite/model.hpp"
#include "crystalite/sampler.hpp"

namespace crystalite {

// Flat `key = value` configuration. Precedence: command-line flags > env
// (CRYSTALITE_ prefix, dots mapped to underscores) > file.
class RunConfig {
 public:
  static RunConfig from_file(const std::string& path);  // missing file -> error
  RunConfig() = default;

  void overlay_env(const char* prefix = "CRYSTALITE_");
  void set(const std::string& key, const std::string& value);  // highest precedence

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get_str(const std::string& key, const std::string& dflt) const;
  int64_t get_int(const std::string& key, int64_t dflt) const;
  double get_double(const std::string& key, double dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;
  std::optional<double> get_opt_double(const std::string& key) const;

  // FNV-1a over the sorted resolved key=value pairs, hex encoded.
  std::string hash() const;
  std::string resolved_text() const;

 private:
  std::map<std::string, std::string> values_;
};

EdmConfig edm_from_config(const RunConfig& c);
ModelConfig model_from_config(const RunConfig& c);
SamplerConfig sampler_from_config(const RunConfig& c);

}  // namespace crystalite
