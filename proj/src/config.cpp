#include "crystalite/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>

#include "crystalite/geometry.hpp"

extern char** environ;

namespace crystalite {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string env_key_of(const std::string& key, const std::string& prefix) {
  std::string k = prefix;
  for (char c : key) {
    if (c == '.' || c == '-')
      k += '_';
    else
      k += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return k;
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot open config file " + path);
  RunConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw invalid_input(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw invalid_input(path + ":" + std::to_string(lineno) + ": empty key");
    c.values_[key] = value;
  }
  return c;
}

void RunConfig::overlay_env(const char* prefix) {
  const std::string pfx(prefix);
  // Recognize env vars for keys already present plus any CRYSTALITE_* var,
  // mapped back to a lowercase dotted key.
  for (char** e = environ; e && *e; ++e) {
    const std::string entry(*e);
    if (entry.rfind(pfx, 0) != 0) continue;
    const size_t eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string raw_key = entry.substr(pfx.size(), eq - pfx.size());
    const std::string value = entry.substr(eq + 1);
    // Prefer an existing key whose env form matches (dots and underscores
    // are conflated in env names).
    bool matched = false;
    for (auto& [k, v] : values_) {
      if (env_key_of(k, pfx) == pfx + raw_key) {
        v = value;
        matched = true;
        break;
      }
    }
    if (!matched) {
      std::string key;
      for (char ch : raw_key) key += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      std::replace(key.begin(), key.end(), '_', '.');
      values_[key] = value;
    }
  }
}

void RunConfig::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::string RunConfig::get_str(const std::string& key, const std::string& dflt) const {
  auto it = values_.find(key);
  return it == values_.end() ? dflt : it->second;
}

int64_t RunConfig::get_int(const std::string& key, int64_t dflt) const {
  auto it = values_.find(key);
  if (it == values_.end()) return dflt;
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    throw invalid_input("config: " + key + " is not an integer: " + it->second);
  }
}

double RunConfig::get_double(const std::string& key, double dflt) const {
  auto it = values_.find(key);
  if (it == values_.end()) return dflt;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw invalid_input("config: " + key + " is not a number: " + it->second);
  }
}

bool RunConfig::get_bool(const std::string& key, bool dflt) const {
  auto it = values_.find(key);
  if (it == values_.end()) return dflt;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw invalid_input("config: " + key + " is not a boolean: " + it->second);
}

std::optional<double> RunConfig::get_opt_double(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty() || it->second == "none") return std::nullopt;
  return std::stod(it->second);
}

std::string RunConfig::hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [k, v] : values_) {  // std::map iterates sorted
    mix(k);
    mix("=");
    mix(v);
    mix("\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::resolved_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

EdmConfig edm_from_config(const RunConfig& c) {
  EdmConfig e;
  e.p_mean = c.get_double("p_mean", e.p_mean);
  e.p_std = c.get_double("p_std", e.p_std);
  e.sigma_data_h = c.get_double("sigma_data_h", e.sigma_data_h);
  e.sigma_data_f = c.get_double("sigma_data_f", e.sigma_data_f);
  e.sigma_data_lat = c.get_double("sigma_data_lat", e.sigma_data_lat);
  e.lambda_h = c.get_double("lambda_h", e.lambda_h);
  e.lambda_f = c.get_double("lambda_f", e.lambda_f);
  e.lambda_lat = c.get_double("lambda_lat", e.lambda_lat);
  return e;
}

ModelConfig model_from_config(const RunConfig& c) {
  ModelConfig m;
  m.width = static_cast<int>(c.get_int("model.width", m.width));
  m.layers = static_cast<int>(c.get_int("model.layers", m.layers));
  m.heads = static_cast<int>(c.get_int("model.heads", m.heads));
  m.d_h = static_cast<int>(c.get_int("model.d_h", m.d_h));
  m.coord_fourier = static_cast<int>(c.get_int("model.coord_fourier", m.coord_fourier));
  if (m.width % m.heads != 0) throw invalid_input("config: model.width must divide by heads");
  m.gem.enabled = c.get_bool("gem.enabled", m.gem.enabled);
  m.gem.pbc_radius = static_cast<int>(c.get_int("gem.radius", m.gem.pbc_radius));
  m.gem.fourier_freqs = static_cast<int>(c.get_int("gem.fourier_freqs", m.gem.fourier_freqs));
  m.gem.rbf_count = static_cast<int>(c.get_int("gem.rbf_count", m.gem.rbf_count));
  m.gem.edge_hidden = static_cast<int>(c.get_int("gem.hidden", m.gem.edge_hidden));
  m.gem.gate_enabled = c.get_bool("gem.gate", m.gem.gate_enabled);
  m.gem.distance_bias_enabled = c.get_bool("gem.distance_bias", m.gem.distance_bias_enabled);
  m.gem.edge_bias_enabled = c.get_bool("gem.edge_bias", m.gem.edge_bias_enabled);
  return m;
}

SamplerConfig sampler_from_config(const RunConfig& c) {
  SamplerConfig s;
  s.steps = static_cast<int>(c.get_int("sampler.steps", s.steps));
  s.sigma_min = c.get_double("sampler.sigma_min", s.sigma_min);
  s.sigma_max = c.get_double("sampler.sigma_max", s.sigma_max);
  s.rho = c.get_double("sampler.rho", s.rho);
  s.s_churn = c.get_double("sampler.s_churn", s.s_churn);
  s.s_noise = c.get_double("sampler.s_noise", s.s_noise);
  s.s_min = c.get_double("sampler.s_min", s.s_min);
  s.s_max = c.get_double("sampler.s_max", s.s_max);
  s.aa_h = c.get_opt_double("sampler.aa_types");
  s.aa_f = c.get_opt_double("sampler.aa_coords");
  s.aa_lat = c.get_opt_double("sampler.aa_lattice");
  s.alpha_max = c.get_double("sampler.aa_cap", s.alpha_max);
  return s;
}

}  // namespace crystalite
