#include "crystalite/io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace crystalite {

std::string crystal_to_json_line(const Crystal& c) {
  nlohmann::json j;
  j["atomic_numbers"] = c.atomic_numbers;
  auto coords = nlohmann::json::array();
  for (const auto& f : c.frac_coords) coords.push_back({f[0], f[1], f[2]});
  j["frac_coords"] = coords;
  auto lat = nlohmann::json::array();
  for (const auto& row : c.lattice) lat.push_back({row[0], row[1], row[2]});
  j["lattice"] = lat;
  return j.dump();
}

Crystal crystal_from_json_line(const std::string& line) {
  const nlohmann::json j = nlohmann::json::parse(line);
  Crystal c;
  c.atomic_numbers = j.at("atomic_numbers").get<std::vector<int>>();
  for (const auto& f : j.at("frac_coords")) {
    if (f.size() != 3) throw invalid_input("frac_coords entry is not a 3-vector");
    c.frac_coords.push_back(mod1(Vec3{f[0].get<double>(), f[1].get<double>(), f[2].get<double>()}));
  }
  const auto& lat = j.at("lattice");
  if (lat.size() != 3) throw invalid_input("lattice is not 3x3");
  for (int i = 0; i < 3; ++i) {
    if (lat[i].size() != 3) throw invalid_input("lattice is not 3x3");
    for (int k = 0; k < 3; ++k) c.lattice[i][k] = lat[i][k].get<double>();
  }
  if (c.frac_coords.size() != c.atomic_numbers.size())
    throw invalid_input("coordinate/type count mismatch");
  return c;
}

std::vector<Crystal> read_crystals_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot open " + path);
  std::vector<Crystal> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      if (j.is_object() && j.contains("_header")) continue;
    } catch (const nlohmann::json::exception& e) {
      throw invalid_input(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    try {
      out.push_back(crystal_from_json_line(line));
    } catch (const std::exception& e) {
      throw invalid_input(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_crystals_jsonl(const std::string& path, const std::vector<Crystal>& crystals,
                          const std::string& tool_version, const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw invalid_input("cannot write " + path);
  nlohmann::json header;
  header["_header"] = {{"tool_version", tool_version}, {"config_hash", config_hash}};
  out << header.dump() << "\n";
  for (const auto& c : crystals) out << crystal_to_json_line(c) << "\n";
}

}  // namespace crystalite
