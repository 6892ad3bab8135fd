#pragma once

#include <string>
#include <vector>

#include "crystalite/geometry.hpp"

namespace crystalite {

// Crystal JSON-lines: one object per line with keys atomic_numbers,
// frac_coords, lattice. A leading {"_header": {...}} line carries tool
// version and config hash and is skipped on read. The loader wraps
// coordinates into [0,1) defensively.
std::vector<Crystal> read_crystals_jsonl(const std::string& path);

void write_crystals_jsonl(const std::string& path, const std::vector<Crystal>& crystals,
                          const std::string& tool_version, const std::string& config_hash);

std::string crystal_to_json_line(const Crystal& c);
Crystal crystal_from_json_line(const std::string& line);

}  // namespace crystalite
