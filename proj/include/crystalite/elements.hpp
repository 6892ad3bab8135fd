#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace crystalite {

// Static per-element chemistry facts. Period/group/block follow the 18-group
// table with group 0 reserved for f-block elements; valence occupancies are
// ground-state configurations beyond the noble-gas core (filled (n-1)d
// shells are treated as core for p-block elements, and filled 4f as core
// from Hf onward).
struct ElementFacts {
  int z;
  const char* symbol;
  double mass;      // amu
  int period;       // 1..7
  int group;        // 0..18, 0 = f-block
  char block;       // 's', 'p', 'd', 'f'
  int val_s;        // 0..2
  int val_p;        // 0..6
  int val_d;        // 0..10
  int val_f;        // 0..14
  bool metal;
  std::array<int8_t, 8> ox_states;  // common oxidation states, zero-padded
  int n_ox;
};

constexpr int kMaxZ = 94;

const ElementFacts& element_facts(int z);        // throws invalid_input if unsupported
bool element_supported(int z);
int element_from_symbol(const std::string& sym); // 0 if unknown

// The 89 element types present in MP-20 (Z in [1,94] without Po..Ra).
const std::vector<int>& mp20_element_set();

// Hash of the shipped facts table; stored with token tables so stale
// serializations are detected.
uint64_t facts_version_hash();

}  // namespace crystalite
