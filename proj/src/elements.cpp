#include "crystalite/elements.hpp"

#include <algorithm>
#include <unordered_map>

#include "crystalite/geometry.hpp"  // invalid_input

namespace crystalite {

namespace {

// z, symbol, mass, period, group, block, s, p, d, f, metal, {ox...}, n_ox
constexpr ElementFacts kFacts[] = {
    {1, "H", 1.008, 1, 1, 's', 1, 0, 0, 0, false, {-1, 1}, 2},
    {2, "He", 4.0026, 1, 18, 's', 2, 0, 0, 0, false, {}, 0},
    {3, "Li", 6.94, 2, 1, 's', 1, 0, 0, 0, true, {1}, 1},
    {4, "Be", 9.0122, 2, 2, 's', 2, 0, 0, 0, true, {2}, 1},
    {5, "B", 10.81, 2, 13, 'p', 2, 1, 0, 0, false, {-3, 3}, 2},
    {6, "C", 12.011, 2, 14, 'p', 2, 2, 0, 0, false, {-4, -2, 2, 4}, 4},
    {7, "N", 14.007, 2, 15, 'p', 2, 3, 0, 0, false, {-3, 3, 5}, 3},
    {8, "O", 15.999, 2, 16, 'p', 2, 4, 0, 0, false, {-2}, 1},
    {9, "F", 18.998, 2, 17, 'p', 2, 5, 0, 0, false, {-1}, 1},
    {10, "Ne", 20.180, 2, 18, 'p', 2, 6, 0, 0, false, {}, 0},
    {11, "Na", 22.990, 3, 1, 's', 1, 0, 0, 0, true, {1}, 1},
    {12, "Mg", 24.305, 3, 2, 's', 2, 0, 0, 0, true, {2}, 1},
    {13, "Al", 26.982, 3, 13, 'p', 2, 1, 0, 0, true, {3}, 1},
    {14, "Si", 28.085, 3, 14, 'p', 2, 2, 0, 0, false, {-4, 4}, 2},
    {15, "P", 30.974, 3, 15, 'p', 2, 3, 0, 0, false, {-3, 3, 5}, 3},
    {16, "S", 32.06, 3, 16, 'p', 2, 4, 0, 0, false, {-2, 2, 4, 6}, 4},
    {17, "Cl", 35.45, 3, 17, 'p', 2, 5, 0, 0, false, {-1, 1, 3, 5, 7}, 5},
    {18, "Ar", 39.948, 3, 18, 'p', 2, 6, 0, 0, false, {}, 0},
    {19, "K", 39.098, 4, 1, 's', 1, 0, 0, 0, true, {1}, 1},
    {20, "Ca", 40.078, 4, 2, 's', 2, 0, 0, 0, true, {2}, 1},
    {21, "Sc", 44.956, 4, 3, 'd', 2, 0, 1, 0, true, {3}, 1},
    {22, "Ti", 47.867, 4, 4, 'd', 2, 0, 2, 0, true, {2, 3, 4}, 3},
    {23, "V", 50.942, 4, 5, 'd', 2, 0, 3, 0, true, {2, 3, 4, 5}, 4},
    {24, "Cr", 51.996, 4, 6, 'd', 1, 0, 5, 0, true, {2, 3, 6}, 3},
    {25, "Mn", 54.938, 4, 7, 'd', 2, 0, 5, 0, true, {2, 3, 4, 7}, 4},
    {26, "Fe", 55.845, 4, 8, 'd', 2, 0, 6, 0, true, {2, 3}, 2},
    {27, "Co", 58.933, 4, 9, 'd', 2, 0, 7, 0, true, {2, 3}, 2},
    {28, "Ni", 58.693, 4, 10, 'd', 2, 0, 8, 0, true, {2, 3}, 2},
    {29, "Cu", 63.546, 4, 11, 'd', 1, 0, 10, 0, true, {1, 2}, 2},
    {30, "Zn", 65.38, 4, 12, 'd', 2, 0, 10, 0, true, {2}, 1},
    {31, "Ga", 69.723, 4, 13, 'p', 2, 1, 0, 0, true, {3}, 1},
    {32, "Ge", 72.630, 4, 14, 'p', 2, 2, 0, 0, false, {-4, 2, 4}, 3},
    {33, "As", 74.922, 4, 15, 'p', 2, 3, 0, 0, false, {-3, 3, 5}, 3},
    {34, "Se", 78.971, 4, 16, 'p', 2, 4, 0, 0, false, {-2, 2, 4, 6}, 4},
    {35, "Br", 79.904, 4, 17, 'p', 2, 5, 0, 0, false, {-1, 1, 5}, 3},
    {36, "Kr", 83.798, 4, 18, 'p', 2, 6, 0, 0, false, {}, 0},
    {37, "Rb", 85.468, 5, 1, 's', 1, 0, 0, 0, true, {1}, 1},
    {38, "Sr", 87.62, 5, 2, 's', 2, 0, 0, 0, true, {2}, 1},
    {39, "Y", 88.906, 5, 3, 'd', 2, 0, 1, 0, true, {3}, 1},
    {40, "Zr", 91.224, 5, 4, 'd', 2, 0, 2, 0, true, {2, 3, 4}, 3},
    {41, "Nb", 92.906, 5, 5, 'd', 1, 0, 4, 0, true, {3, 5}, 2},
    {42, "Mo", 95.95, 5, 6, 'd', 1, 0, 5, 0, true, {2, 3, 4, 6}, 4},
    {43, "Tc", 98.0, 5, 7, 'd', 2, 0, 5, 0, true, {4, 7}, 2},
    {44, "Ru", 101.07, 5, 8, 'd', 1, 0, 7, 0, true, {2, 3, 4}, 3},
    {45, "Rh", 102.91, 5, 9, 'd', 1, 0, 8, 0, true, {3}, 1},
    {46, "Pd", 106.42, 5, 10, 'd', 0, 0, 10, 0, true, {2, 4}, 2},
    {47, "Ag", 107.87, 5, 11, 'd', 1, 0, 10, 0, true, {1}, 1},
    {48, "Cd", 112.41, 5, 12, 'd', 2, 0, 10, 0, true, {2}, 1},
    {49, "In", 114.82, 5, 13, 'p', 2, 1, 0, 0, true, {1, 3}, 2},
    {50, "Sn", 118.71, 5, 14, 'p', 2, 2, 0, 0, true, {2, 4}, 2},
    {51, "Sb", 121.76, 5, 15, 'p', 2, 3, 0, 0, false, {-3, 3, 5}, 3},
    {52, "Te", 127.60, 5, 16, 'p', 2, 4, 0, 0, false, {-2, 2, 4, 6}, 4},
    {53, "I", 126.90, 5, 17, 'p', 2, 5, 0, 0, false, {-1, 1, 5, 7}, 4},
    {54, "Xe", 131.29, 5, 18, 'p', 2, 6, 0, 0, false, {}, 0},
    {55, "Cs", 132.91, 6, 1, 's', 1, 0, 0, 0, true, {1}, 1},
    {56, "Ba", 137.33, 6, 2, 's', 2, 0, 0, 0, true, {2}, 1},
    {57, "La", 138.91, 6, 3, 'd', 2, 0, 1, 0, true, {3}, 1},
    {58, "Ce", 140.12, 6, 0, 'f', 2, 0, 1, 1, true, {3, 4}, 2},
    {59, "Pr", 140.91, 6, 0, 'f', 2, 0, 0, 3, true, {3}, 1},
    {60, "Nd", 144.24, 6, 0, 'f', 2, 0, 0, 4, true, {3}, 1},
    {61, "Pm", 145.0, 6, 0, 'f', 2, 0, 0, 5, true, {3}, 1},
    {62, "Sm", 150.36, 6, 0, 'f', 2, 0, 0, 6, true, {2, 3}, 2},
    {63, "Eu", 151.96, 6, 0, 'f', 2, 0, 0, 7, true, {2, 3}, 2},
    {64, "Gd", 157.25, 6, 0, 'f', 2, 0, 1, 7, true, {3}, 1},
    {65, "Tb", 158.93, 6, 0, 'f', 2, 0, 0, 9, true, {3, 4}, 2},
    {66, "Dy", 162.50, 6, 0, 'f', 2, 0, 0, 10, true, {3}, 1},
    {67, "Ho", 164.93, 6, 0, 'f', 2, 0, 0, 11, true, {3}, 1},
    {68, "Er", 167.26, 6, 0, 'f', 2, 0, 0, 12, true, {3}, 1},
    {69, "Tm", 168.93, 6, 0, 'f', 2, 0, 0, 13, true, {2, 3}, 2},
    {70, "Yb", 173.05, 6, 0, 'f', 2, 0, 0, 14, true, {2, 3}, 2},
    {71, "Lu", 174.97, 6, 3, 'd', 2, 0, 1, 14, true, {3}, 1},
    {72, "Hf", 178.49, 6, 4, 'd', 2, 0, 2, 0, true, {4}, 1},
    {73, "Ta", 180.95, 6, 5, 'd', 2, 0, 3, 0, true, {5}, 1},
    {74, "W", 183.84, 6, 6, 'd', 2, 0, 4, 0, true, {4, 6}, 2},
    {75, "Re", 186.21, 6, 7, 'd', 2, 0, 5, 0, true, {4, 7}, 2},
    {76, "Os", 190.23, 6, 8, 'd', 2, 0, 6, 0, true, {3, 4}, 2},
    {77, "Ir", 192.22, 6, 9, 'd', 2, 0, 7, 0, true, {3, 4}, 2},
    {78, "Pt", 195.08, 6, 10, 'd', 1, 0, 9, 0, true, {2, 4}, 2},
    {79, "Au", 196.97, 6, 11, 'd', 1, 0, 10, 0, true, {1, 3}, 2},
    {80, "Hg", 200.59, 6, 12, 'd', 2, 0, 10, 0, true, {1, 2}, 2},
    {81, "Tl", 204.38, 6, 13, 'p', 2, 1, 0, 0, true, {1, 3}, 2},
    {82, "Pb", 207.2, 6, 14, 'p', 2, 2, 0, 0, true, {2, 4}, 2},
    {83, "Bi", 208.98, 6, 15, 'p', 2, 3, 0, 0, true, {3, 5}, 2},
    {84, "Po", 209.0, 6, 16, 'p', 2, 4, 0, 0, true, {-2, 2, 4}, 3},
    {85, "At", 210.0, 6, 17, 'p', 2, 5, 0, 0, false, {-1, 1}, 2},
    {86, "Rn", 222.0, 6, 18, 'p', 2, 6, 0, 0, false, {}, 0},
    {87, "Fr", 223.0, 7, 1, 's', 1, 0, 0, 0, true, {1}, 1},
    {88, "Ra", 226.0, 7, 2, 's', 2, 0, 0, 0, true, {2}, 1},
    {89, "Ac", 227.0, 7, 3, 'd', 2, 0, 1, 0, true, {3}, 1},
    {90, "Th", 232.04, 7, 0, 'f', 2, 0, 2, 0, true, {4}, 1},
    {91, "Pa", 231.04, 7, 0, 'f', 2, 0, 1, 2, true, {4, 5}, 2},
    {92, "U", 238.03, 7, 0, 'f', 2, 0, 1, 3, true, {3, 4, 5, 6}, 4},
    {93, "Np", 237.0, 7, 0, 'f', 2, 0, 1, 4, true, {3, 4, 5, 6}, 4},
    {94, "Pu", 244.0, 7, 0, 'f', 2, 0, 0, 6, true, {3, 4, 5, 6}, 4},
};

static_assert(sizeof(kFacts) / sizeof(kFacts[0]) == kMaxZ);

}  // namespace

const ElementFacts& element_facts(int z) {
  if (z < 1 || z > kMaxZ) throw invalid_input("unsupported element Z=" + std::to_string(z));
  return kFacts[z - 1];
}

bool element_supported(int z) { return z >= 1 && z <= kMaxZ; }

int element_from_symbol(const std::string& sym) {
  static const auto* index = [] {
    auto* m = new std::unordered_map<std::string, int>();
    for (const auto& f : kFacts) (*m)[f.symbol] = f.z;
    return m;
  }();
  auto it = index->find(sym);
  return it == index->end() ? 0 : it->second;
}

const std::vector<int>& mp20_element_set() {
  static const std::vector<int> set = [] {
    std::vector<int> v;
    for (int z = 1; z <= kMaxZ; ++z)
      if (z < 84 || z > 88) v.push_back(z);  // Po..Ra absent from MP-20
    return v;
  }();
  return set;
}

uint64_t facts_version_hash() {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  auto mix = [&h](uint64_t x) {
    for (int b = 0; b < 8; ++b) {
      h ^= (x >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& f : kFacts) {
    mix(static_cast<uint64_t>(f.z));
    mix(static_cast<uint64_t>(f.period));
    mix(static_cast<uint64_t>(f.group));
    mix(static_cast<uint64_t>(f.block));
    mix(static_cast<uint64_t>(f.val_s * 1000 + f.val_p * 100 + f.val_d * 10 + f.val_f));
  }
  return h;
}

}  // namespace crystalite
