#pragma once

#include <map>
#include <string>
#include <vector>

#include "crystalite/geometry.hpp"
#include "crystalite/rng.hpp"

namespace crystalite {

struct Corpus {
  std::vector<Crystal> crystals;             // canonicalized
  std::map<int, double> atom_count_hist;     // N -> probability
  std::vector<int> element_set;              // sorted distinct Z
  std::vector<std::string> warnings;
};

// Loads and canonicalizes a JSON-lines corpus. Parse errors carry line
// numbers; crystals with more than max_atoms are skipped with a warning.
Corpus load_corpus(const std::string& path, int max_atoms = 20);

void save_corpus(const Corpus& corpus, const std::string& path, const std::string& tool_version,
                 const std::string& config_hash);

// Random global translation of the fractional coordinates, t ~ U[0,1)^3.
Crystal augment_translation(const Crystal& c, Rng& rng);

// Draw N from the empirical atom-count distribution.
int sample_atom_count(const Corpus& corpus, Rng& rng);

// Deterministic shuffled split; fractions are (train, val) summing to 1.
std::pair<Corpus, Corpus> split(const Corpus& corpus, double train_fraction, uint64_t seed);

// Rebuilds histogram and element inventory from the crystal list.
void rebuild_stats(Corpus& corpus);

}  // namespace crystalite
