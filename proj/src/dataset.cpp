#include "crystalite/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "crystalite/io.hpp"

namespace crystalite {

void rebuild_stats(Corpus& corpus) {
  corpus.atom_count_hist.clear();
  corpus.element_set.clear();
  if (corpus.crystals.empty()) return;
  std::map<int, int> counts;
  for (const auto& c : corpus.crystals) {
    counts[c.natoms()]++;
    for (int z : c.atomic_numbers) corpus.element_set.push_back(z);
  }
  const double total = static_cast<double>(corpus.crystals.size());
  for (const auto& [n, cnt] : counts) corpus.atom_count_hist[n] = cnt / total;
  std::sort(corpus.element_set.begin(), corpus.element_set.end());
  corpus.element_set.erase(std::unique(corpus.element_set.begin(), corpus.element_set.end()),
                           corpus.element_set.end());
}

Corpus load_corpus(const std::string& path, int max_atoms) {
  Corpus corpus;
  const std::vector<Crystal> raw = read_crystals_jsonl(path);
  for (size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].natoms() > max_atoms) {
      corpus.warnings.push_back("crystal " + std::to_string(i) + " skipped: " +
                                std::to_string(raw[i].natoms()) + " atoms exceeds max " +
                                std::to_string(max_atoms));
      continue;
    }
    corpus.crystals.push_back(canonicalize(raw[i]));
  }
  if (corpus.crystals.empty()) throw invalid_input(path + ": empty corpus");
  rebuild_stats(corpus);
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path, const std::string& tool_version,
                 const std::string& config_hash) {
  write_crystals_jsonl(path, corpus.crystals, tool_version, config_hash);
}

Crystal augment_translation(const Crystal& c, Rng& rng) {
  Vec3 t = {rng.uniform(), rng.uniform(), rng.uniform()};
  Crystal out = c;
  for (auto& f : out.frac_coords)
    for (int k = 0; k < 3; ++k) f[k] = mod1(f[k] + t[k]);
  return out;
}

int sample_atom_count(const Corpus& corpus, Rng& rng) {
  if (corpus.atom_count_hist.empty()) throw invalid_input("sample_atom_count: empty corpus");
  const double u = rng.uniform();
  double acc = 0.0;
  int last = corpus.atom_count_hist.begin()->first;
  for (const auto& [n, p] : corpus.atom_count_hist) {
    acc += p;
    last = n;
    if (u < acc) return n;
  }
  return last;  // guard against accumulated rounding
}

std::pair<Corpus, Corpus> split(const Corpus& corpus, double train_fraction, uint64_t seed) {
  if (train_fraction < 0.0 || train_fraction > 1.0)
    throw invalid_input("split: train fraction must be in [0,1]");
  std::vector<int> order(corpus.crystals.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.below(i)]);

  const size_t n_train =
      static_cast<size_t>(std::llround(train_fraction * static_cast<double>(order.size())));
  Corpus train, val;
  for (size_t i = 0; i < order.size(); ++i)
    (i < n_train ? train : val).crystals.push_back(corpus.crystals[order[i]]);
  rebuild_stats(train);
  rebuild_stats(val);
  return {std::move(train), std::move(val)};
}

}  // namespace crystalite
