#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "crystalite/dataset.hpp"
#include "crystalite/evaluation.hpp"
#include "crystalite/io.hpp"
#include "test_util.hpp"

using namespace crystalite;
namespace tu = crystalite::testutil;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("dataset_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& l : lines) out << l << "\n";
}

}  // namespace

TEST_SUITE_BEGIN("dataset");

TEST_CASE("load_corpus counts, histogram, warnings, errors") {
  TempFile f("basic.jsonl");
  const std::vector<Crystal> toy = tu::make_toy_corpus();
  std::vector<std::string> lines;
  lines.push_back(crystal_to_json_line(toy[0]));  // N = 2
  lines.push_back(crystal_to_json_line(toy[1]));  // N = 2
  lines.push_back(crystal_to_json_line(toy[9]));  // N = 3
  write_lines(f.path, lines);

  const Corpus corpus = load_corpus(f.path);
  CHECK(corpus.crystals.size() == 3);
  CHECK(corpus.atom_count_hist.at(2) == doctest::Approx(2.0 / 3.0));
  CHECK(corpus.atom_count_hist.at(3) == doctest::Approx(1.0 / 3.0));
  double total = 0.0;
  for (const auto& [n, p] : corpus.atom_count_hist) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  TempFile empty("empty.jsonl");
  write_lines(empty.path, {});
  CHECK_THROWS_AS(load_corpus(empty.path), invalid_input);

  TempFile bad("bad.jsonl");
  write_lines(bad.path, {crystal_to_json_line(toy[0]), "{not json"});
  try {
    load_corpus(bad.path);
    FAIL("expected parse error");
  } catch (const invalid_input& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);  // line number
  }

  // Oversized crystals are skipped with a warning.
  Crystal big = toy[0];
  for (int i = 0; i < 30; ++i) {
    big.atomic_numbers.push_back(8);
    big.frac_coords.push_back({i / 64.0, i / 32.0 - std::floor(i / 32.0), 0.125});
  }
  for (auto& fr : big.frac_coords) fr = mod1(fr);
  TempFile mixed("mixed.jsonl");
  write_lines(mixed.path, {crystal_to_json_line(toy[0]), crystal_to_json_line(big)});
  const Corpus skipped = load_corpus(mixed.path, 20);
  CHECK(skipped.crystals.size() == 1);
  REQUIRE(skipped.warnings.size() == 1);
  CHECK(skipped.warnings[0].find("exceeds max") != std::string::npos);
}

TEST_CASE("corpus round trip through save/load is canonical-identical") {
  TempFile f("roundtrip.jsonl");
  TempFile f2("roundtrip2.jsonl");
  const std::vector<Crystal> toy = tu::make_toy_corpus();
  std::vector<std::string> lines;
  for (const auto& c : toy) lines.push_back(crystal_to_json_line(c));
  write_lines(f.path, lines);

  const Corpus a = load_corpus(f.path);
  save_corpus(a, f2.path, "test", "hash");
  const Corpus b = load_corpus(f2.path);
  REQUIRE(a.crystals.size() == b.crystals.size());
  for (size_t i = 0; i < a.crystals.size(); ++i) {
    CHECK(a.crystals[i].atomic_numbers == b.crystals[i].atomic_numbers);
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 3; ++k)
        CHECK(a.crystals[i].lattice[r][k] == b.crystals[i].lattice[r][k]);
    for (int j = 0; j < a.crystals[i].natoms(); ++j)
      for (int k = 0; k < 3; ++k)
        CHECK(a.crystals[i].frac_coords[j][k] == b.crystals[i].frac_coords[j][k]);
  }
}

TEST_CASE("augment_translation preserves structure") {
  Rng rng(1);
  const std::vector<Crystal> toy = tu::make_toy_corpus();
  const Crystal& c = toy[10];

  const Crystal moved = augment_translation(c, rng);
  CHECK(moved.atomic_numbers == c.atomic_numbers);
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k) CHECK(moved.lattice[r][k] == c.lattice[r][k]);
  for (const auto& f : moved.frac_coords)
    for (double v : f) {
      CHECK(v >= 0.0);
      CHECK(v < 1.0);
    }
  for (int i = 0; i < c.natoms(); ++i)
    for (int j = i + 1; j < c.natoms(); ++j)
      CHECK(min_image(c.frac_coords[i], c.frac_coords[j], c.lattice, 2).cart_dist ==
            doctest::Approx(
                min_image(moved.frac_coords[i], moved.frac_coords[j], moved.lattice, 2).cart_dist)
                .epsilon(1e-12));
  CHECK(match(c, moved, MatchTolerances{}));
}

TEST_CASE("sample_atom_count follows the histogram") {
  Corpus corpus;
  corpus.atom_count_hist = {{2, 0.25}, {3, 0.5}, {5, 0.25}};
  Rng rng(2);
  int counts[6] = {0};
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[sample_atom_count(corpus, rng)]++;
  CHECK(std::abs(counts[2] / static_cast<double>(draws) - 0.25) < 0.01);
  CHECK(std::abs(counts[3] / static_cast<double>(draws) - 0.5) < 0.01);
  CHECK(std::abs(counts[5] / static_cast<double>(draws) - 0.25) < 0.01);
  CHECK(counts[0] + counts[1] + counts[4] == 0);

  Corpus single;
  single.atom_count_hist = {{4, 1.0}};
  for (int i = 0; i < 100; ++i) CHECK(sample_atom_count(single, rng) == 4);
}

TEST_CASE("split is deterministic, disjoint, exhaustive") {
  Corpus corpus;
  corpus.crystals = tu::make_toy_corpus();
  rebuild_stats(corpus);

  const auto [train_all, val_none] = split(corpus, 1.0, 9);
  CHECK(train_all.crystals.size() == corpus.crystals.size());
  CHECK(val_none.crystals.empty());

  const auto [t1, v1] = split(corpus, 0.75, 9);
  const auto [t2, v2] = split(corpus, 0.75, 9);
  REQUIRE(t1.crystals.size() == t2.crystals.size());
  CHECK(t1.crystals.size() + v1.crystals.size() == corpus.crystals.size());
  for (size_t i = 0; i < t1.crystals.size(); ++i)
    CHECK(t1.crystals[i].atomic_numbers == t2.crystals[i].atomic_numbers);

  // Disjoint + exhaustive by composition (toy compositions are unique).
  std::vector<std::vector<int>> seen;
  for (const auto& c : t1.crystals) seen.push_back(c.atomic_numbers);
  for (const auto& c : v1.crystals) seen.push_back(c.atomic_numbers);
  std::sort(seen.begin(), seen.end());
  CHECK(std::unique(seen.begin(), seen.end()) == seen.end());
  CHECK(seen.size() == corpus.crystals.size());
}

TEST_CASE("canonicalization idempotence over the corpus loader") {
  TempFile f("canon.jsonl");
  const std::vector<Crystal> toy = tu::make_toy_corpus();
  std::vector<std::string> lines;
  for (const auto& c : toy) lines.push_back(crystal_to_json_line(c));
  write_lines(f.path, lines);
  const Corpus corpus = load_corpus(f.path);
  for (const auto& c : corpus.crystals) {
    const Crystal again = canonicalize(c);
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 3; ++k)
        CHECK(c.lattice[r][k] == doctest::Approx(again.lattice[r][k]).epsilon(1e-12));
  }
}

TEST_CASE("augmentation preserves the fingerprint") {
  Rng rng(4);
  const std::vector<Crystal> toy = tu::make_toy_corpus();
  for (int t = 0; t < 5; ++t) {
    const Crystal& c = toy[t * 3];
    const Crystal moved = augment_translation(c, rng);
    const Fingerprint a = fingerprint(c);
    const Fingerprint b = fingerprint(moved);
    CHECK(a.reduced_composition == b.reduced_composition);
    REQUIRE(a.norm_dists.size() == b.norm_dists.size());
    for (size_t i = 0; i < a.norm_dists.size(); ++i)
      CHECK(a.norm_dists[i] == doctest::Approx(b.norm_dists[i]).epsilon(1e-9));
  }
}

TEST_SUITE_END();
