#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crystalite/mat.hpp"

namespace crystalite {

constexpr int kDescriptorDim = 34;  // 7 + 19 + 4 + 4

// Raw chemically structured element descriptor:
// [onehot7(period-1), onehot19(group), onehot4(block), s/2, p/6, d/10, f/14].
std::vector<double> raw_descriptor(int z);

// Per-element prototype vectors plus the statistics needed to rebuild them.
// Immutable after construction.
struct TokenTable {
  std::vector<int> elements;     // supported Z, ascending
  int d_h = 0;                   // token dimension (34 raw, d_h when PCA)
  bool use_pca = false;
  std::vector<double> mean;      // 34
  std::vector<double> std_dev;   // 34, near-zero entries replaced by 1
  Mat pca_basis;                 // 34 x d_h, orthonormal columns (empty if raw)
  Mat raw_prototypes;            // |elements| x 34, unit rows
  Mat prototypes;                // |elements| x d_h, unit rows (the decode table)
  uint64_t facts_hash = 0;

  int index_of(int z) const;     // -1 if unsupported
};

// Standardizes descriptors over the element set, rebalances the four feature
// groups by |G|^{-1/2}, l2-normalizes, and optionally projects the balanced
// descriptors onto the top d_h principal directions before normalizing.
TokenTable build_table(const std::vector<int>& element_set, int d_h, bool use_pca);

// Row i of the result is the prototype of atomic_numbers[i].
Mat encode(const std::vector<int>& atomic_numbers, const TokenTable& table);

// Nearest-prototype (cosine) decoding; ties go to the smallest atomic number.
int decode(const double* h_hat, int n, const TokenTable& table);
int decode(const std::vector<double>& h_hat, const TokenTable& table);

std::string token_table_to_json(const TokenTable& table);
TokenTable token_table_from_json(const std::string& json_text);

}  // namespace crystalite
