#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "crystalite/geometry.hpp"
#include "crystalite/mat.hpp"
#include "crystalite/rng.hpp"

namespace crystalite::testutil {

// Dyadic random value in [0,1): a multiple of 2^-20. Sums and integer shifts
// of these are exact in doubles, which the bit-exactness properties rely on.
inline double dyadic(Rng& rng) {
  return static_cast<double>(rng.next_u64() >> 44) * 0x1.0p-20;
}

inline Vec3 dyadic_vec(Rng& rng) { return {dyadic(rng), dyadic(rng), dyadic(rng)}; }

// Moderately conditioned random cell: lower-triangular with diagonal in
// [2, 6] and shear terms up to +-1.5.
inline Mat3 random_cell(Rng& rng) {
  Mat3 l{};
  l[0][0] = 2.0 + 4.0 * rng.uniform();
  l[1][1] = 2.0 + 4.0 * rng.uniform();
  l[2][2] = 2.0 + 4.0 * rng.uniform();
  l[1][0] = 3.0 * (rng.uniform() - 0.5);
  l[2][0] = 3.0 * (rng.uniform() - 0.5);
  l[2][1] = 3.0 * (rng.uniform() - 0.5);
  return l;
}

// Same lattice in a deliberately ugly basis: applies random elementary row
// operations (unimodular), keeping the represented lattice identical.
inline Mat3 skew_basis(const Mat3& l, Rng& rng, int ops = 6) {
  Mat3 out = l;
  for (int t = 0; t < ops; ++t) {
    const int i = static_cast<int>(rng.below(3));
    int j = static_cast<int>(rng.below(3));
    if (i == j) j = (j + 1) % 3;
    const int m = 1 + static_cast<int>(rng.below(2));
    const double sign = rng.uniform() < 0.5 ? 1.0 : -1.0;
    for (int k = 0; k < 3; ++k) out[i][k] += sign * m * out[j][k];
  }
  return out;
}

// Independent brute-force minimum image: scans offsets in {-R..R}^3 and
// measures Cartesian distances directly (no Gram quadratic form).
inline MinImageResult oracle_min_image(const Vec3& fi, const Vec3& fj, const Mat3& l, int radius) {
  MinImageResult best;
  bool first = true;
  for (int r0 = -radius; r0 <= radius; ++r0)
    for (int r1 = -radius; r1 <= radius; ++r1)
      for (int r2 = -radius; r2 <= radius; ++r2) {
        const Vec3 d = {fi[0] - fj[0] + r0, fi[1] - fj[1] + r1, fi[2] - fj[2] + r2};
        const Vec3 x = cartesian(d, l);
        const double dist = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        if (first || dist < best.cart_dist - 1e-15) {
          first = false;
          best.delta_frac = d;
          best.cart_dist = dist;
        }
      }
  best.norm_dist = best.cart_dist / cell_scale(l);
  return best;
}

struct ToyEntry {
  std::vector<int> z;
  std::vector<Vec3> f;
  double a, b, c;       // orthorhombic diagonal
  double shear = 0.0;   // l[1][0]
};

// 16 small crystals with pairwise-distinct element sets; dyadic coordinates.
inline std::vector<Crystal> make_toy_corpus() {
  const std::vector<ToyEntry> entries = {
      {{11, 17}, {{0, 0, 0}, {0.5, 0.5, 0.5}}, 4.0, 4.0, 4.0},
      {{3, 9}, {{0, 0, 0}, {0.5, 0.5, 0.5}}, 3.5, 3.5, 3.5},
      {{19, 35}, {{0, 0, 0}, {0.5, 0.5, 0.5}}, 4.75, 4.75, 4.75},
      {{12, 8}, {{0, 0, 0}, {0.5, 0.5, 0.5}}, 3.75, 3.75, 3.75},
      {{20, 16}, {{0, 0, 0}, {0.5, 0.5, 0.5}}, 4.5, 4.5, 4.5},
      {{30, 34}, {{0, 0, 0}, {0.25, 0.25, 0.25}}, 4.25, 4.25, 4.25},
      {{13, 15}, {{0, 0, 0}, {0.25, 0.25, 0.25}}, 4.375, 4.375, 4.375},
      {{26, 8}, {{0, 0, 0}, {0.5, 0.5, 0}}, 3.25, 3.25, 4.0},
      {{29, 8}, {{0, 0, 0}, {0.5, 0, 0.5}}, 3.5, 3.5, 4.25, 0.5},
      {{38, 22, 8}, {{0, 0, 0}, {0.5, 0.5, 0.5}, {0.5, 0.5, 0}}, 4.0, 4.0, 4.5},
      {{56, 40, 16}, {{0, 0, 0}, {0.5, 0.5, 0.5}, {0.5, 0, 0.25}}, 4.5, 4.5, 5.0},
      {{55, 82, 17}, {{0, 0, 0}, {0.5, 0.5, 0.5}, {0, 0.5, 0.25}}, 5.0, 5.0, 5.5},
      {{23, 7}, {{0, 0, 0}, {0.5, 0.5, 0.5}}, 4.125, 4.125, 4.125, 0.25},
      {{3, 13, 8}, {{0, 0, 0}, {0.5, 0.5, 0.5}, {0.25, 0.75, 0.25}}, 4.25, 4.5, 4.75},
      {{19, 25, 9}, {{0, 0, 0}, {0.5, 0.5, 0.25}, {0.25, 0.25, 0.75}}, 4.75, 4.25, 5.25},
      {{37, 47, 34, 8},
       {{0, 0, 0}, {0.5, 0.5, 0.5}, {0.5, 0, 0.25}, {0, 0.5, 0.75}},
       5.25, 5.0, 5.5},
  };
  std::vector<Crystal> out;
  for (const auto& e : entries) {
    Crystal c;
    c.atomic_numbers = e.z;
    c.frac_coords = e.f;
    c.lattice = {{{e.a, 0, 0}, {e.shear, e.b, 0}, {0, 0, e.c}}};
    out.push_back(std::move(c));
  }
  return out;
}

inline Mat3 invert3(const Mat3& m) {
  const double d = det3(m);
  Mat3 inv{};
  inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
  inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d;
  inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d;
  return inv;
}

inline Mat coords_as_mat(const Crystal& c) {
  Mat f(c.natoms(), 3);
  for (int i = 0; i < c.natoms(); ++i)
    for (int k = 0; k < 3; ++k) f(i, k) = c.frac_coords[i][k];
  return f;
}

}  // namespace crystalite::testutil
