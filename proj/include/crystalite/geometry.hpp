#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace crystalite {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;  // rows are lattice vectors, Angstrom

// Unconstrained 6-parameter lattice latent. Reconstruction places
// (e^{y0}, e^{y2}, e^{y5}) on the diagonal and (y1, y3, y4) below it, so the
// determinant e^{y0+y2+y5} is always positive.
struct LatticeLatent {
  std::array<double, 6> y{};
};

struct Crystal {
  std::vector<int> atomic_numbers;     // element indices, 1-based Z
  std::vector<Vec3> frac_coords;       // in [0,1)
  Mat3 lattice{};

  int natoms() const { return static_cast<int>(atomic_numbers.size()); }
};

struct MinImageResult {
  Vec3 delta_frac{};   // may lie outside [-1/2,1/2)^3 for sheared cells
  double cart_dist = 0.0;
  double norm_dist = 0.0;  // cart_dist / cell scale
};

class invalid_input : public std::runtime_error {
 public:
  explicit invalid_input(const std::string& msg) : std::runtime_error(msg) {}
};

// --- elementary periodic maps ---

// u - round(u) with ties toward +inf, so the result lies in [-1/2, 1/2).
inline double wrap(double u) { return u - std::floor(u + 0.5); }

inline Vec3 wrap(const Vec3& v) { return {wrap(v[0]), wrap(v[1]), wrap(v[2])}; }

// u - floor(u) in [0, 1). Guards against the rounding case where the
// subtraction lands exactly on 1.
inline double mod1(double u) {
  double r = u - std::floor(u);
  if (r >= 1.0) r -= 1.0;
  return r;
}

inline Vec3 mod1(const Vec3& v) { return {mod1(v[0]), mod1(v[1]), mod1(v[2])}; }

// --- lattice algebra ---

Mat3 lattice_from_latent(const LatticeLatent& y);
LatticeLatent latent_from_lattice(const Mat3& lattice);

// G = L L^T
Mat3 metric_tensor(const Mat3& lattice);

double det3(const Mat3& m);

// Mean of the three lattice row lengths.
double cell_scale(const Mat3& lattice);
double cell_scale(const LatticeLatent& y);

// Lattice parameters (a, b, c, alpha, beta, gamma), angles in degrees.
std::array<double, 6> lattice_parameters(const Mat3& lattice);

// Row-vector convention: x_i = f_i L.
Vec3 cartesian(const Vec3& frac, const Mat3& lattice);
std::vector<Vec3> cartesian(const std::vector<Vec3>& fracs, const Mat3& lattice);

// Minimum-image displacement: argmin over offsets r in {-R..R}^3 of the
// quadratic form (fi - fj + r) G (fi - fj + r)^T. Ties broken by
// lexicographically smallest offset.
MinImageResult min_image(const Vec3& fi, const Vec3& fj, const Mat3& lattice, int radius);

// Greedy pairwise basis reduction ("Niggli-lite"): subtracts integer
// multiples of shorter rows from longer rows until every off-diagonal Gram
// entry satisfies |G_ij| <= min(G_ii, G_jj)/2, then rotates to the
// lower-triangular positive-diagonal convention. Fractional coordinates are
// remapped to the new basis and wrapped to [0,1). The represented crystal is
// unchanged (same lattice, same interatomic geometry).
Crystal canonicalize(const Crystal& c);

// Basic structural sanity: finite values, N >= 1, positive determinant,
// coordinates in [0,1). Throws invalid_input otherwise.
void validate_crystal(const Crystal& c);

}  // namespace crystalite
