#include "crystalite/geometry.hpp"

#include <algorithm>
#include <cstdio>

namespace crystalite {

Mat3 lattice_from_latent(const LatticeLatent& y) {
  for (double v : y.y)
    if (!std::isfinite(v)) throw invalid_input("lattice_from_latent: non-finite latent");
  Mat3 l{};
  l[0][0] = std::exp(y.y[0]);
  l[1][0] = y.y[1];
  l[1][1] = std::exp(y.y[2]);
  l[2][0] = y.y[3];
  l[2][1] = y.y[4];
  l[2][2] = std::exp(y.y[5]);
  return l;
}

double det3(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

Mat3 metric_tensor(const Mat3& l) {
  Mat3 g{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      g[i][j] = l[i][0] * l[j][0] + l[i][1] * l[j][1] + l[i][2] * l[j][2];
  return g;
}

LatticeLatent latent_from_lattice(const Mat3& lattice) {
  for (auto& row : lattice)
    for (double v : row)
      if (!std::isfinite(v)) throw invalid_input("latent_from_lattice: non-finite lattice");
  if (det3(lattice) <= 0.0)
    throw invalid_input("latent_from_lattice: determinant must be positive");

  // Cholesky of G = L L^T gives the unique lower-triangular T with positive
  // diagonal satisfying T = L Q for a rotation Q.
  const Mat3 g = metric_tensor(lattice);
  Mat3 t{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = g[i][j];
      for (int k = 0; k < j; ++k) s -= t[i][k] * t[j][k];
      if (i == j) {
        if (s <= 0.0) throw invalid_input("latent_from_lattice: lattice is singular");
        t[i][i] = std::sqrt(s);
      } else {
        t[i][j] = s / t[j][j];
      }
    }
  }
  LatticeLatent y;
  y.y[0] = std::log(t[0][0]);
  y.y[1] = t[1][0];
  y.y[2] = std::log(t[1][1]);
  y.y[3] = t[2][0];
  y.y[4] = t[2][1];
  y.y[5] = std::log(t[2][2]);
  return y;
}

double cell_scale(const Mat3& l) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    s += std::sqrt(l[i][0] * l[i][0] + l[i][1] * l[i][1] + l[i][2] * l[i][2]);
  return s / 3.0;
}

double cell_scale(const LatticeLatent& y) { return cell_scale(lattice_from_latent(y)); }

std::array<double, 6> lattice_parameters(const Mat3& l) {
  const Mat3 g = metric_tensor(l);
  const double a = std::sqrt(g[0][0]), b = std::sqrt(g[1][1]), c = std::sqrt(g[2][2]);
  auto angle = [](double dot, double n1, double n2) {
    double cosv = dot / (n1 * n2);
    cosv = std::clamp(cosv, -1.0, 1.0);
    return std::acos(cosv) * 180.0 / 3.14159265358979323846;
  };
  return {a, b, c, angle(g[1][2], b, c), angle(g[0][2], a, c), angle(g[0][1], a, b)};
}

Vec3 cartesian(const Vec3& f, const Mat3& l) {
  Vec3 x{};
  for (int j = 0; j < 3; ++j) x[j] = f[0] * l[0][j] + f[1] * l[1][j] + f[2] * l[2][j];
  return x;
}

std::vector<Vec3> cartesian(const std::vector<Vec3>& fs, const Mat3& l) {
  std::vector<Vec3> out;
  out.reserve(fs.size());
  for (const auto& f : fs) out.push_back(cartesian(f, l));
  return out;
}

MinImageResult min_image(const Vec3& fi, const Vec3& fj, const Mat3& lattice, int radius) {
  const Mat3 g = metric_tensor(lattice);
  const Vec3 d = {fi[0] - fj[0], fi[1] - fj[1], fi[2] - fj[2]};

  double best_q = 0.0;
  Vec3 best{};
  bool first = true;
  // Lexicographic scan; strict improvement keeps the lexicographically
  // smallest offset on ties.
  for (int r0 = -radius; r0 <= radius; ++r0)
    for (int r1 = -radius; r1 <= radius; ++r1)
      for (int r2 = -radius; r2 <= radius; ++r2) {
        const Vec3 v = {d[0] + r0, d[1] + r1, d[2] + r2};
        double q = 0.0;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) q += v[i] * g[i][j] * v[j];
        if (first || q < best_q) {
          first = false;
          best_q = q;
          best = v;
        }
      }

  MinImageResult res;
  res.delta_frac = best;
  res.cart_dist = std::sqrt(std::max(0.0, best_q));
  res.norm_dist = res.cart_dist / cell_scale(lattice);
  return res;
}

Crystal canonicalize(const Crystal& c) {
  validate_crystal(c);
  Mat3 l = c.lattice;
  std::vector<Vec3> f = c.frac_coords;

  // Pairwise reduction: replace the longer of rows (i, j) by itself minus an
  // integer multiple of the shorter whenever the Gram off-diagonal is large.
  // Each step strictly shrinks a row, so this terminates.
  for (int iter = 0; iter < 200; ++iter) {
    Mat3 g = metric_tensor(l);
    bool changed = false;
    for (int i = 0; i < 3 && !changed; ++i)
      for (int j = 0; j < 3 && !changed; ++j) {
        if (i == j) continue;
        if (std::abs(g[i][j]) <= 0.5 * std::min(g[i][i], g[j][j]) * (1.0 + 1e-12)) continue;
        int longer = (g[i][i] >= g[j][j]) ? i : j;
        int shorter = (longer == i) ? j : i;
        const long long m = std::llround(g[i][j] / g[shorter][shorter]);
        if (m == 0) continue;
        // rows: a_longer -= m * a_shorter; coords: f[:,shorter] += m * f[:,longer]
        for (int k = 0; k < 3; ++k) l[longer][k] -= static_cast<double>(m) * l[shorter][k];
        for (auto& fr : f) fr[shorter] += static_cast<double>(m) * fr[longer];
        changed = true;
      }
    if (!changed) break;
  }

  // Lower-triangular positive-diagonal convention; rotation leaves fractional
  // coordinates untouched.
  Crystal out;
  out.atomic_numbers = c.atomic_numbers;
  out.lattice = lattice_from_latent(latent_from_lattice(l));
  out.frac_coords.reserve(f.size());
  for (const auto& fr : f) out.frac_coords.push_back(mod1(fr));
  return out;
}

void validate_crystal(const Crystal& c) {
  if (c.atomic_numbers.empty()) throw invalid_input("crystal: no atoms");
  if (c.frac_coords.size() != c.atomic_numbers.size())
    throw invalid_input("crystal: coordinate/type count mismatch");
  for (const auto& row : c.lattice)
    for (double v : row)
      if (!std::isfinite(v)) throw invalid_input("crystal: non-finite lattice");
  if (det3(c.lattice) <= 0.0) throw invalid_input("crystal: lattice determinant must be positive");
  for (const auto& f : c.frac_coords)
    for (double v : f) {
      if (!std::isfinite(v)) throw invalid_input("crystal: non-finite coordinate");
      if (v < 0.0 || v >= 1.0) throw invalid_input("crystal: fractional coordinate outside [0,1)");
    }
}

}  // namespace crystalite
