#pragma once

#include <array>
#include <vector>

#include "crystalite/autodiff.hpp"
#include "crystalite/geometry.hpp"
#include "crystalite/mat.hpp"
#include "crystalite/rng.hpp"

namespace crystalite {

struct GemConfig {
  bool enabled = true;
  int pbc_radius = 1;
  int fourier_freqs = 12;   // displacement Fourier frequencies
  int rbf_count = 32;       // radial basis features
  int edge_hidden = 256;    // edge MLP hidden width
  bool gate_enabled = true;
  bool distance_bias_enabled = true;
  bool edge_bias_enabled = true;
  double rbf_span = 2.0;    // RBF centers cover [0, rbf_span] in normalized distance

  int feature_dim() const { return 6 * fourier_freqs + rbf_count + 9; }
};

// Minimum-image pairwise geometry of one crystal state: displacement vectors
// and cell-scale-normalized distances for all ordered pairs.
struct PairGeometry {
  int n = 0;
  std::vector<Vec3> delta;  // n*n row-major, delta[i*n+j] = min-image f_i - f_j
  Mat dbar;                 // n x n, d*_ij / s(y)
};

PairGeometry pairwise_geometry(const Mat& frac, const std::array<double, 6>& y, int radius);

// [a, b, c, cos(alpha), cos(beta), cos(gamma), log V, s, log s]
std::array<double, 9> lattice_descriptor(const std::array<double, 6>& y);

// Per-pair feature rows [gamma_delta | gamma_d | psi], n^2 x feature_dim.
// Sinusoids are evaluated on wrapped displacements so the features are
// exactly periodic.
Mat edge_features(const PairGeometry& geo, const std::array<double, 9>& psi,
                  const GemConfig& cfg);

// GEM parameters. Slopes are free parameters mapped through -softplus so the
// distance bias is always non-positive; the gate is sigmoid(a*c_noise + b)
// per head.
struct GemParams {
  Mat slope_theta;  // 1 x heads
  Mat gate_a;       // 1 x heads
  Mat gate_b;       // 1 x heads
  Mat edge_w1;      // feature_dim x hidden
  Mat edge_b1;      // 1 x hidden
  Mat edge_w2;      // hidden x heads
  Mat edge_b2;      // 1 x heads
};

GemParams init_gem_params(int heads, const GemConfig& cfg, Rng& rng);

// Tape handles for the GEM parameters, bound by whoever owns them.
struct GemParamVars {
  Var slope_theta, gate_a, gate_b;
  Var edge_w1, edge_b1, edge_w2, edge_b2;
};

// Per-head (n+1) x (n+1) bias tensors with the lattice row/column zero.
// Differentiable with respect to the GEM parameters.
std::vector<Var> gem_bias_tape(Tape& tape, const GemParamVars& p, const PairGeometry& geo,
                               const std::array<double, 9>& psi, double c_noise, int heads,
                               const GemConfig& cfg);

struct GemBias {
  int heads = 0;
  int n = 0;                 // atom count; matrices are (n+1) x (n+1)
  std::vector<Mat> bias;     // one per head
};

// Value-level views of the individual bias branches (head-major stacks of
// n x n matrices) and the assembled padded bias.
std::vector<Mat> distance_bias(const Mat& dbar, const Mat& slope_theta);
std::vector<Mat> edge_bias(const PairGeometry& geo, const std::array<double, 9>& psi,
                           const GemParams& p, const GemConfig& cfg, int heads);
GemBias gem_bias(const Mat& frac, const std::array<double, 6>& y, double sigma,
                 const GemParams& p, const GemConfig& cfg, int heads);

// Multi-head attention with an optional additive per-head logit bias:
// softmax(Q_h K_h^T / sqrt(d_head) + B_h) V_h, heads concatenated. No output
// projection.
Var biased_attention_tape(Tape& tape, Var q, Var k, Var v, const std::vector<Var>* bias,
                          int heads);
Mat biased_attention(const Mat& q, const Mat& k, const Mat& v, const GemBias* bias, int heads);

}  // namespace crystalite
