#include "crystalite/gem.hpp"

#include <cmath>

namespace crystalite {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Lattice reconstruction with the diagonal exponents clamped; keeps GEM
// geometry finite for arbitrarily noisy latents.
Mat3 lattice_from_latent_safe(const std::array<double, 6>& y) {
  auto e = [](double v) { return std::exp(std::clamp(v, -30.0, 30.0)); };
  Mat3 l{};
  l[0][0] = e(y[0]);
  l[1][0] = y[1];
  l[1][1] = e(y[2]);
  l[2][0] = y[3];
  l[2][1] = y[4];
  l[2][2] = e(y[5]);
  return l;
}

}  // namespace

PairGeometry pairwise_geometry(const Mat& frac, const std::array<double, 6>& y, int radius) {
  const int n = frac.rows();
  const Mat3 l = lattice_from_latent_safe(y);
  const double s = cell_scale(l);

  PairGeometry geo;
  geo.n = n;
  geo.delta.assign(static_cast<size_t>(n) * n, Vec3{});
  geo.dbar = Mat(n, n);
  for (int i = 0; i < n; ++i) {
    const Vec3 fi = {frac(i, 0), frac(i, 1), frac(i, 2)};
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;  // zero displacement, zero distance
      const Vec3 fj = {frac(j, 0), frac(j, 1), frac(j, 2)};
      const MinImageResult r = min_image(fi, fj, l, radius);
      geo.delta[static_cast<size_t>(i) * n + j] = r.delta_frac;
      geo.dbar(i, j) = r.cart_dist / s;
    }
  }
  return geo;
}

std::array<double, 9> lattice_descriptor(const std::array<double, 6>& y) {
  const Mat3 l = lattice_from_latent_safe(y);
  const auto p = lattice_parameters(l);
  const double vol = det3(l);
  const double s = cell_scale(l);
  const double deg = 3.14159265358979323846 / 180.0;
  return {p[0], p[1], p[2], std::cos(p[3] * deg), std::cos(p[4] * deg), std::cos(p[5] * deg),
          std::log(vol), s, std::log(s)};
}

Mat edge_features(const PairGeometry& geo, const std::array<double, 9>& psi,
                  const GemConfig& cfg) {
  const int n = geo.n;
  Mat feat(n * n, cfg.feature_dim());
  const double spacing = cfg.rbf_span / std::max(1, cfg.rbf_count - 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double* row = feat.row(i * n + j);
      const Vec3 d = geo.delta[static_cast<size_t>(i) * n + j];
      int c = 0;
      for (int l = 1; l <= cfg.fourier_freqs; ++l) {
        for (int k = 0; k < 3; ++k) row[c++] = std::sin(kTwoPi * l * wrap(d[k]));
        for (int k = 0; k < 3; ++k) row[c++] = std::cos(kTwoPi * l * wrap(d[k]));
      }
      const double db = geo.dbar(i, j);
      for (int k = 0; k < cfg.rbf_count; ++k) {
        const double center = spacing * k;
        const double t = (db - center) / spacing;
        row[c++] = std::exp(-0.5 * t * t);
      }
      for (double v : psi) row[c++] = v;
    }
  return feat;
}

GemParams init_gem_params(int heads, const GemConfig& cfg, Rng& rng) {
  GemParams p;
  p.slope_theta = Mat(1, heads);
  p.gate_a = Mat(1, heads);
  p.gate_b = Mat(1, heads);
  p.edge_w1 = Mat(cfg.feature_dim(), cfg.edge_hidden);
  for (size_t i = 0; i < p.edge_w1.size(); ++i) {
    double v;
    do v = rng.normal() * 0.02;
    while (std::abs(v) > 0.04);
    p.edge_w1[i] = v;
  }
  p.edge_b1 = Mat(1, cfg.edge_hidden);
  p.edge_w2 = Mat(cfg.edge_hidden, heads);  // zero: edge bias off at init
  p.edge_b2 = Mat(1, heads);
  return p;
}

std::vector<Var> gem_bias_tape(Tape& tape, const GemParamVars& p, const PairGeometry& geo,
                               const std::array<double, 9>& psi, double c_noise, int heads,
                               const GemConfig& cfg) {
  const int n = geo.n;

  Var edge_out;  // n^2 x heads
  if (cfg.edge_bias_enabled) {
    Var feat = tape.input(edge_features(geo, psi, cfg));
    Var hidden = tape.silu(tape.add_rowvec(tape.matmul(feat, p.edge_w1), p.edge_b1));
    edge_out = tape.add_rowvec(tape.matmul(hidden, p.edge_w2), p.edge_b2);
  }

  std::vector<Var> bias(heads);
  for (int h = 0; h < heads; ++h) {
    Var acc;  // n x n atom block
    if (cfg.distance_bias_enabled) {
      // w_h = -softplus(theta_h) <= 0
      Var w = tape.scale(tape.softplus(tape.elem(p.slope_theta, 0, h)), -1.0);
      acc = tape.const_times_scalar(geo.dbar, w);
    }
    if (cfg.edge_bias_enabled) {
      Var eb = tape.col_as_square(edge_out, h, n);
      acc = acc.valid() ? tape.add(acc, eb) : eb;
    }
    if (!acc.valid()) {
      bias[h] = tape.input(Mat::zeros(n + 1, n + 1));
      continue;
    }
    if (cfg.gate_enabled) {
      Var pre = tape.add(tape.scale(tape.elem(p.gate_a, 0, h), c_noise),
                         tape.elem(p.gate_b, 0, h));
      acc = tape.scale_by(acc, tape.sigmoid(pre));
    }
    bias[h] = tape.pad_bottom_right(acc);
  }
  return bias;
}

namespace {

GemParamVars bind_gem_params(Tape& tape, const GemParams& p) {
  GemParamVars v;
  v.slope_theta = tape.param(p.slope_theta);
  v.gate_a = tape.param(p.gate_a);
  v.gate_b = tape.param(p.gate_b);
  v.edge_w1 = tape.param(p.edge_w1);
  v.edge_b1 = tape.param(p.edge_b1);
  v.edge_w2 = tape.param(p.edge_w2);
  v.edge_b2 = tape.param(p.edge_b2);
  return v;
}

}  // namespace

std::vector<Mat> distance_bias(const Mat& dbar, const Mat& slope_theta) {
  const int heads = slope_theta.cols();
  std::vector<Mat> out(heads);
  for (int h = 0; h < heads; ++h) {
    const double th = slope_theta(0, h);
    const double w = -(std::max(th, 0.0) + std::log1p(std::exp(-std::abs(th))));
    Mat b = dbar;
    b *= w;
    out[h] = std::move(b);
  }
  return out;
}

std::vector<Mat> edge_bias(const PairGeometry& geo, const std::array<double, 9>& psi,
                           const GemParams& p, const GemConfig& cfg, int heads) {
  Tape tape;
  GemParamVars vars = bind_gem_params(tape, p);
  Var feat = tape.input(edge_features(geo, psi, cfg));
  Var hidden = tape.silu(tape.add_rowvec(tape.matmul(feat, vars.edge_w1), vars.edge_b1));
  Var out = tape.add_rowvec(tape.matmul(hidden, vars.edge_w2), vars.edge_b2);
  std::vector<Mat> result(heads);
  const Mat& o = tape.val(out);
  for (int h = 0; h < heads; ++h) {
    Mat b(geo.n, geo.n);
    for (int i = 0; i < geo.n; ++i)
      for (int j = 0; j < geo.n; ++j) b(i, j) = o(i * geo.n + j, h);
    result[h] = std::move(b);
  }
  return result;
}

GemBias gem_bias(const Mat& frac, const std::array<double, 6>& y, double sigma,
                 const GemParams& p, const GemConfig& cfg, int heads) {
  Tape tape;
  GemParamVars vars = bind_gem_params(tape, p);
  const PairGeometry geo = pairwise_geometry(frac, y, cfg.pbc_radius);
  const auto psi = lattice_descriptor(y);
  const double c_noise = 0.25 * std::log(sigma);
  const auto bias_vars = gem_bias_tape(tape, vars, geo, psi, c_noise, heads, cfg);

  GemBias b;
  b.heads = heads;
  b.n = geo.n;
  b.bias.reserve(heads);
  for (Var v : bias_vars) b.bias.push_back(tape.val(v));
  return b;
}

Var biased_attention_tape(Tape& tape, Var q, Var k, Var v, const std::vector<Var>* bias,
                          int heads) {
  const int d = tape.val(q).cols();
  const int d_head = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d_head));
  std::vector<Var> outs(heads);
  for (int h = 0; h < heads; ++h) {
    Var qh = tape.slice_cols(q, h * d_head, (h + 1) * d_head);
    Var kh = tape.slice_cols(k, h * d_head, (h + 1) * d_head);
    Var vh = tape.slice_cols(v, h * d_head, (h + 1) * d_head);
    Var logits = tape.scale(tape.matmul(qh, tape.transpose(kh)), inv_sqrt);
    if (bias) logits = tape.add(logits, (*bias)[h]);
    Var attn = tape.softmax_rows(logits);
    outs[h] = tape.matmul_stable(attn, vh);
  }
  return tape.concat_cols(outs);
}

Mat biased_attention(const Mat& q, const Mat& k, const Mat& v, const GemBias* bias, int heads) {
  Tape tape;
  Var qv = tape.input(q), kv = tape.input(k), vv = tape.input(v);
  std::vector<Var> bias_vars;
  if (bias) {
    bias_vars.reserve(bias->bias.size());
    for (const Mat& b : bias->bias) bias_vars.push_back(tape.input(b));
  }
  Var out = biased_attention_tape(tape, qv, kv, vv, bias ? &bias_vars : nullptr, heads);
  return tape.val(out);
}

}  // namespace crystalite
