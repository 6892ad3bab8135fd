#include "crystalite/model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "crystalite/geometry.hpp"
#include "crystalite/version.hpp"

namespace crystalite {

int ParamStore::add(const std::string& name, Mat m) {
  if (index_.count(name)) throw std::logic_error("duplicate parameter " + name);
  names_.push_back(name);
  tensors_.push_back(std::move(m));
  index_[name] = static_cast<int>(tensors_.size()) - 1;
  return index_[name];
}

int ParamStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

Mat& ParamStore::at(const std::string& name) {
  const int i = index_of(name);
  if (i < 0) throw std::logic_error("unknown parameter " + name);
  return tensors_[i];
}

const Mat& ParamStore::at(const std::string& name) const {
  const int i = index_of(name);
  if (i < 0) throw std::logic_error("unknown parameter " + name);
  return tensors_[i];
}

ParamStore ParamStore::zeros_like() const {
  ParamStore out;
  for (size_t i = 0; i < tensors_.size(); ++i)
    out.add(names_[i], Mat::zeros(tensors_[i].rows(), tensors_[i].cols()));
  return out;
}

size_t ParamStore::num_scalars() const {
  size_t n = 0;
  for (const Mat& t : tensors_) n += t.size();
  return n;
}

bool ParamStore::all_finite() const {
  for (const Mat& t : tensors_)
    if (!t.all_finite()) return false;
  return true;
}

namespace {

Mat trunc_normal(int rows, int cols, Rng& rng, double std_dev = 0.02) {
  Mat m(rows, cols);
  for (size_t i = 0; i < m.size(); ++i) {
    double v;
    do v = rng.normal() * std_dev;
    while (std::abs(v) > 2.0 * std_dev);
    m[i] = v;
  }
  return m;
}

}  // namespace

ParamStore init_params(const ModelConfig& cfg, uint64_t seed) {
  Rng rng(seed);
  ParamStore p;
  const int d = cfg.width;

  auto mlp2 = [&](const std::string& prefix, int in_dim) {
    p.add(prefix + ".w1", trunc_normal(in_dim, d, rng));
    p.add(prefix + ".b1", Mat::zeros(1, d));
    p.add(prefix + ".w2", trunc_normal(d, d, rng));
    p.add(prefix + ".b2", Mat::zeros(1, d));
  };
  mlp2("embed_h", cfg.d_h);
  mlp2("embed_f", 6 * cfg.coord_fourier);
  mlp2("embed_lat", 6);
  mlp2("embed_sig", 1);

  for (int k = 0; k < cfg.layers; ++k) {
    const std::string b = "blk" + std::to_string(k);
    // AdaLN modulation zero-initialized: every block starts as identity.
    p.add(b + ".adaln.w", Mat::zeros(d, 6 * d));
    p.add(b + ".adaln.b", Mat::zeros(1, 6 * d));
    p.add(b + ".attn.wq", trunc_normal(d, d, rng));
    p.add(b + ".attn.bq", Mat::zeros(1, d));
    p.add(b + ".attn.wk", trunc_normal(d, d, rng));
    p.add(b + ".attn.bk", Mat::zeros(1, d));
    p.add(b + ".attn.wv", trunc_normal(d, d, rng));
    p.add(b + ".attn.bv", Mat::zeros(1, d));
    p.add(b + ".attn.wo", trunc_normal(d, d, rng));
    p.add(b + ".attn.bo", Mat::zeros(1, d));
    p.add(b + ".ff.w1", trunc_normal(d, 4 * d, rng));
    p.add(b + ".ff.b1", Mat::zeros(1, 4 * d));
    p.add(b + ".ff.w2", trunc_normal(4 * d, d, rng));
    p.add(b + ".ff.b2", Mat::zeros(1, d));
  }

  // Output heads start at zero so the denoiser begins on the skip path.
  p.add("head_h.w", Mat::zeros(d, cfg.d_h));
  p.add("head_h.b", Mat::zeros(1, cfg.d_h));
  p.add("head_f.w", Mat::zeros(d, 3));
  p.add("head_f.b", Mat::zeros(1, 3));
  p.add("head_lat.w", Mat::zeros(d, 6));
  p.add("head_lat.b", Mat::zeros(1, 6));

  if (cfg.gem.enabled) {
    GemParams g = init_gem_params(cfg.heads, cfg.gem, rng);
    p.add("gem.slope_theta", std::move(g.slope_theta));
    p.add("gem.gate_a", std::move(g.gate_a));
    p.add("gem.gate_b", std::move(g.gate_b));
    p.add("gem.edge.w1", std::move(g.edge_w1));
    p.add("gem.edge.b1", std::move(g.edge_b1));
    p.add("gem.edge.w2", std::move(g.edge_w2));
    p.add("gem.edge.b2", std::move(g.edge_b2));
  }
  return p;
}

namespace {

struct BoundParams {
  const ParamStore* store = nullptr;
  std::vector<Var> vars;

  static BoundParams bind(Tape& tape, const ParamStore& p, bool requires_grad) {
    BoundParams b;
    b.store = &p;
    b.vars.resize(p.count());
    for (int i = 0; i < p.count(); ++i)
      b.vars[i] = requires_grad ? tape.param(p.tensor(i)) : tape.input(p.tensor(i));
    return b;
  }

  Var operator[](const std::string& name) const {
    const int i = store->index_of(name);
    if (i < 0) throw std::logic_error("unbound parameter " + name);
    return vars[i];
  }
};

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Sinusoidal coordinate features on mod1-reduced inputs; exactly periodic
// under integer shifts.
Mat fourier_rows(const Mat& f, int n_freqs) {
  Mat out(f.rows(), 6 * n_freqs);
  for (int i = 0; i < f.rows(); ++i) {
    int c = 0;
    for (int l = 1; l <= n_freqs; ++l) {
      for (int k = 0; k < 3; ++k) out(i, c++) = std::sin(kTwoPi * l * mod1(f(i, k)));
      for (int k = 0; k < 3; ++k) out(i, c++) = std::cos(kTwoPi * l * mod1(f(i, k)));
    }
  }
  return out;
}

Var mlp2(Tape& t, Var x, const BoundParams& p, const std::string& prefix) {
  Var h = t.silu(t.add_rowvec(t.matmul(x, p[prefix + ".w1"]), p[prefix + ".b1"]));
  return t.add_rowvec(t.matmul(h, p[prefix + ".w2"]), p[prefix + ".b2"]);
}

struct ForwardVars {
  Var r_h, r_f, r_lat;
};

ForwardVars forward_tape(Tape& tape, const DiffusionState& noisy, double sigma,
                         const BoundParams& p, const ModelConfig& cfg, const EdmConfig& edm) {
  const int n = noisy.h.rows();
  const int d = cfg.width;
  const double c_noise = 0.25 * std::log(sigma);

  // Channel inputs: H and y are c_in-scaled; coordinates enter wrapped.
  Mat h_in = noisy.h;
  h_in *= precondition(sigma, edm.sigma_data_h).c_in;
  Mat f_wrapped(n, 3);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k) f_wrapped(i, k) = mod1(noisy.f(i, k));
  Mat y_in(1, 6);
  const double c_in_lat = precondition(sigma, edm.sigma_data_lat).c_in;
  for (int k = 0; k < 6; ++k) y_in(0, k) = c_in_lat * noisy.y[k];

  Var atoms = tape.add(mlp2(tape, tape.input(std::move(h_in)), p, "embed_h"),
                       mlp2(tape, tape.input(fourier_rows(f_wrapped, cfg.coord_fourier)), p,
                            "embed_f"));
  Var lat_tok = mlp2(tape, tape.input(std::move(y_in)), p, "embed_lat");
  Var seq = tape.concat_rows(atoms, lat_tok);  // (n+1) x d

  Mat cn(1, 1);
  cn(0, 0) = c_noise;
  Var c_sig = mlp2(tape, tape.input(std::move(cn)), p, "embed_sig");

  std::vector<Var> gem_bias_vars;
  const bool use_gem =
      cfg.gem.enabled && (cfg.gem.distance_bias_enabled || cfg.gem.edge_bias_enabled);
  if (use_gem) {
    const PairGeometry geo = pairwise_geometry(f_wrapped, noisy.y, cfg.gem.pbc_radius);
    const auto psi = lattice_descriptor(noisy.y);
    GemParamVars gv;
    gv.slope_theta = p["gem.slope_theta"];
    gv.gate_a = p["gem.gate_a"];
    gv.gate_b = p["gem.gate_b"];
    gv.edge_w1 = p["gem.edge.w1"];
    gv.edge_b1 = p["gem.edge.b1"];
    gv.edge_w2 = p["gem.edge.w2"];
    gv.edge_b2 = p["gem.edge.b2"];
    gem_bias_vars = gem_bias_tape(tape, gv, geo, psi, c_noise, cfg.heads, cfg.gem);
  }

  for (int k = 0; k < cfg.layers; ++k) {
    const std::string b = "blk" + std::to_string(k);
    Var mod = tape.add(tape.matmul(c_sig, p[b + ".adaln.w"]), p[b + ".adaln.b"]);
    Var g1 = tape.slice_cols(mod, 0, d);
    Var s1 = tape.slice_cols(mod, d, 2 * d);
    Var r1 = tape.slice_cols(mod, 2 * d, 3 * d);
    Var g2 = tape.slice_cols(mod, 3 * d, 4 * d);
    Var s2 = tape.slice_cols(mod, 4 * d, 5 * d);
    Var r2 = tape.slice_cols(mod, 5 * d, 6 * d);

    Var u = tape.add_rowvec(
        tape.mul_rowvec(tape.layer_norm_rows(seq), tape.add_scalar(g1, 1.0)), s1);
    Var q = tape.add_rowvec(tape.matmul(u, p[b + ".attn.wq"]), p[b + ".attn.bq"]);
    Var kk = tape.add_rowvec(tape.matmul(u, p[b + ".attn.wk"]), p[b + ".attn.bk"]);
    Var vv = tape.add_rowvec(tape.matmul(u, p[b + ".attn.wv"]), p[b + ".attn.bv"]);
    Var mixed = biased_attention_tape(tape, q, kk, vv,
                                      use_gem ? &gem_bias_vars : nullptr, cfg.heads);
    Var attn_out =
        tape.add_rowvec(tape.matmul(mixed, p[b + ".attn.wo"]), p[b + ".attn.bo"]);
    seq = tape.add(seq, tape.mul_rowvec(attn_out, r1));

    Var w = tape.add_rowvec(
        tape.mul_rowvec(tape.layer_norm_rows(seq), tape.add_scalar(g2, 1.0)), s2);
    Var ff = tape.add_rowvec(
        tape.matmul(tape.silu(tape.add_rowvec(tape.matmul(w, p[b + ".ff.w1"]),
                                              p[b + ".ff.b1"])),
                    p[b + ".ff.w2"]),
        p[b + ".ff.b2"]);
    seq = tape.add(seq, tape.mul_rowvec(ff, r2));

    if (!tape.val(seq).all_finite())
      throw std::runtime_error("forward: non-finite activation in block " + std::to_string(k));
  }

  Var final_ln = tape.layer_norm_rows(seq);
  Var atoms_out = tape.slice_rows(final_ln, 0, n);
  Var lat_out = tape.slice_rows(final_ln, n, n + 1);

  ForwardVars out;
  out.r_h = tape.add_rowvec(tape.matmul(atoms_out, p["head_h.w"]), p["head_h.b"]);
  out.r_f = tape.add_rowvec(tape.matmul(atoms_out, p["head_f.w"]), p["head_f.b"]);
  out.r_lat = tape.add_rowvec(tape.matmul(lat_out, p["head_lat.w"]), p["head_lat.b"]);
  return out;
}

RawOutput raw_from_vars(const Tape& tape, const ForwardVars& v) {
  RawOutput out;
  out.r_h = tape.val(v.r_h);
  out.r_f = tape.val(v.r_f);
  const Mat& rl = tape.val(v.r_lat);
  for (int k = 0; k < 6; ++k) out.r_lat[k] = rl(0, k);
  return out;
}

}  // namespace

Mat embed_atoms(const Mat& h, const Mat& f, const ParamStore& params, const ModelConfig& cfg) {
  Tape tape;
  BoundParams p = BoundParams::bind(tape, params, false);
  Var atoms = tape.add(mlp2(tape, tape.input(h), p, "embed_h"),
                       mlp2(tape, tape.input(fourier_rows(f, cfg.coord_fourier)), p, "embed_f"));
  return tape.val(atoms);
}

Mat embed_lattice(const std::array<double, 6>& y, const ParamStore& params,
                  const ModelConfig& cfg) {
  Tape tape;
  BoundParams p = BoundParams::bind(tape, params, false);
  Mat y_in(1, 6);
  for (int k = 0; k < 6; ++k) y_in(0, k) = y[k];
  return tape.val(mlp2(tape, tape.input(std::move(y_in)), p, "embed_lat"));
}

RawOutput forward(const DiffusionState& noisy, double sigma, const ParamStore& params,
                  const ModelConfig& cfg, const EdmConfig& edm) {
  Tape tape;
  BoundParams p = BoundParams::bind(tape, params, false);
  ForwardVars v = forward_tape(tape, noisy, sigma, p, cfg, edm);
  return raw_from_vars(tape, v);
}

Denoised denoise(const DiffusionState& noisy, const ParamStore& params, const ModelConfig& cfg,
                 const EdmConfig& edm) {
  RawOutput raw = forward(noisy, noisy.sigma, params, cfg, edm);
  return denoise_combine(noisy, raw.r_h, raw.r_f, raw.r_lat, edm);
}

NoisedExample make_noised_example(const DiffusionState& clean, double sigma, Rng& rng) {
  NoisedExample ex;
  ex.clean = clean;
  ex.noisy = noise_state(clean, sigma, rng);
  return ex;
}

namespace {

// Weighted channel losses on the tape: combine raw outputs with skip/out
// coefficients, square the (wrapped) residuals, apply EDM weights and the
// lambda mix. Mirrors edm.cpp's value-level pipeline.
Var crystal_loss_tape(Tape& tape, const ForwardVars& fwd, const NoisedExample& ex,
                      const EdmConfig& edm) {
  const double sigma = ex.noisy.sigma;
  const int n = ex.clean.h.rows();
  const Precond ph = precondition(sigma, edm.sigma_data_h);
  const Precond pf = precondition(sigma, edm.sigma_data_f);
  const Precond pl = precondition(sigma, edm.sigma_data_lat);

  Mat skip_h = ex.noisy.h;
  skip_h *= ph.c_skip;
  Var h_hat = tape.affine(fwd.r_h, ph.c_out, std::move(skip_h));
  Var dh = tape.sub(h_hat, tape.input(ex.clean.h));
  Var loss_h = tape.scale(tape.sum_all(tape.hadamard(dh, dh)),
                          edm_weight(sigma, edm.sigma_data_h) / n);

  Mat skip_f = ex.noisy.f_c;
  skip_f *= pf.c_skip;
  Var f_hat_c = tape.affine(fwd.r_f, pf.c_out, std::move(skip_f));
  // wrap(mod1(f_c + 1/2) - f_target) == wrap(f_c - (f_target - 1/2)) a.e.
  Mat target_c = ex.clean.f;
  for (size_t i = 0; i < target_c.size(); ++i) target_c[i] -= 0.5;
  Var df = tape.wrap_minus(f_hat_c, std::move(target_c));
  Var loss_f = tape.scale(tape.sum_all(tape.hadamard(df, df)),
                          edm_weight(sigma, edm.sigma_data_f) / n);

  Mat skip_y(1, 6);
  Mat target_y(1, 6);
  for (int k = 0; k < 6; ++k) {
    skip_y(0, k) = pl.c_skip * ex.noisy.y[k];
    target_y(0, k) = ex.clean.y[k];
  }
  Var y_hat = tape.affine(fwd.r_lat, pl.c_out, std::move(skip_y));
  Var dy = tape.sub(y_hat, tape.input(std::move(target_y)));
  Var loss_lat = tape.scale(tape.sum_all(tape.hadamard(dy, dy)),
                            edm_weight(sigma, edm.sigma_data_lat) / 6.0);

  Var total = tape.scale(loss_h, edm.lambda_h);
  total = tape.add(total, tape.scale(loss_f, edm.lambda_f));
  total = tape.add(total, tape.scale(loss_lat, edm.lambda_lat));
  return total;
}

}  // namespace

double batch_loss(const std::vector<NoisedExample>& batch, const ParamStore& params,
                  const ModelConfig& cfg, const EdmConfig& edm) {
  double total = 0.0;
  for (const NoisedExample& ex : batch) {
    Tape tape;
    BoundParams p = BoundParams::bind(tape, params, false);
    ForwardVars fwd = forward_tape(tape, ex.noisy, ex.noisy.sigma, p, cfg, edm);
    Var loss = crystal_loss_tape(tape, fwd, ex, edm);
    total += tape.val(loss)(0, 0);
  }
  return total / static_cast<double>(batch.size());
}

LossResult loss_and_gradients(const std::vector<NoisedExample>& batch, const ParamStore& params,
                              const ModelConfig& cfg, const EdmConfig& edm) {
  LossResult res;
  res.grads = params.zeros_like();
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const NoisedExample& ex : batch) {
    Tape tape;
    BoundParams p = BoundParams::bind(tape, params, true);
    ForwardVars fwd = forward_tape(tape, ex.noisy, ex.noisy.sigma, p, cfg, edm);
    Var loss = crystal_loss_tape(tape, fwd, ex, edm);
    res.loss += tape.val(loss)(0, 0) * inv_b;
    tape.backward(loss);
    for (int i = 0; i < params.count(); ++i) {
      const Mat& g = tape.grad(p.vars[i]);
      Mat& acc = res.grads.tensor(i);
      for (size_t k = 0; k < acc.size(); ++k) acc[k] += inv_b * g[k];
    }
  }
  return res;
}

LossResult loss_and_gradients(const std::vector<DiffusionState>& clean_batch,
                              const ParamStore& params, const ModelConfig& cfg,
                              const EdmConfig& edm, Rng& rng) {
  std::vector<NoisedExample> batch;
  batch.reserve(clean_batch.size());
  for (const DiffusionState& clean : clean_batch) {
    const double sigma = sample_sigma(edm, rng);
    batch.push_back(make_noised_example(clean, sigma, rng));
  }
  return loss_and_gradients(batch, params, cfg, edm);
}

void train_step(ParamStore& params, ParamStore& ema, AdamState& opt, const ParamStore& grads,
                const TrainHyper& hyper) {
  if (opt.m.count() == 0) {
    opt.m = params.zeros_like();
    opt.v = params.zeros_like();
    opt.t = 0;
  }
  opt.t += 1;
  const double warm =
      hyper.warmup_steps > 0
          ? std::min(1.0, static_cast<double>(opt.t) / static_cast<double>(hyper.warmup_steps))
          : 1.0;
  const double lr = hyper.lr * warm;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(opt.t));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(opt.t));

  for (int i = 0; i < params.count(); ++i) {
    Mat& w = params.tensor(i);
    Mat& m = opt.m.tensor(i);
    Mat& v = opt.v.tensor(i);
    const Mat& g = grads.tensor(i);
    for (size_t k = 0; k < w.size(); ++k) {
      m[k] = hyper.beta1 * m[k] + (1.0 - hyper.beta1) * g[k];
      v[k] = hyper.beta2 * v[k] + (1.0 - hyper.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      w[k] -= lr * mhat / (std::sqrt(vhat) + hyper.eps);
    }
  }

  for (int i = 0; i < params.count(); ++i) {
    Mat& e = ema.tensor(i);
    const Mat& w = params.tensor(i);
    for (size_t k = 0; k < e.size(); ++k)
      e[k] = hyper.ema_decay * e[k] + (1.0 - hyper.ema_decay) * w[k];
  }
}

// --- checkpoint serialization ---

namespace {

nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::vector<double>(m.data(), m.data() + m.size());
  return j;
}

Mat mat_from_json(const nlohmann::json& j) {
  Mat m(j.at("rows").get<int>(), j.at("cols").get<int>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.size()) throw invalid_input("checkpoint: bad tensor payload");
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

nlohmann::json store_to_json(const ParamStore& p) {
  nlohmann::json j = nlohmann::json::object();
  for (int i = 0; i < p.count(); ++i) j[p.name(i)] = mat_to_json(p.tensor(i));
  return j;
}

ParamStore store_from_json(const nlohmann::json& j, const ParamStore& reference) {
  // Rebuild in reference order so tensor indices stay stable.
  ParamStore p;
  for (int i = 0; i < reference.count(); ++i) {
    const std::string& name = reference.name(i);
    if (!j.contains(name)) throw invalid_input("checkpoint: missing tensor " + name);
    p.add(name, mat_from_json(j.at(name)));
  }
  return p;
}

nlohmann::json model_cfg_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["width"] = c.width;
  j["layers"] = c.layers;
  j["heads"] = c.heads;
  j["d_h"] = c.d_h;
  j["coord_fourier"] = c.coord_fourier;
  j["gem"] = {{"enabled", c.gem.enabled},
              {"pbc_radius", c.gem.pbc_radius},
              {"fourier_freqs", c.gem.fourier_freqs},
              {"rbf_count", c.gem.rbf_count},
              {"edge_hidden", c.gem.edge_hidden},
              {"gate_enabled", c.gem.gate_enabled},
              {"distance_bias_enabled", c.gem.distance_bias_enabled},
              {"edge_bias_enabled", c.gem.edge_bias_enabled},
              {"rbf_span", c.gem.rbf_span}};
  return j;
}

ModelConfig model_cfg_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.width = j.at("width").get<int>();
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.d_h = j.at("d_h").get<int>();
  c.coord_fourier = j.at("coord_fourier").get<int>();
  const auto& g = j.at("gem");
  c.gem.enabled = g.at("enabled").get<bool>();
  c.gem.pbc_radius = g.at("pbc_radius").get<int>();
  c.gem.fourier_freqs = g.at("fourier_freqs").get<int>();
  c.gem.rbf_count = g.at("rbf_count").get<int>();
  c.gem.edge_hidden = g.at("edge_hidden").get<int>();
  c.gem.gate_enabled = g.at("gate_enabled").get<bool>();
  c.gem.distance_bias_enabled = g.at("distance_bias_enabled").get<bool>();
  c.gem.edge_bias_enabled = g.at("edge_bias_enabled").get<bool>();
  c.gem.rbf_span = g.at("rbf_span").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json j;
  j["format"] = "crystalite-checkpoint-v1";
  j["tool_version"] = ckpt.tool_version;
  j["config_hash"] = ckpt.config_hash;
  j["model"] = model_cfg_to_json(ckpt.model);
  j["edm"] = {{"p_mean", ckpt.edm.p_mean},
              {"p_std", ckpt.edm.p_std},
              {"sigma_data_h", ckpt.edm.sigma_data_h},
              {"sigma_data_f", ckpt.edm.sigma_data_f},
              {"sigma_data_lat", ckpt.edm.sigma_data_lat},
              {"lambda_h", ckpt.edm.lambda_h},
              {"lambda_f", ckpt.edm.lambda_f},
              {"lambda_lat", ckpt.edm.lambda_lat}};
  j["element_set"] = ckpt.element_set;
  j["token_pca"] = ckpt.token_pca;
  {
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [n, p] : ckpt.atom_count_hist) hist[std::to_string(n)] = p;
    j["atom_count_hist"] = hist;
  }
  j["step"] = ckpt.step;
  j["params"] = store_to_json(ckpt.params);
  j["ema"] = store_to_json(ckpt.ema);
  j["adam_t"] = ckpt.opt.t;
  if (ckpt.opt.m.count() > 0) {
    j["adam_m"] = store_to_json(ckpt.opt.m);
    j["adam_v"] = store_to_json(ckpt.opt.v);
  }
  std::ofstream out(path);
  if (!out) throw invalid_input("cannot write checkpoint to " + path);
  out << j.dump();
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot read checkpoint from " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "crystalite-checkpoint-v1")
    throw invalid_input("checkpoint: unknown format");

  Checkpoint c;
  c.tool_version = j.value("tool_version", "");
  c.config_hash = j.value("config_hash", "");
  c.model = model_cfg_from_json(j.at("model"));
  const auto& e = j.at("edm");
  c.edm.p_mean = e.at("p_mean").get<double>();
  c.edm.p_std = e.at("p_std").get<double>();
  c.edm.sigma_data_h = e.at("sigma_data_h").get<double>();
  c.edm.sigma_data_f = e.at("sigma_data_f").get<double>();
  c.edm.sigma_data_lat = e.at("sigma_data_lat").get<double>();
  c.edm.lambda_h = e.at("lambda_h").get<double>();
  c.edm.lambda_f = e.at("lambda_f").get<double>();
  c.edm.lambda_lat = e.at("lambda_lat").get<double>();
  c.element_set = j.at("element_set").get<std::vector<int>>();
  c.token_pca = j.at("token_pca").get<bool>();
  if (j.contains("atom_count_hist"))
    for (const auto& [k, v] : j.at("atom_count_hist").items())
      c.atom_count_hist[std::stoi(k)] = v.get<double>();
  c.step = j.at("step").get<int64_t>();

  const ParamStore reference = init_params(c.model, 0);
  c.params = store_from_json(j.at("params"), reference);
  c.ema = store_from_json(j.at("ema"), reference);
  c.opt.t = j.value("adam_t", static_cast<int64_t>(0));
  if (j.contains("adam_m")) {
    c.opt.m = store_from_json(j.at("adam_m"), reference);
    c.opt.v = store_from_json(j.at("adam_v"), reference);
  }
  return c;
}

}  // namespace crystalite
