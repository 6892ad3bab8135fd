#include <doctest.h>

#include <cmath>

#include "crystalite/model.hpp"
#include "test_util.hpp"

using namespace crystalite;
namespace tu = crystalite::testutil;

namespace {

ModelConfig tiny_config(bool gem) {
  ModelConfig cfg;
  cfg.width = 16;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.d_h = 4;
  cfg.coord_fourier = 3;
  cfg.gem.enabled = gem;
  cfg.gem.fourier_freqs = 3;
  cfg.gem.rbf_count = 6;
  cfg.gem.edge_hidden = 12;
  return cfg;
}

DiffusionState random_state(Rng& rng, int n, int d_h, double sigma) {
  Mat h(n, d_h);
  for (size_t i = 0; i < h.size(); ++i) h[i] = 0.3 * rng.normal();
  Mat f(n, 3);
  for (size_t i = 0; i < f.size(); ++i) f[i] = tu::dyadic(rng);
  std::array<double, 6> y{};
  y[0] = rng.uniform(1.0, 1.5);
  y[2] = rng.uniform(1.0, 1.5);
  y[5] = rng.uniform(1.0, 1.5);
  y[1] = rng.uniform(-0.4, 0.4);
  y[3] = rng.uniform(-0.4, 0.4);
  y[4] = rng.uniform(-0.4, 0.4);
  DiffusionState s = make_clean_state(std::move(h), std::move(f), y);
  if (sigma > 0.0) {
    Rng nrng = rng.fork(1);
    s = noise_state(s, sigma, nrng);
  }
  return s;
}

// Perturbs every tensor so zero-initialized heads and modulations also carry
// signal during gradient checks.
void randomize_params(ParamStore& p, Rng& rng, double scale = 0.1) {
  for (int i = 0; i < p.count(); ++i) {
    Mat& t = p.tensor(i);
    for (size_t k = 0; k < t.size(); ++k) t[k] += scale * rng.normal();
  }
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("output shapes for all supported atom counts") {
  const ModelConfig cfg = tiny_config(true);
  const EdmConfig edm;
  const ParamStore params = init_params(cfg, 1);
  Rng rng(2);
  for (int n : {1, 2, 5, 20}) {
    const DiffusionState s = random_state(rng, n, cfg.d_h, 0.5);
    const RawOutput out = forward(s, s.sigma, params, cfg, edm);
    CHECK(out.r_h.rows() == n);
    CHECK(out.r_h.cols() == cfg.d_h);
    CHECK(out.r_f.rows() == n);
    CHECK(out.r_f.cols() == 3);
  }
}

TEST_CASE("embedders: zero weights give zero tokens, rows map atomwise") {
  const ModelConfig cfg = tiny_config(false);
  ParamStore params = init_params(cfg, 3);
  for (const char* name : {"embed_h.w1", "embed_h.b1", "embed_h.w2", "embed_h.b2", "embed_f.w1",
                           "embed_f.b1", "embed_f.w2", "embed_f.b2"})
    params.at(name).fill(0.0);
  Rng rng(4);
  const DiffusionState s = random_state(rng, 3, cfg.d_h, 0.0);
  const Mat tokens = embed_atoms(s.h, s.f, params, cfg);
  for (size_t i = 0; i < tokens.size(); ++i) CHECK(tokens[i] == 0.0);

  // Lattice embedder is deterministic and independent of atoms.
  const ParamStore p2 = init_params(cfg, 5);
  const Mat lat1 = embed_lattice(s.y, p2, cfg);
  const Mat lat2 = embed_lattice(s.y, p2, cfg);
  for (size_t i = 0; i < lat1.size(); ++i) CHECK(lat1[i] == lat2[i]);
  ParamStore p3 = init_params(cfg, 5);
  for (const char* name : {"embed_lat.w1", "embed_lat.b1", "embed_lat.w2", "embed_lat.b2"})
    p3.at(name).fill(0.0);
  const Mat lat0 = embed_lattice(s.y, p3, cfg);
  for (size_t i = 0; i < lat0.size(); ++i) CHECK(lat0[i] == 0.0);
}

TEST_CASE("embed_atoms is exactly periodic in the coordinates") {
  const ModelConfig cfg = tiny_config(false);
  const ParamStore params = init_params(cfg, 6);
  Rng rng(7);
  const DiffusionState s = random_state(rng, 4, cfg.d_h, 0.0);
  Mat f2 = s.f;
  f2(0, 0) += 1.0;
  f2(1, 2) -= 2.0;
  f2(3, 1) += 5.0;
  const Mat a = embed_atoms(s.h, s.f, params, cfg);
  const Mat b = embed_atoms(s.h, f2, params, cfg);
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("forward permutation equivariance is exact") {
  for (const bool gem : {false, true}) {
    const ModelConfig cfg = tiny_config(gem);
    const EdmConfig edm;
    ParamStore params = init_params(cfg, 8);
    Rng prng(9);
    randomize_params(params, prng);

    Rng rng(10);
    for (int t = 0; t < 10; ++t) {
      const int n = 2 + static_cast<int>(rng.below(5));
      const DiffusionState s = random_state(rng, n, cfg.d_h, 0.4);
      std::vector<int> perm(n);
      for (int i = 0; i < n; ++i) perm[i] = i;
      for (int i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

      DiffusionState sp = s;
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < cfg.d_h; ++k) sp.h(i, k) = s.h(perm[i], k);
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < 3; ++k) {
          sp.f(i, k) = s.f(perm[i], k);
          sp.f_c(i, k) = s.f_c(perm[i], k);
        }

      const RawOutput base = forward(s, s.sigma, params, cfg, edm);
      const RawOutput permuted = forward(sp, sp.sigma, params, cfg, edm);
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < cfg.d_h; ++k) CHECK(permuted.r_h(i, k) == base.r_h(perm[i], k));
        for (int k = 0; k < 3; ++k) CHECK(permuted.r_f(i, k) == base.r_f(perm[i], k));
      }
      for (int k = 0; k < 6; ++k) CHECK(permuted.r_lat[k] == base.r_lat[k]);
    }
  }
}

TEST_CASE("forward is exactly periodic under integer coordinate shifts") {
  const ModelConfig cfg = tiny_config(true);
  const EdmConfig edm;
  ParamStore params = init_params(cfg, 11);
  Rng prng(12);
  randomize_params(params, prng);
  Rng rng(13);
  // Dyadic coordinates keep f + n exact; the network is evaluated at a
  // nonzero sigma without renoising so the inputs stay dyadic.
  DiffusionState s = random_state(rng, 4, cfg.d_h, 0.0);
  s.sigma = 0.3;
  DiffusionState s2 = s;
  s2.f(0, 0) += 2.0;
  s2.f(2, 1) -= 3.0;
  const RawOutput a = forward(s, s.sigma, params, cfg, edm);
  const RawOutput b = forward(s2, s2.sigma, params, cfg, edm);
  for (size_t i = 0; i < a.r_h.size(); ++i) CHECK(a.r_h[i] == b.r_h[i]);
  for (size_t i = 0; i < a.r_f.size(); ++i) CHECK(a.r_f[i] == b.r_f[i]);
}

TEST_CASE("saturated-low GEM gate matches GEM disabled") {
  const ModelConfig on = tiny_config(true);
  const ModelConfig off = tiny_config(false);
  const EdmConfig edm;
  ParamStore p_on = init_params(on, 14);
  Rng prng(15);
  randomize_params(p_on, prng);
  p_on.at("gem.gate_a").fill(0.0);
  p_on.at("gem.gate_b").fill(-80.0);

  // Copy the shared tensors into the GEM-free layout.
  ParamStore p_off = init_params(off, 14);
  for (int i = 0; i < p_off.count(); ++i) {
    const int src = p_on.index_of(p_off.name(i));
    REQUIRE(src >= 0);
    p_off.tensor(i) = p_on.tensor(src);
  }

  Rng rng(16);
  const DiffusionState s = random_state(rng, 5, on.d_h, 0.5);
  const RawOutput a = forward(s, s.sigma, p_on, on, edm);
  const RawOutput b = forward(s, s.sigma, p_off, off, edm);
  for (size_t i = 0; i < a.r_h.size(); ++i) CHECK(std::abs(a.r_h[i] - b.r_h[i]) < 1e-8);
  for (size_t i = 0; i < a.r_f.size(); ++i) CHECK(std::abs(a.r_f[i] - b.r_f[i]) < 1e-8);
  for (int k = 0; k < 6; ++k) CHECK(std::abs(a.r_lat[k] - b.r_lat[k]) < 1e-8);
}

TEST_CASE("analytic gradients match central differences") {
  for (const bool gem : {false, true}) {
    CAPTURE(gem);
    const ModelConfig cfg = tiny_config(gem);
    EdmConfig edm;
    ParamStore params = init_params(cfg, 17);
    Rng prng(18);
    randomize_params(params, prng);

    // Fixed 2-crystal, 3-atom batch with frozen noise.
    Rng rng(19);
    std::vector<NoisedExample> batch;
    for (int c = 0; c < 2; ++c) {
      const DiffusionState clean = random_state(rng, 3, cfg.d_h, 0.0);
      Rng nrng(100 + c);
      batch.push_back(make_noised_example(clean, c == 0 ? 0.35 : 1.6, nrng));
    }

    const LossResult base = loss_and_gradients(batch, params, cfg, edm);
    REQUIRE(std::isfinite(base.loss));

    const double step = 1e-5;
    Rng pick(20);
    for (int ti = 0; ti < params.count(); ++ti) {
      Mat& tensor = params.tensor(ti);
      const Mat& grad = base.grads.tensor(ti);
      const int n_checks = std::min<int>(20, static_cast<int>(tensor.size()));
      for (int c = 0; c < n_checks; ++c) {
        const size_t idx = pick.below(tensor.size());
        const double orig = tensor[idx];
        tensor[idx] = orig + step;
        const double up = batch_loss(batch, params, cfg, edm);
        tensor[idx] = orig - step;
        const double dn = batch_loss(batch, params, cfg, edm);
        tensor[idx] = orig;
        const double fd = (up - dn) / (2.0 * step);
        const double an = grad[idx];
        // rtol per the 1e-4 requirement; the atol absorbs central-difference
        // roundoff where the gradient itself vanishes.
        const double bound = 1e-4 * std::max(std::abs(fd), std::abs(an)) + 1e-8;
        CAPTURE(params.name(ti));
        CAPTURE(idx);
        CHECK(std::abs(fd - an) <= bound);
      }
    }
  }
}

TEST_CASE("zero lambdas zero the loss and gradients; lambda_F scales linearly") {
  const ModelConfig cfg = tiny_config(true);
  ParamStore params = init_params(cfg, 21);
  Rng prng(22);
  randomize_params(params, prng);
  Rng rng(23);
  std::vector<NoisedExample> batch;
  const DiffusionState clean = random_state(rng, 3, cfg.d_h, 0.0);
  Rng nrng(24);
  batch.push_back(make_noised_example(clean, 0.5, nrng));

  EdmConfig zero;
  zero.lambda_h = zero.lambda_f = zero.lambda_lat = 0.0;
  const LossResult z = loss_and_gradients(batch, params, cfg, zero);
  CHECK(z.loss == 0.0);
  for (int i = 0; i < z.grads.count(); ++i)
    for (size_t k = 0; k < z.grads.tensor(i).size(); ++k) CHECK(z.grads.tensor(i)[k] == 0.0);

  EdmConfig only_f;
  only_f.lambda_h = only_f.lambda_lat = 0.0;
  only_f.lambda_f = 1.0;
  const LossResult g1 = loss_and_gradients(batch, params, cfg, only_f);
  only_f.lambda_f = 2.0;
  const LossResult g2 = loss_and_gradients(batch, params, cfg, only_f);
  CHECK(g2.loss == doctest::Approx(2.0 * g1.loss).epsilon(1e-12));
  for (int i = 0; i < g1.grads.count(); ++i)
    for (size_t k = 0; k < g1.grads.tensor(i).size(); ++k)
      CHECK(g2.grads.tensor(i)[k] == doctest::Approx(2.0 * g1.grads.tensor(i)[k]).epsilon(1e-9));
}

TEST_CASE("train_step mechanics") {
  const ModelConfig cfg = tiny_config(false);
  ParamStore params = init_params(cfg, 25);
  ParamStore ema = params;
  // Separate the EMA start so the pull toward params is visible.
  for (int i = 0; i < ema.count(); ++i)
    for (size_t k = 0; k < ema.tensor(i).size(); ++k) ema.tensor(i)[k] += 1.0;
  AdamState opt;
  TrainHyper hyper;
  hyper.ema_decay = 0.5;

  const ParamStore before = params;
  const ParamStore zero_grads = params.zeros_like();
  train_step(params, ema, opt, zero_grads, hyper);
  for (int i = 0; i < params.count(); ++i)
    for (size_t k = 0; k < params.tensor(i).size(); ++k)
      CHECK(params.tensor(i)[k] == before.tensor(i)[k]);
  // EMA moved halfway toward params.
  for (int i = 0; i < ema.count(); ++i)
    for (size_t k = 0; k < ema.tensor(i).size(); ++k)
      CHECK(ema.tensor(i)[k] == doctest::Approx(before.tensor(i)[k] + 0.5));

  hyper.ema_decay = 0.0;
  train_step(params, ema, opt, zero_grads, hyper);
  for (int i = 0; i < ema.count(); ++i)
    for (size_t k = 0; k < ema.tensor(i).size(); ++k)
      CHECK(ema.tensor(i)[k] == params.tensor(i)[k]);
}

TEST_CASE("same seed gives bit-identical training trajectories") {
  const ModelConfig cfg = tiny_config(true);
  const EdmConfig edm;
  auto run = [&]() {
    ParamStore params = init_params(cfg, 31);
    ParamStore ema = params;
    AdamState opt;
    TrainHyper hyper;
    hyper.lr = 1e-3;
    hyper.warmup_steps = 5;
    Rng rng(32);
    std::vector<DiffusionState> data;
    for (int i = 0; i < 4; ++i) data.push_back(random_state(rng, 3, cfg.d_h, 0.0));
    Rng train_rng(33);
    for (int step = 0; step < 8; ++step) {
      const LossResult lr = loss_and_gradients(data, params, cfg, edm, train_rng);
      train_step(params, ema, opt, lr.grads, hyper);
    }
    return params;
  };
  const ParamStore a = run();
  const ParamStore b = run();
  for (int i = 0; i < a.count(); ++i)
    for (size_t k = 0; k < a.tensor(i).size(); ++k) CHECK(a.tensor(i)[k] == b.tensor(i)[k]);
}

TEST_CASE("short training run decreases the loss") {
  const ModelConfig cfg = tiny_config(true);
  const EdmConfig edm;
  ParamStore params = init_params(cfg, 41);
  ParamStore ema = params;
  AdamState opt;
  TrainHyper hyper;
  hyper.lr = 3e-3;
  hyper.warmup_steps = 20;
  Rng rng(42);
  std::vector<DiffusionState> data;
  for (int i = 0; i < 2; ++i) data.push_back(random_state(rng, 3, cfg.d_h, 0.0));

  // Fixed noised eval batch: progress is measured on identical inputs.
  std::vector<NoisedExample> eval_batch;
  for (int c = 0; c < 4; ++c) {
    Rng nrng(900 + c);
    eval_batch.push_back(make_noised_example(data[c % data.size()], 0.3 + 0.3 * c, nrng));
  }
  const double before = batch_loss(eval_batch, params, cfg, edm);

  Rng train_rng(43);
  const int steps = 400;
  for (int step = 0; step < steps; ++step) {
    const LossResult lr = loss_and_gradients(data, params, cfg, edm, train_rng);
    train_step(params, ema, opt, lr.grads, hyper);
  }
  const double after = batch_loss(eval_batch, params, cfg, edm);
  MESSAGE("fixed-batch loss ", before, " -> ", after);
  CHECK(after < 0.8 * before);
}

TEST_CASE("checkpoint round trip") {
  const ModelConfig cfg = tiny_config(true);
  Checkpoint ckpt;
  ckpt.tool_version = "test";
  ckpt.config_hash = "cafe";
  ckpt.model = cfg;
  ckpt.element_set = {1, 8, 26};
  ckpt.token_pca = true;
  ckpt.atom_count_hist = {{2, 0.5}, {3, 0.5}};
  ckpt.params = init_params(cfg, 51);
  Rng prng(52);
  randomize_params(ckpt.params, prng);
  ckpt.ema = ckpt.params;
  ckpt.opt.m = ckpt.params.zeros_like();
  ckpt.opt.v = ckpt.params.zeros_like();
  ckpt.opt.t = 7;
  ckpt.step = 99;

  const std::string path = "test_ckpt_roundtrip.json";
  save_checkpoint(ckpt, path);
  const Checkpoint back = load_checkpoint(path);
  std::remove(path.c_str());

  CHECK(back.step == 99);
  CHECK(back.opt.t == 7);
  CHECK(back.element_set == ckpt.element_set);
  CHECK(back.atom_count_hist == ckpt.atom_count_hist);
  REQUIRE(back.params.count() == ckpt.params.count());
  for (int i = 0; i < ckpt.params.count(); ++i)
    for (size_t k = 0; k < ckpt.params.tensor(i).size(); ++k)
      CHECK(back.params.tensor(i)[k] == ckpt.params.tensor(i)[k]);
}

TEST_SUITE_END();
