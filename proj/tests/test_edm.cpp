#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "crystalite/edm.hpp"
#include "crystalite/geometry.hpp"
#include "test_util.hpp"

using namespace crystalite;
namespace tu = crystalite::testutil;

namespace {

DiffusionState small_clean_state(Rng& rng, int n = 3, int d_h = 4) {
  Mat h(n, d_h);
  for (size_t i = 0; i < h.size(); ++i) h[i] = rng.normal() * 0.3;
  Mat f(n, 3);
  for (size_t i = 0; i < f.size(); ++i) f[i] = tu::dyadic(rng);
  std::array<double, 6> y{};
  for (double& v : y) v = rng.uniform(-0.5, 1.5);
  return make_clean_state(std::move(h), std::move(f), y);
}

}  // namespace

TEST_SUITE_BEGIN("edm");

TEST_CASE("preconditioning closed forms") {
  const Precond p = precondition(0.4, 0.3);
  CHECK(p.c_in == doctest::Approx(2.0));
  CHECK(p.c_skip == doctest::Approx(0.36));
  CHECK(p.c_out == doctest::Approx(0.24));
  CHECK(precondition(1.0, 0.3).c_noise == doctest::Approx(0.0));
}

TEST_CASE("weight and c_out/c_in identities over a log grid") {
  for (int k = 0; k < 100; ++k) {
    const double sigma = std::pow(10.0, -3.0 + 5.0 * k / 99.0);
    for (const double sd : {0.3, 0.5, 1.0}) {
      const Precond p = precondition(sigma, sd);
      CHECK(std::abs(edm_weight(sigma, sd) * p.c_out * p.c_out - 1.0) < 1e-12);
      CHECK(std::abs(p.c_in * p.c_in * (sigma * sigma + sd * sd) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("sample_sigma lognormal behavior") {
  EdmConfig cfg;
  cfg.p_std = 0.0;
  Rng rng(1);
  CHECK(sample_sigma(cfg, rng) == doctest::Approx(std::exp(-1.2)));

  cfg.p_std = 1.2;
  Rng rng2(2);
  std::vector<double> draws(100000);
  for (double& d : draws) d = sample_sigma(cfg, rng2);
  std::nth_element(draws.begin(), draws.begin() + draws.size() / 2, draws.end());
  const double median = draws[draws.size() / 2];
  CHECK(std::abs(median - std::exp(-1.2)) / std::exp(-1.2) < 0.03);

  Rng a(3), b(3);
  for (int i = 0; i < 10; ++i) CHECK(sample_sigma(cfg, a) == sample_sigma(cfg, b));
}

TEST_CASE("noise_state wraps input and matches moments") {
  Rng rng(4);
  const DiffusionState clean = small_clean_state(rng);

  Rng zero_rng(5);
  const DiffusionState same = noise_state(clean, 1e-300, zero_rng);
  for (size_t i = 0; i < clean.f.size(); ++i) CHECK(same.f[i] == doctest::Approx(clean.f[i]));
  for (size_t i = 0; i < clean.h.size(); ++i) CHECK(same.h[i] == doctest::Approx(clean.h[i]));

  Rng noisy_rng(6);
  for (int t = 0; t < 100; ++t) {
    const DiffusionState s = noise_state(clean, 0.8, noisy_rng);
    for (size_t i = 0; i < s.f.size(); ++i) {
      CHECK(s.f[i] >= 0.0);
      CHECK(s.f[i] < 1.0);
    }
  }

  // Empirical std of the injected token noise.
  Mat big_h(200, 167);
  const DiffusionState wide = make_clean_state(std::move(big_h), Mat(200, 3), {});
  Rng mrng(7);
  const DiffusionState noised = noise_state(wide, 0.5, mrng);
  double ss = 0.0;
  for (size_t i = 0; i < noised.h.size(); ++i) ss += noised.h[i] * noised.h[i];
  const double stddev = std::sqrt(ss / noised.h.size());
  CHECK(std::abs(stddev - 0.5) / 0.5 < 0.03);
}

TEST_CASE("denoise_combine limits and inversion identity") {
  Rng rng(8);
  const DiffusionState clean = small_clean_state(rng);
  Rng nrng(9);
  const DiffusionState noisy = noise_state(clean, 0.7, nrng);
  EdmConfig cfg;

  // Zero raw output -> pure skip path.
  const Mat zero_h(noisy.h.rows(), noisy.h.cols());
  const Mat zero_f(noisy.f.rows(), 3);
  const Denoised skip = denoise_combine(noisy, zero_h, zero_f, {}, cfg);
  const double cs = precondition(0.7, cfg.sigma_data_h).c_skip;
  for (size_t i = 0; i < skip.h.size(); ++i) CHECK(skip.h[i] == doctest::Approx(cs * noisy.h[i]));

  // sigma -> 0: prediction equals the noisy input.
  DiffusionState tiny = noisy;
  tiny.sigma = 1e-12;
  const Denoised near_id = denoise_combine(tiny, zero_h, zero_f, {}, cfg);
  for (size_t i = 0; i < near_id.h.size(); ++i)
    CHECK(near_id.h[i] == doctest::Approx(noisy.h[i]).epsilon(1e-9));

  // Choosing R = (target - c_skip * noisy)/c_out reproduces the target.
  const Precond ph = precondition(0.7, cfg.sigma_data_h);
  const Precond pf = precondition(0.7, cfg.sigma_data_f);
  const Precond pl = precondition(0.7, cfg.sigma_data_lat);
  Mat r_h(noisy.h.rows(), noisy.h.cols());
  for (size_t i = 0; i < r_h.size(); ++i) r_h[i] = (clean.h[i] - ph.c_skip * noisy.h[i]) / ph.c_out;
  Mat r_f(noisy.f.rows(), 3);
  for (size_t i = 0; i < r_f.size(); ++i)
    r_f[i] = (clean.f_c[i] - pf.c_skip * noisy.f_c[i]) / pf.c_out;
  std::array<double, 6> r_lat{};
  for (int k = 0; k < 6; ++k) r_lat[k] = (clean.y[k] - pl.c_skip * noisy.y[k]) / pl.c_out;

  const Denoised perfect = denoise_combine(noisy, r_h, r_f, r_lat, cfg);
  for (size_t i = 0; i < perfect.h.size(); ++i)
    CHECK(perfect.h[i] == doctest::Approx(clean.h[i]).epsilon(1e-10));
  for (size_t i = 0; i < perfect.f.size(); ++i)
    CHECK(wrap(perfect.f[i] - clean.f[i]) == doctest::Approx(0.0).epsilon(1e-10));
  for (int k = 0; k < 6; ++k) CHECK(perfect.y[k] == doctest::Approx(clean.y[k]).epsilon(1e-10));

  const ChannelLosses l = channel_losses(perfect, clean, 0.7, cfg);
  CHECK(l.h < 1e-18);
  CHECK(l.f < 1e-18);
  CHECK(l.lat < 1e-18);
}

TEST_CASE("perfect denoiser gives zero loss across a sigma grid") {
  Rng rng(10);
  const DiffusionState clean = small_clean_state(rng);
  EdmConfig cfg;
  for (int k = 0; k < 12; ++k) {
    const double sigma = std::pow(10.0, -2.5 + 4.0 * k / 11.0);
    Rng nrng(100 + k);
    const DiffusionState noisy = noise_state(clean, sigma, nrng);
    const Precond ph = precondition(sigma, cfg.sigma_data_h);
    const Precond pf = precondition(sigma, cfg.sigma_data_f);
    const Precond pl = precondition(sigma, cfg.sigma_data_lat);
    Mat r_h(noisy.h.rows(), noisy.h.cols());
    for (size_t i = 0; i < r_h.size(); ++i)
      r_h[i] = (clean.h[i] - ph.c_skip * noisy.h[i]) / ph.c_out;
    Mat r_f(noisy.f.rows(), 3);
    for (size_t i = 0; i < r_f.size(); ++i)
      r_f[i] = (clean.f_c[i] - pf.c_skip * noisy.f_c[i]) / pf.c_out;
    std::array<double, 6> r_lat{};
    for (int kk = 0; kk < 6; ++kk) r_lat[kk] = (clean.y[kk] - pl.c_skip * noisy.y[kk]) / pl.c_out;
    const ChannelLosses l =
        channel_losses(denoise_combine(noisy, r_h, r_f, r_lat, cfg), clean, sigma, cfg);
    CHECK(total_loss(l, cfg) < 1e-14);
  }
}

TEST_CASE("coordinate loss uses the wrapped residual") {
  EdmConfig cfg;
  cfg.sigma_data_f = 1.0;  // so w_F(1) = 2... choose sigma for w = 1 below

  Denoised pred;
  pred.h = Mat(1, 2);
  pred.f = Mat(1, 3);
  pred.f_c = Mat(1, 3);
  pred.f(0, 0) = 0.95;
  DiffusionState target = make_clean_state(Mat(1, 2), Mat(1, 3), {});
  target.f(0, 0) = 0.05;  // difference 0.9 wraps to -0.1

  // Pick sigma with w_F = 1: w = (s^2 + sd^2)/(s*sd)^2 = 1 when s^2 = sd^2/(sd^2-1); use
  // sd = sqrt(2), s = sqrt(2): w = (2+2)/(2*2) = 1.
  cfg.sigma_data_f = std::sqrt(2.0);
  const ChannelLosses l = channel_losses(pred, target, std::sqrt(2.0), cfg);
  CHECK(l.f == doctest::Approx(0.01));
}

TEST_CASE("coordinate loss invariances") {
  Rng rng(11);
  EdmConfig cfg;
  const DiffusionState target = small_clean_state(rng);
  Denoised pred;
  pred.h = target.h;
  pred.y = target.y;
  pred.f = Mat(target.f.rows(), 3);
  for (size_t i = 0; i < pred.f.size(); ++i) pred.f[i] = tu::dyadic(rng);
  pred.f_c = pred.f;

  const double base = channel_losses(pred, target, 0.5, cfg).f;

  // Integer shifts of any prediction entry leave the loss unchanged.
  Denoised shifted = pred;
  shifted.f(0, 0) += 3.0;
  shifted.f(1, 2) -= 2.0;
  CHECK(channel_losses(shifted, target, 0.5, cfg).f == doctest::Approx(base).epsilon(1e-12));

  // Joint global translation (mod 1) of prediction and target.
  const Vec3 t = tu::dyadic_vec(rng);
  Denoised pred_t = pred;
  DiffusionState target_t = target;
  for (int i = 0; i < pred.f.rows(); ++i)
    for (int k = 0; k < 3; ++k) {
      pred_t.f(i, k) = mod1(pred.f(i, k) + t[k]);
      target_t.f(i, k) = mod1(target.f(i, k) + t[k]);
    }
  CHECK(channel_losses(pred_t, target_t, 0.5, cfg).f == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("total_loss mixes with the configured weights") {
  EdmConfig cfg;
  cfg.lambda_h = 1;
  cfg.lambda_f = 1;
  cfg.lambda_lat = 1;
  CHECK(total_loss({1, 2, 3}, cfg) == doctest::Approx(6.0));
  cfg.lambda_h = 1;
  cfg.lambda_f = 50;
  cfg.lambda_lat = 5;  // paper defaults
  CHECK(total_loss({0.5, 0.25, 2.0}, cfg) == doctest::Approx(0.5 + 12.5 + 10.0));
  CHECK(total_loss({0, 0, 0}, cfg) == 0.0);
}

TEST_SUITE_END();
