#include "crystalite/edm.hpp"

#include "crystalite/geometry.hpp"

namespace crystalite {

DiffusionState make_clean_state(Mat h, Mat f, const std::array<double, 6>& y) {
  DiffusionState s;
  s.h = std::move(h);
  s.f = std::move(f);
  s.f_c = s.f;
  for (size_t i = 0; i < s.f_c.size(); ++i) s.f_c[i] -= 0.5;
  s.y = y;
  s.sigma = 0.0;
  return s;
}

double sample_sigma(const EdmConfig& cfg, Rng& rng) {
  return std::exp(cfg.p_mean + cfg.p_std * rng.normal());
}

DiffusionState noise_state(const DiffusionState& clean, double sigma, Rng& rng) {
  DiffusionState s;
  s.sigma = sigma;
  s.h = clean.h;
  for (size_t i = 0; i < s.h.size(); ++i) s.h[i] += sigma * rng.normal();
  s.f_c = clean.f;
  for (size_t i = 0; i < s.f_c.size(); ++i) s.f_c[i] = (s.f_c[i] - 0.5) + sigma * rng.normal();
  s.f = Mat(s.f_c.rows(), 3);
  for (size_t i = 0; i < s.f.size(); ++i) s.f[i] = mod1(s.f_c[i] + 0.5);
  s.y = clean.y;
  for (double& v : s.y) v += sigma * rng.normal();
  return s;
}

Denoised denoise_combine(const DiffusionState& noisy, const Mat& r_h, const Mat& r_f,
                         const std::array<double, 6>& r_lat, const EdmConfig& cfg) {
  const double sigma = noisy.sigma;
  const Precond ph = precondition(sigma, cfg.sigma_data_h);
  const Precond pf = precondition(sigma, cfg.sigma_data_f);
  const Precond pl = precondition(sigma, cfg.sigma_data_lat);

  Denoised d;
  d.h = Mat(noisy.h.rows(), noisy.h.cols());
  for (size_t i = 0; i < d.h.size(); ++i) d.h[i] = ph.c_skip * noisy.h[i] + ph.c_out * r_h[i];
  d.f_c = Mat(noisy.f_c.rows(), 3);
  for (size_t i = 0; i < d.f_c.size(); ++i)
    d.f_c[i] = pf.c_skip * noisy.f_c[i] + pf.c_out * r_f[i];
  d.f = Mat(d.f_c.rows(), 3);
  for (size_t i = 0; i < d.f.size(); ++i) d.f[i] = mod1(d.f_c[i] + 0.5);
  for (int k = 0; k < 6; ++k) d.y[k] = pl.c_skip * noisy.y[k] + pl.c_out * r_lat[k];
  return d;
}

ChannelLosses channel_losses(const Denoised& pred, const DiffusionState& target, double sigma,
                             const EdmConfig& cfg) {
  const int n = target.h.rows();
  const double w_h = edm_weight(sigma, cfg.sigma_data_h);
  const double w_f = edm_weight(sigma, cfg.sigma_data_f);
  const double w_lat = edm_weight(sigma, cfg.sigma_data_lat);

  ChannelLosses l;
  double acc = 0.0;
  for (size_t i = 0; i < pred.h.size(); ++i) {
    const double r = pred.h[i] - target.h[i];
    acc += r * r;
  }
  l.h = w_h * acc / n;

  acc = 0.0;
  for (size_t i = 0; i < pred.f.size(); ++i) {
    const double r = wrap(pred.f[i] - target.f[i]);
    acc += r * r;
  }
  l.f = w_f * acc / n;

  acc = 0.0;
  for (int k = 0; k < 6; ++k) {
    const double r = pred.y[k] - target.y[k];
    acc += r * r;
  }
  l.lat = w_lat * acc / 6.0;
  return l;
}

}  // namespace crystalite
