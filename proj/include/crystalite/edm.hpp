#pragma once

#include <array>

#include "crystalite/mat.hpp"
#include "crystalite/rng.hpp"

namespace crystalite {

struct EdmConfig {
  double p_mean = -1.2;
  double p_std = 1.2;
  double sigma_data_h = 0.3;
  double sigma_data_f = 0.3;
  double sigma_data_lat = 0.3;
  double lambda_h = 1.0;
  double lambda_f = 50.0;
  double lambda_lat = 5.0;
};

struct Precond {
  double c_skip;
  double c_out;
  double c_in;
  double c_noise;
};

// Standard EDM preconditioning coefficients for one channel.
inline Precond precondition(double sigma, double sigma_data) {
  const double s2 = sigma * sigma + sigma_data * sigma_data;
  return {sigma_data * sigma_data / s2, sigma * sigma_data / std::sqrt(s2),
          1.0 / std::sqrt(s2), 0.25 * std::log(sigma)};
}

// sigma-dependent loss weight; satisfies w(sigma) * c_out(sigma)^2 = 1.
inline double edm_weight(double sigma, double sigma_data) {
  const double p = sigma * sigma_data;
  return (sigma * sigma + sigma_data * sigma_data) / (p * p);
}

// Continuous diffusion state. `f` is the wrapped [0,1) view the backbone
// consumes; `f_c` is the centered running value the combine step and sampler
// arithmetic operate on (f = mod1(f_c + 1/2) always).
struct DiffusionState {
  Mat h;                      // N x d_H
  Mat f;                      // N x 3 in [0,1)
  Mat f_c;                    // N x 3 centered, unbounded
  std::array<double, 6> y{};
  double sigma = 0.0;         // 0 marks a clean state
};

// Clean state from already-encoded channels; coordinates must be in [0,1).
DiffusionState make_clean_state(Mat h, Mat f, const std::array<double, 6>& y);

// log sigma ~ N(p_mean, p_std^2)
double sample_sigma(const EdmConfig& cfg, Rng& rng);

// Joint noising: H and y directly, coordinates in centered space with the
// wrapped view refreshed. Draw order is H, F, y (row-major).
DiffusionState noise_state(const DiffusionState& clean, double sigma, Rng& rng);

struct Denoised {
  Mat h;                      // N x d_H
  Mat f_c;                    // centered prediction (drift arithmetic)
  Mat f;                      // mod1(f_c + 1/2)
  std::array<double, 6> y{};
};

// Per-channel skip/out combination of raw network outputs with the noisy
// state; coordinates are combined in centered space then wrapped.
Denoised denoise_combine(const DiffusionState& noisy, const Mat& r_h, const Mat& r_f,
                         const std::array<double, 6>& r_lat, const EdmConfig& cfg);

struct ChannelLosses {
  double h = 0.0;
  double f = 0.0;
  double lat = 0.0;
};

// Weighted per-channel losses against the clean target; the coordinate
// residual is the componentwise wrapped difference.
ChannelLosses channel_losses(const Denoised& pred, const DiffusionState& target, double sigma,
                             const EdmConfig& cfg);

inline double total_loss(const ChannelLosses& l, const EdmConfig& cfg) {
  return cfg.lambda_h * l.h + cfg.lambda_f * l.f + cfg.lambda_lat * l.lat;
}

}  // namespace crystalite
