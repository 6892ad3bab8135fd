#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "crystalite/edm.hpp"
#include "crystalite/geometry.hpp"
#include "crystalite/tokenizer.hpp"

namespace crystalite {

struct SamplerConfig {
  int steps = 150;
  double sigma_min = 0.002;
  double sigma_max = 80.0;
  double rho = 7.0;
  double s_churn = 60.0;
  double s_noise = 1.003;
  double s_min = 0.0;
  double s_max = 999.0;
  // Anti-annealing exponents per channel; unset channel means alpha = 1.
  std::optional<double> aa_h;
  std::optional<double> aa_f;
  std::optional<double> aa_lat;
  double alpha_max = 10.0;  // cap on the coordinate-channel factor
};

// sigma_0..sigma_{N-1} from the Karras interpolation, with sigma_N = 0
// appended. Strictly decreasing; sigma_0 = sigma_max, sigma_{N-1} = sigma_min.
std::vector<double> karras_schedule(const SamplerConfig& cfg);
std::vector<double> karras_schedule(const SamplerConfig& cfg, double rho);

struct ChurnResult {
  double gamma = 0.0;
  double sigma_bar = 0.0;
  bool inject = false;
};

// gamma_i = min(S_churn/N, sqrt(2)-1) inside [S_min, S_max], else 0.
ChurnResult churn(int i, double sigma_i, const SamplerConfig& cfg);

struct AaFactors {
  std::vector<double> h;    // one factor per step
  std::vector<double> f;
  std::vector<double> lat;
};

// alpha_i = max(1, delta~_i / delta_i) from the auxiliary schedule; the
// coordinate channel is additionally capped at alpha_max.
AaFactors aa_factors(const SamplerConfig& cfg);

// Pluggable denoiser D(state, sigma) -> denoised predictions. The sampler
// only consumes the combined (skip/out) predictions.
using DenoiseFn = std::function<Denoised(const DiffusionState&, double)>;

// One churn + Heun predictor-corrector step from sigma_i to sigma_{i+1}.
// Coordinates integrate in centered space with wrapped drifts and the
// wrapped view refreshed after every update. When frozen_h is set (CSP) the
// token channel is neither perturbed nor updated.
void heun_step(DiffusionState& state, int i, const std::vector<double>& sigmas,
               const AaFactors& aa, const DenoiseFn& denoise, const SamplerConfig& cfg,
               Rng& rng, const Mat* frozen_h = nullptr);

DiffusionState run_chain(DiffusionState init, const DenoiseFn& denoise,
                         const SamplerConfig& cfg, Rng& rng, const Mat* frozen_h = nullptr);

struct SampleResult {
  Crystal crystal;
  bool ok = false;
  bool resample = false;     // decode failed (zero token); caller may retry
  std::string error;
};

// De novo generation: all channels start at N(0, sigma_0^2) and are decoded
// after the final step.
SampleResult sample_dng(const DenoiseFn& denoise, const TokenTable& table, int n_atoms,
                        const SamplerConfig& cfg, Rng& rng);

// Structure prediction: the token channel is pinned to the encoded
// composition; only coordinates and lattice are noised and updated.
SampleResult sample_csp(const DenoiseFn& denoise, const std::vector<int>& composition,
                        const TokenTable& table, const SamplerConfig& cfg, Rng& rng);

}  // namespace crystalite
