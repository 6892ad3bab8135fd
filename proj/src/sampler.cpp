#include "crystalite/sampler.hpp"

#include <cmath>
#include <stdexcept>

namespace crystalite {

std::vector<double> karras_schedule(const SamplerConfig& cfg) {
  return karras_schedule(cfg, cfg.rho);
}

std::vector<double> karras_schedule(const SamplerConfig& cfg, double rho) {
  if (cfg.steps < 1) throw invalid_input("schedule: steps must be >= 1");
  if (!(cfg.sigma_min > 0.0) || !(cfg.sigma_min < cfg.sigma_max))
    throw invalid_input("schedule: need 0 < sigma_min < sigma_max");
  if (!(rho > 0.0)) throw invalid_input("schedule: rho must be positive");

  std::vector<double> sigmas(cfg.steps + 1, 0.0);
  if (cfg.steps == 1) {
    sigmas[0] = cfg.sigma_max;
    return sigmas;
  }
  const double inv_rho = 1.0 / rho;
  const double hi = std::pow(cfg.sigma_max, inv_rho);
  const double lo = std::pow(cfg.sigma_min, inv_rho);
  for (int i = 0; i < cfg.steps; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(cfg.steps - 1);
    sigmas[i] = std::pow(hi + t * (lo - hi), rho);
  }
  return sigmas;
}

ChurnResult churn(int i, double sigma_i, const SamplerConfig& cfg) {
  (void)i;
  ChurnResult r;
  const bool in_range = sigma_i >= cfg.s_min && sigma_i <= cfg.s_max;
  const double cap = std::sqrt(2.0) - 1.0;
  r.gamma = (in_range && cfg.s_churn > 0.0)
                ? std::min(cfg.s_churn / static_cast<double>(cfg.steps), cap)
                : 0.0;
  r.sigma_bar = (1.0 + r.gamma) * sigma_i;
  r.inject = r.gamma > 0.0;
  return r;
}

AaFactors aa_factors(const SamplerConfig& cfg) {
  const std::vector<double> base = karras_schedule(cfg);
  AaFactors aa;
  auto fill = [&](const std::optional<double>& rho_aa, bool is_coord) {
    std::vector<double> alpha(cfg.steps, 1.0);
    if (rho_aa) {
      const std::vector<double> aux = karras_schedule(cfg, *rho_aa);
      for (int i = 0; i < cfg.steps; ++i) {
        const double delta = base[i] - base[i + 1];
        const double delta_aux = aux[i] - aux[i + 1];
        alpha[i] = std::max(1.0, delta_aux / delta);
        if (is_coord) alpha[i] = std::min(alpha[i], cfg.alpha_max);
      }
    }
    return alpha;
  };
  aa.h = fill(cfg.aa_h, false);
  aa.f = fill(cfg.aa_f, true);
  aa.lat = fill(cfg.aa_lat, false);
  return aa;
}

namespace {

void refresh_wrapped(DiffusionState& s) {
  for (size_t i = 0; i < s.f.size(); ++i) s.f[i] = mod1(s.f_c[i] + 0.5);
}

struct Drifts {
  Mat h;
  Mat f;
  std::array<double, 6> y{};
};

Drifts compute_drifts(const DiffusionState& state, const Denoised& den, double sigma) {
  Drifts d;
  d.h = Mat(state.h.rows(), state.h.cols());
  for (size_t i = 0; i < d.h.size(); ++i) d.h[i] = (state.h[i] - den.h[i]) / sigma;
  d.f = Mat(state.f_c.rows(), 3);
  for (size_t i = 0; i < d.f.size(); ++i) d.f[i] = wrap(state.f_c[i] - den.f_c[i]) / sigma;
  for (int k = 0; k < 6; ++k) d.y[k] = (state.y[k] - den.y[k]) / sigma;
  return d;
}

}  // namespace

void heun_step(DiffusionState& state, int i, const std::vector<double>& sigmas,
               const AaFactors& aa, const DenoiseFn& denoise, const SamplerConfig& cfg,
               Rng& rng, const Mat* frozen_h) {
  const double sigma_i = sigmas[i];
  const double sigma_next = sigmas[i + 1];

  const ChurnResult ch = churn(i, sigma_i, cfg);
  if (ch.inject) {
    const double scale = cfg.s_noise * std::sqrt(ch.sigma_bar * ch.sigma_bar - sigma_i * sigma_i);
    if (!frozen_h)
      for (size_t k = 0; k < state.h.size(); ++k) state.h[k] += scale * rng.normal();
    for (size_t k = 0; k < state.f_c.size(); ++k) state.f_c[k] += scale * rng.normal();
    for (double& v : state.y) v += scale * rng.normal();
    refresh_wrapped(state);
  }
  state.sigma = ch.sigma_bar;

  const Denoised den = denoise(state, ch.sigma_bar);
  const Drifts d1 = compute_drifts(state, den, ch.sigma_bar);
  const double dt = sigma_next - ch.sigma_bar;

  DiffusionState pred = state;
  if (!frozen_h)
    for (size_t k = 0; k < pred.h.size(); ++k) pred.h[k] += dt * aa.h[i] * d1.h[k];
  for (size_t k = 0; k < pred.f_c.size(); ++k) pred.f_c[k] += dt * aa.f[i] * d1.f[k];
  for (int k = 0; k < 6; ++k) pred.y[k] += dt * aa.lat[i] * d1.y[k];
  refresh_wrapped(pred);
  pred.sigma = sigma_next;

  if (sigma_next > 0.0) {
    const Denoised den2 = denoise(pred, sigma_next);
    const Drifts d2 = compute_drifts(pred, den2, sigma_next);
    DiffusionState next = state;
    if (!frozen_h)
      for (size_t k = 0; k < next.h.size(); ++k)
        next.h[k] += dt * aa.h[i] * 0.5 * (d1.h[k] + d2.h[k]);
    for (size_t k = 0; k < next.f_c.size(); ++k)
      next.f_c[k] += dt * aa.f[i] * 0.5 * (d1.f[k] + d2.f[k]);
    for (int k = 0; k < 6; ++k) next.y[k] += dt * aa.lat[i] * 0.5 * (d1.y[k] + d2.y[k]);
    refresh_wrapped(next);
    next.sigma = sigma_next;
    state = std::move(next);
  } else {
    state = std::move(pred);
  }

  if (!state.h.all_finite() || !state.f_c.all_finite())
    throw std::runtime_error("sampler: non-finite state at step " + std::to_string(i));
  for (double v : state.y)
    if (!std::isfinite(v))
      throw std::runtime_error("sampler: non-finite lattice latent at step " + std::to_string(i));
}

DiffusionState run_chain(DiffusionState init, const DenoiseFn& denoise, const SamplerConfig& cfg,
                         Rng& rng, const Mat* frozen_h) {
  const std::vector<double> sigmas = karras_schedule(cfg);
  const AaFactors aa = aa_factors(cfg);
  DiffusionState state = std::move(init);
  for (int i = 0; i < cfg.steps; ++i) heun_step(state, i, sigmas, aa, denoise, cfg, rng, frozen_h);
  return state;
}

SampleResult sample_dng(const DenoiseFn& denoise, const TokenTable& table, int n_atoms,
                        const SamplerConfig& cfg, Rng& rng) {
  const double sigma0 = cfg.sigma_max;
  DiffusionState s;
  s.h = Mat(n_atoms, table.d_h);
  for (size_t k = 0; k < s.h.size(); ++k) s.h[k] = sigma0 * rng.normal();
  s.f_c = Mat(n_atoms, 3);
  for (size_t k = 0; k < s.f_c.size(); ++k) s.f_c[k] = sigma0 * rng.normal();
  s.f = Mat(n_atoms, 3);
  refresh_wrapped(s);
  for (double& v : s.y) v = sigma0 * rng.normal();
  s.sigma = sigma0;

  const DiffusionState final_state = run_chain(std::move(s), denoise, cfg, rng);

  SampleResult out;
  out.crystal.atomic_numbers.resize(n_atoms);
  for (int i = 0; i < n_atoms; ++i) {
    try {
      out.crystal.atomic_numbers[i] = decode(final_state.h.row(i), table.d_h, table);
    } catch (const invalid_input& e) {
      out.resample = true;
      out.error = e.what();
      return out;
    }
  }
  out.crystal.frac_coords.resize(n_atoms);
  for (int i = 0; i < n_atoms; ++i)
    for (int k = 0; k < 3; ++k) out.crystal.frac_coords[i][k] = final_state.f(i, k);
  LatticeLatent y;
  y.y = final_state.y;
  out.crystal.lattice = lattice_from_latent(y);
  out.ok = true;
  return out;
}

SampleResult sample_csp(const DenoiseFn& denoise, const std::vector<int>& composition,
                        const TokenTable& table, const SamplerConfig& cfg, Rng& rng) {
  const int n_atoms = static_cast<int>(composition.size());
  const Mat h_fixed = encode(composition, table);

  const double sigma0 = cfg.sigma_max;
  DiffusionState s;
  s.h = h_fixed;
  s.f_c = Mat(n_atoms, 3);
  for (size_t k = 0; k < s.f_c.size(); ++k) s.f_c[k] = sigma0 * rng.normal();
  s.f = Mat(n_atoms, 3);
  refresh_wrapped(s);
  for (double& v : s.y) v = sigma0 * rng.normal();
  s.sigma = sigma0;

  const DiffusionState final_state = run_chain(std::move(s), denoise, cfg, rng, &h_fixed);

  SampleResult out;
  out.crystal.atomic_numbers = composition;  // held fixed by construction
  out.crystal.frac_coords.resize(n_atoms);
  for (int i = 0; i < n_atoms; ++i)
    for (int k = 0; k < 3; ++k) out.crystal.frac_coords[i][k] = final_state.f(i, k);
  LatticeLatent y;
  y.y = final_state.y;
  out.crystal.lattice = lattice_from_latent(y);
  out.ok = true;
  return out;
}

}  // namespace crystalite
