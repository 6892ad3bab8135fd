#include "crystalite/trainer.hpp"

#include <cmath>
#include <fstream>

#include "crystalite/version.hpp"

namespace crystalite {

std::vector<DiffusionState> encode_corpus(const Corpus& corpus, const TokenTable& table) {
  std::vector<DiffusionState> states;
  states.reserve(corpus.crystals.size());
  for (const Crystal& c : corpus.crystals) {
    Mat f(c.natoms(), 3);
    for (int i = 0; i < c.natoms(); ++i)
      for (int k = 0; k < 3; ++k) f(i, k) = c.frac_coords[i][k];
    const LatticeLatent y = latent_from_lattice(c.lattice);
    states.push_back(make_clean_state(encode(c.atomic_numbers, table), std::move(f), y.y));
  }
  return states;
}

EvalMetrics eval_denoising(const std::vector<DiffusionState>& clean_states,
                           const std::vector<Crystal>& crystals, const ParamStore& params,
                           const ModelConfig& cfg, const EdmConfig& edm,
                           const TokenTable& table, double eval_sigma, uint64_t noise_seed) {
  Rng rng(noise_seed);
  double sq_sum = 0.0;
  int64_t n_comp = 0;
  int64_t decoded_ok = 0;
  int64_t n_atoms = 0;
  for (size_t ci = 0; ci < clean_states.size(); ++ci) {
    const DiffusionState& clean = clean_states[ci];
    const DiffusionState noisy = noise_state(clean, eval_sigma, rng);
    const Denoised den = denoise(noisy, params, cfg, edm);
    for (size_t k = 0; k < den.f.size(); ++k) {
      const double r = wrap(den.f[k] - clean.f[k]);
      sq_sum += r * r;
      ++n_comp;
    }
    for (int i = 0; i < den.h.rows(); ++i) {
      ++n_atoms;
      try {
        if (decode(den.h.row(i), den.h.cols(), table) == crystals[ci].atomic_numbers[i])
          ++decoded_ok;
      } catch (const invalid_input&) {
        // zero/non-finite token counts as a miss
      }
    }
  }
  EvalMetrics m;
  m.coord_rmse = std::sqrt(sq_sum / static_cast<double>(n_comp));
  m.decode_acc = n_atoms > 0 ? static_cast<double>(decoded_ok) / n_atoms : 0.0;
  return m;
}

TrainResult train_loop(ParamStore& params, ParamStore& ema, AdamState& opt, const Corpus& corpus,
                       const TokenTable& table, const ModelConfig& cfg, const EdmConfig& edm,
                       const TrainOptions& opts, const MetricsHook* hook) {
  const std::vector<DiffusionState> clean_states = encode_corpus(corpus, table);
  Rng rng(opts.seed);

  std::ofstream csv;
  if (!opts.metrics_csv.empty()) {
    csv.open(opts.metrics_csv);
    if (!csv) throw invalid_input("cannot write metrics CSV to " + opts.metrics_csv);
    csv << "# crystalite " << kToolVersion << " config=" << opts.config_hash << "\n";
    csv << "step,loss,coord_rmse,decode_acc";
    if (hook && hook->header)
      for (const auto& h : hook->header()) csv << "," << h;
    csv << "\n";
  }

  TrainResult result;
  for (int64_t step = 0; step < opts.steps; ++step) {
    std::vector<DiffusionState> batch;
    batch.reserve(opts.batch_size);
    for (int b = 0; b < opts.batch_size; ++b) {
      const size_t idx = static_cast<size_t>(rng.below(clean_states.size()));
      if (opts.augment) {
        // Translate in fractional space; H and y are unaffected.
        DiffusionState s = clean_states[idx];
        const Vec3 t = {rng.uniform(), rng.uniform(), rng.uniform()};
        for (int i = 0; i < s.f.rows(); ++i)
          for (int k = 0; k < 3; ++k) s.f(i, k) = mod1(s.f(i, k) + t[k]);
        s.f_c = s.f;
        for (size_t k = 0; k < s.f_c.size(); ++k) s.f_c[k] -= 0.5;
        batch.push_back(std::move(s));
      } else {
        batch.push_back(clean_states[idx]);
      }
    }

    const LossResult lr = loss_and_gradients(batch, params, cfg, edm, rng);
    if (!std::isfinite(lr.loss))
      throw std::runtime_error("train: non-finite loss at step " + std::to_string(step));
    train_step(params, ema, opt, lr.grads, opts.hyper);
    result.final_loss = lr.loss;
    result.steps_done = step + 1;

    const bool log_now =
        opts.log_every > 0 && ((step + 1) % opts.log_every == 0 || step + 1 == opts.steps);
    if (log_now) {
      const EvalMetrics m = eval_denoising(clean_states, corpus.crystals, params, cfg, edm,
                                           table, opts.eval_sigma, opts.seed ^ 0x5eedULL);
      result.final_eval = m;
      if (csv.is_open()) {
        csv << (step + 1) << "," << lr.loss << "," << m.coord_rmse << "," << m.decode_acc;
        if (hook && hook->row)
          for (const auto& v : hook->row(step + 1, ema)) csv << "," << v;
        csv << "\n";
        csv.flush();
      }
    }
  }

  if (opts.steps == 0 || opts.log_every == 0) {
    result.final_eval = eval_denoising(clean_states, corpus.crystals, params, cfg, edm, table,
                                       opts.eval_sigma, opts.seed ^ 0x5eedULL);
  }
  return result;
}

}  // namespace crystalite
