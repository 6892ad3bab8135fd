#pragma once

#include <functional>
#include <string>
#include <vector>

#include "crystalite/dataset.hpp"
#include "crystalite/model.hpp"
#include "crystalite/tokenizer.hpp"

namespace crystalite {

struct TrainOptions {
  int64_t steps = 2000;
  int batch_size = 8;
  TrainHyper hyper;
  bool augment = true;      // random global translation per drawn crystal
  uint64_t seed = 0;
  int log_every = 200;      // 0 disables periodic metrics
  double eval_sigma = 0.1;  // noise level for the denoising-RMSE probe
  std::string metrics_csv;  // optional CSV path
  std::string config_hash;  // recorded in output headers
};

struct EvalMetrics {
  double coord_rmse = 0.0;   // wrapped fractional residual RMSE
  double decode_acc = 0.0;   // fraction of atoms decoded back to their element
};

// Single-step denoising probe on the corpus at a fixed sigma with a fixed
// noise stream.
EvalMetrics eval_denoising(const std::vector<DiffusionState>& clean_states,
                           const std::vector<Crystal>& crystals, const ParamStore& params,
                           const ModelConfig& cfg, const EdmConfig& edm,
                           const TokenTable& table, double eval_sigma, uint64_t noise_seed);

struct TrainResult {
  int64_t steps_done = 0;
  double final_loss = 0.0;
  EvalMetrics final_eval;
};

// Extra CSV columns supplied by the caller (e.g. sampling-based uniqueness);
// returns header names once and values per logged row.
struct MetricsHook {
  std::function<std::vector<std::string>()> header;
  std::function<std::vector<std::string>(int64_t step, const ParamStore& ema)> row;
};

// Deterministic single-writer training loop over the corpus. Aborts with the
// step index if the loss goes non-finite.
TrainResult train_loop(ParamStore& params, ParamStore& ema, AdamState& opt, const Corpus& corpus,
                       const TokenTable& table, const ModelConfig& cfg, const EdmConfig& edm,
                       const TrainOptions& opts, const MetricsHook* hook = nullptr);

// Pre-encodes corpus crystals into clean diffusion states.
std::vector<DiffusionState> encode_corpus(const Corpus& corpus, const TokenTable& table);

}  // namespace crystalite
