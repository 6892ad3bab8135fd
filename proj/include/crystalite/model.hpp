#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "crystalite/autodiff.hpp"
#include "crystalite/edm.hpp"
#include "crystalite/gem.hpp"
#include "crystalite/mat.hpp"
#include "crystalite/rng.hpp"

namespace crystalite {

struct ModelConfig {
  int width = 64;        // toy profile; the paper-scale profile uses 512
  int layers = 3;        // paper-scale: 14
  int heads = 4;         // paper-scale: 16
  int d_h = 16;
  int coord_fourier = 32;
  GemConfig gem;

  int d_head() const { return width / heads; }
};

// Named tensors with a stable ordering.
class ParamStore {
 public:
  int add(const std::string& name, Mat m);
  bool has(const std::string& name) const { return index_.count(name) > 0; }
  Mat& at(const std::string& name);
  const Mat& at(const std::string& name) const;
  int count() const { return static_cast<int>(tensors_.size()); }
  int index_of(const std::string& name) const;  // -1 if absent
  const std::string& name(int i) const { return names_[i]; }
  Mat& tensor(int i) { return tensors_[i]; }
  const Mat& tensor(int i) const { return tensors_[i]; }

  ParamStore zeros_like() const;
  size_t num_scalars() const;
  bool all_finite() const;

 private:
  std::vector<std::string> names_;
  std::vector<Mat> tensors_;
  std::unordered_map<std::string, int> index_;
};

// Deterministic initialization: truncated normal (std 0.02) for linear maps,
// zeros for biases, AdaLN modulation maps, and output heads.
ParamStore init_params(const ModelConfig& cfg, uint64_t seed);

struct RawOutput {
  Mat r_h;                    // N x d_h
  Mat r_f;                    // N x 3
  std::array<double, 6> r_lat{};
};

// Per-atom input tokens E_H(h_i) + E_F(gamma_F(f_i)); coordinates are
// mod1-reduced before the sinusoidal features, so integer shifts are exact
// no-ops.
Mat embed_atoms(const Mat& h, const Mat& f, const ParamStore& params, const ModelConfig& cfg);

// Global lattice token from the (possibly c_in-scaled) latent.
Mat embed_lattice(const std::array<double, 6>& y, const ParamStore& params,
                  const ModelConfig& cfg);

// Denoiser network: AdaLN-conditioned transformer over atom tokens plus one
// lattice token, with the GEM bias injected into attention when enabled.
// H and y inputs are c_in-scaled per channel; coordinates enter as wrapped
// fractional values. Throws on non-finite activations, naming the block.
RawOutput forward(const DiffusionState& noisy, double sigma, const ParamStore& params,
                  const ModelConfig& cfg, const EdmConfig& edm);

// forward + EDM skip/out combination.
Denoised denoise(const DiffusionState& noisy, const ParamStore& params, const ModelConfig& cfg,
                 const EdmConfig& edm);

struct LossResult {
  double loss = 0.0;
  ParamStore grads;
};

// One pre-noised training example (clean target plus its noisy view).
struct NoisedExample {
  DiffusionState clean;
  DiffusionState noisy;
};

NoisedExample make_noised_example(const DiffusionState& clean, double sigma, Rng& rng);

// Batch loss; mean over crystals of the per-crystal weighted channel losses.
double batch_loss(const std::vector<NoisedExample>& batch, const ParamStore& params,
                  const ModelConfig& cfg, const EdmConfig& edm);
LossResult loss_and_gradients(const std::vector<NoisedExample>& batch, const ParamStore& params,
                              const ModelConfig& cfg, const EdmConfig& edm);

// Convenience wrapper that draws sigma and noise per crystal.
LossResult loss_and_gradients(const std::vector<DiffusionState>& clean_batch,
                              const ParamStore& params, const ModelConfig& cfg,
                              const EdmConfig& edm, Rng& rng);

struct AdamState {
  ParamStore m;
  ParamStore v;
  int64_t t = 0;
};

struct TrainHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int warmup_steps = 1000;   // linear LR warmup
  double ema_decay = 0.9999;
};

// Adam update with linear warmup, then EMA <- decay*EMA + (1-decay)*params.
void train_step(ParamStore& params, ParamStore& ema, AdamState& opt, const ParamStore& grads,
                const TrainHyper& hyper);

// --- checkpointing ---

struct Checkpoint {
  std::string tool_version;
  std::string config_hash;
  ModelConfig model;
  EdmConfig edm;
  std::vector<int> element_set;
  bool token_pca = true;
  std::map<int, double> atom_count_hist;  // empirical p(N) for DNG sampling
  ParamStore params;
  ParamStore ema;
  AdamState opt;
  int64_t step = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace crystalite
