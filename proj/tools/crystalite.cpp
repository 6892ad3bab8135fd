// Command-line front end: token-table building, toy training, DNG/CSP
// sampling, evaluation, geometry utilities, and schedule inspection.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "crystalite/config.hpp"
#include "crystalite/dataset.hpp"
#include "crystalite/elements.hpp"
#include "crystalite/evaluation.hpp"
#include "crystalite/io.hpp"
#include "crystalite/model.hpp"
#include "crystalite/sampler.hpp"
#include "crystalite/tokenizer.hpp"
#include "crystalite/trainer.hpp"
#include "crystalite/version.hpp"

namespace cl = crystalite;

namespace {

std::vector<int> read_element_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cl::invalid_input("cannot open elements file " + path);
  std::vector<int> zs;
  std::string tok;
  while (in >> tok) {
    if (tok.empty() || tok[0] == '#') {
      std::getline(in, tok);
      continue;
    }
    int z = cl::element_from_symbol(tok);
    if (z == 0) {
      try {
        z = std::stoi(tok);
      } catch (const std::exception&) {
        throw cl::invalid_input("elements file: unknown element '" + tok + "'");
      }
    }
    if (!cl::element_supported(z))
      throw cl::invalid_input("elements file: unsupported element '" + tok + "'");
    zs.push_back(z);
  }
  if (zs.empty()) throw cl::invalid_input("elements file " + path + " is empty");
  return zs;
}

cl::DenoiseFn make_model_denoiser(const cl::ParamStore& weights, const cl::ModelConfig& mcfg,
                                  const cl::EdmConfig& ecfg) {
  return [&weights, mcfg, ecfg](const cl::DiffusionState& s, double sigma) {
    cl::DiffusionState view = s;
    view.sigma = sigma;
    return cl::denoise(view, weights, mcfg, ecfg);
  };
}

std::map<int, double> read_stability_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cl::invalid_input("cannot open stability file " + path);
  std::map<int, double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("id", 0) == 0) continue;  // header
    std::stringstream ss(line);
    std::string id_s, e_s;
    if (!std::getline(ss, id_s, ',') || !std::getline(ss, e_s, ',')) continue;
    out[std::stoi(id_s)] = std::stod(e_s);
  }
  return out;
}

int run_build_tokens(const std::string& elements_path, int d_h, bool use_pca,
                     const std::string& out_path) {
  std::vector<int> zs =
      elements_path.empty() ? cl::mp20_element_set() : read_element_file(elements_path);
  const cl::TokenTable table = cl::build_table(zs, d_h, use_pca);

  int ok = 0;
  for (int z : table.elements) {
    const cl::Mat h = cl::encode({z}, table);
    if (cl::decode(h.row(0), table.d_h, table) == z) ++ok;
  }
  std::ofstream out(out_path);
  if (!out) throw cl::invalid_input("cannot write token table to " + out_path);
  out << cl::token_table_to_json(table);
  std::printf("token table: %zu elements, d_h=%d, pca=%s -> %s\n", table.elements.size(),
              table.d_h, table.use_pca ? "yes" : "no", out_path.c_str());
  std::printf("round-trip %d/%zu\n", ok, table.elements.size());
  return ok == static_cast<int>(table.elements.size()) ? 0 : 1;
}

struct CommonConfig {
  cl::RunConfig cfg;
  uint64_t seed = 0;
};

CommonConfig resolve_config(const std::string& config_path, uint64_t seed_flag, bool seed_given,
                            const std::vector<std::string>& sets) {
  CommonConfig cc;
  if (!config_path.empty()) cc.cfg = cl::RunConfig::from_file(config_path);
  cc.cfg.overlay_env();
  for (const std::string& kv : sets) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw cl::invalid_input("--set expects key=value, got '" + kv + "'");
    cc.cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (seed_given) cc.cfg.set("seed", std::to_string(seed_flag));
  cc.seed = static_cast<uint64_t>(cc.cfg.get_int("seed", 0));
  std::fprintf(stderr, "[crystalite %s] config hash %s, seed %llu\n", cl::kToolVersion,
               cc.cfg.hash().c_str(), static_cast<unsigned long long>(cc.seed));
  std::fprintf(stderr, "%s", cc.cfg.resolved_text().c_str());
  return cc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crystalite: desk-scale crystal diffusion"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cl::kToolVersion);

  std::string config_path;
  uint64_t seed_flag = 0;
  std::vector<std::string> set_overrides;
  app.add_option("--config", config_path, "flat key = value config file");
  auto* seed_opt = app.add_option("--seed", seed_flag, "rng seed (overrides config)");
  app.add_option("--set", set_overrides, "config override key=value (repeatable)");

  // build-tokens
  auto* bt = app.add_subcommand("build-tokens", "build the element token table");
  std::string bt_elements, bt_out = "tokens.json";
  int bt_dh = 16;
  bool bt_no_pca = false;
  bt->add_option("--elements", bt_elements, "element list file (symbols or Z); default MP-20");
  bt->add_option("--dh", bt_dh, "token dimension");
  bt->add_flag("--pca,!--no-pca", bt_no_pca, "PCA-compress (default on)")->default_val(false);
  bt->add_option("--out", bt_out, "output JSON path");

  // train
  auto* tr = app.add_subcommand("train", "train the toy denoiser");
  std::string tr_data, tr_out = "model.ckpt.json", tr_metrics;
  int64_t tr_steps = -1;
  tr->add_option("--data", tr_data, "training corpus (crystal JSONL)")->required();
  tr->add_option("--steps", tr_steps, "training steps (overrides config)");
  tr->add_option("--out", tr_out, "checkpoint output path");
  tr->add_option("--metrics", tr_metrics, "metrics CSV path (default <out>.metrics.csv)");

  // sample
  auto* sm = app.add_subcommand("sample", "sample crystals from a checkpoint");
  std::string sm_ckpt, sm_out = "samples.jsonl", sm_csp;
  int64_t sm_n = 16;
  std::string sm_aa_coords, sm_aa_types, sm_aa_lattice, sm_aa_cap;
  sm->add_option("--ckpt", sm_ckpt, "checkpoint path")->required();
  sm->add_option("--n", sm_n, "number of crystals");
  sm->add_option("--out", sm_out, "output JSONL");
  sm->add_option("--csp", sm_csp, "CSP mode: crystal JSONL providing compositions");
  sm->add_option("--aa-coords", sm_aa_coords, "anti-annealing rho for coordinates");
  sm->add_option("--aa-types", sm_aa_types, "anti-annealing rho for atom tokens");
  sm->add_option("--aa-lattice", sm_aa_lattice, "anti-annealing rho for the lattice");
  sm->add_option("--aa-cap", sm_aa_cap, "coordinate anti-annealing cap");

  // eval
  auto* ev = app.add_subcommand("eval", "DNG metrics report");
  std::string ev_gen, ev_ref, ev_stab, ev_out = "report.json";
  ev->add_option("--generated", ev_gen, "generated crystals JSONL")->required();
  ev->add_option("--reference", ev_ref, "reference crystals JSONL")->required();
  ev->add_option("--stability", ev_stab, "CSV id,e_above_hull for SUN/MSUN");
  ev->add_option("--out", ev_out, "report JSON path");

  // csp-eval
  auto* ce = app.add_subcommand("csp-eval", "CSP match rate and RMSD");
  std::string ce_pred, ce_gt;
  ce->add_option("--predictions", ce_pred, "predicted crystals JSONL")->required();
  ce->add_option("--ground-truths", ce_gt, "ground-truth crystals JSONL")->required();

  // dataset
  auto* ds = app.add_subcommand("dataset", "corpus utilities");
  ds->require_subcommand(1);
  auto* ds_stats = ds->add_subcommand("stats", "print N-histogram and element inventory");
  std::string ds_file;
  ds_stats->add_option("file", ds_file, "crystal JSONL")->required();

  // geom
  auto* gm = app.add_subcommand("geom", "geometry utilities");
  gm->require_subcommand(1);
  auto* gm_mi = gm->add_subcommand("min-image", "minimum-image displacement and distance");
  std::vector<double> mi_points;
  double mi_cubic = 0.0;
  std::vector<double> mi_lattice;
  int mi_radius = 1;
  gm_mi->add_option("coords", mi_points, "f_i (3 values) then f_j (3 values)")
      ->expected(6)
      ->required();
  gm_mi->add_option("--cubic", mi_cubic, "cubic cell edge length");
  gm_mi->add_option("--lattice", mi_lattice, "row-major 3x3 lattice (9 values)")->expected(9);
  gm_mi->add_option("--radius", mi_radius, "offset search radius");
  auto* gm_wrap = gm->add_subcommand("wrap", "wrap values into [-1/2, 1/2)");
  std::vector<double> wrap_vals;
  gm_wrap->add_option("values", wrap_vals, "values")->required();
  auto* gm_mod1 = gm->add_subcommand("mod1", "wrap values into [0, 1)");
  std::vector<double> mod1_vals;
  gm_mod1->add_option("values", mod1_vals, "values")->required();
  auto* gm_rt = gm->add_subcommand("latent-roundtrip", "lattice -> latent -> lattice check");
  std::vector<double> rt_lattice;
  gm_rt->add_option("lattice", rt_lattice, "row-major 3x3 lattice (9 values)")
      ->expected(9)
      ->required();

  // schedule
  auto* sc = app.add_subcommand("schedule", "sampler schedule inspection");
  bool sc_dump = false;
  sc->add_flag("--dump", sc_dump, "print sigma_i and alpha_i tables as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const CommonConfig cc = resolve_config(config_path, seed_flag, seed_opt->count() > 0,
                                           set_overrides);
    const cl::RunConfig& cfg = cc.cfg;

    if (bt->parsed()) {
      if (!bt_elements.empty() && !std::filesystem::exists(bt_elements)) {
        std::fprintf(stderr, "error: elements file not found: %s\n", bt_elements.c_str());
        return 2;
      }
      return run_build_tokens(bt_elements, bt_dh, !bt_no_pca, bt_out);
    }

    if (tr->parsed()) {
      const cl::ModelConfig mcfg = cl::model_from_config(cfg);
      const cl::EdmConfig ecfg = cl::edm_from_config(cfg);
      const int max_atoms = static_cast<int>(cfg.get_int("data.max_atoms", 20));
      const cl::Corpus corpus = cl::load_corpus(tr_data, max_atoms);
      for (const auto& w : corpus.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

      const std::vector<int> elements =
          cfg.get_str("tokens.elements", "mp20") == "corpus" ? corpus.element_set
                                                             : cl::mp20_element_set();
      const bool use_pca = cfg.get_bool("tokens.pca", true);
      const cl::TokenTable table = cl::build_table(elements, mcfg.d_h, use_pca);

      cl::TrainOptions opts;
      opts.steps = tr_steps >= 0 ? tr_steps : cfg.get_int("train.steps", 2000);
      opts.batch_size = static_cast<int>(cfg.get_int("train.batch_size", 8));
      opts.hyper.lr = cfg.get_double("train.lr", 1e-4);
      opts.hyper.warmup_steps = static_cast<int>(cfg.get_int("train.warmup", 1000));
      opts.hyper.ema_decay = cfg.get_double("train.ema_decay", 0.9999);
      opts.augment = cfg.get_bool("train.augment", true);
      opts.seed = cc.seed;
      opts.log_every = static_cast<int>(cfg.get_int("train.log_every", 200));
      opts.eval_sigma = cfg.get_double("train.eval_sigma", 0.1);
      opts.metrics_csv = tr_metrics.empty() ? tr_out + ".metrics.csv" : tr_metrics;
      opts.config_hash = cfg.hash();

      cl::ParamStore params = cl::init_params(mcfg, cc.seed);
      cl::ParamStore ema = params;
      cl::AdamState opt;
      const cl::TrainResult res =
          cl::train_loop(params, ema, opt, corpus, table, mcfg, ecfg, opts);

      cl::Checkpoint ckpt;
      ckpt.tool_version = cl::kToolVersion;
      ckpt.config_hash = cfg.hash();
      ckpt.model = mcfg;
      ckpt.edm = ecfg;
      ckpt.element_set = table.elements;
      ckpt.token_pca = use_pca;
      ckpt.atom_count_hist = corpus.atom_count_hist;
      ckpt.params = std::move(params);
      ckpt.ema = std::move(ema);
      ckpt.opt = std::move(opt);
      ckpt.step = res.steps_done;
      cl::save_checkpoint(ckpt, tr_out);
      std::printf("trained %lld steps, loss %.6f, coord_rmse %.5f, decode_acc %.4f -> %s\n",
                  static_cast<long long>(res.steps_done), res.final_loss,
                  res.final_eval.coord_rmse, res.final_eval.decode_acc, tr_out.c_str());
      return 0;
    }

    if (sm->parsed()) {
      const cl::Checkpoint ckpt = cl::load_checkpoint(sm_ckpt);
      const cl::TokenTable table =
          cl::build_table(ckpt.element_set, ckpt.model.d_h, ckpt.token_pca);
      cl::SamplerConfig scfg = cl::sampler_from_config(cfg);
      if (!sm_aa_coords.empty()) scfg.aa_f = std::stod(sm_aa_coords);
      if (!sm_aa_types.empty()) scfg.aa_h = std::stod(sm_aa_types);
      if (!sm_aa_lattice.empty()) scfg.aa_lat = std::stod(sm_aa_lattice);
      if (!sm_aa_cap.empty()) scfg.alpha_max = std::stod(sm_aa_cap);

      const cl::DenoiseFn denoiser = make_model_denoiser(ckpt.ema, ckpt.model, ckpt.edm);
      cl::Corpus hist_holder;
      hist_holder.atom_count_hist = ckpt.atom_count_hist;

      std::vector<cl::Crystal> results;
      cl::Rng rng(cc.seed);
      if (sm_csp.empty()) {
        for (int64_t i = 0; i < sm_n; ++i) {
          cl::Rng chain = rng.fork(static_cast<uint64_t>(i));
          const int n_atoms = hist_holder.atom_count_hist.empty()
                                  ? 4
                                  : cl::sample_atom_count(hist_holder, chain);
          cl::SampleResult r;
          for (int attempt = 0; attempt < 8; ++attempt) {
            r = cl::sample_dng(denoiser, table, n_atoms, scfg, chain);
            if (!r.resample) break;
          }
          if (r.ok)
            results.push_back(std::move(r.crystal));
          else
            std::fprintf(stderr, "warning: chain %lld failed: %s\n", static_cast<long long>(i),
                         r.error.c_str());
        }
      } else {
        const std::vector<cl::Crystal> comps = cl::read_crystals_jsonl(sm_csp);
        for (size_t i = 0; i < comps.size(); ++i) {
          cl::Rng chain = rng.fork(static_cast<uint64_t>(i));
          cl::SampleResult r =
              cl::sample_csp(denoiser, comps[i].atomic_numbers, table, scfg, chain);
          if (r.ok) results.push_back(std::move(r.crystal));
        }
      }
      cl::write_crystals_jsonl(sm_out, results, cl::kToolVersion, cfg.hash());
      std::printf("wrote %zu crystals to %s\n", results.size(), sm_out.c_str());
      return 0;
    }

    if (ev->parsed()) {
      const std::vector<cl::Crystal> gen = cl::read_crystals_jsonl(ev_gen);
      const std::vector<cl::Crystal> ref = cl::read_crystals_jsonl(ev_ref);
      std::map<int, double> hull;
      const bool have_stab = !ev_stab.empty();
      if (have_stab) hull = read_stability_csv(ev_stab);
      cl::MatchTolerances tol;
      tol.stol = cfg.get_double("eval.stol", tol.stol);
      tol.ltol = cfg.get_double("eval.ltol", tol.ltol);
      tol.angle_tol = cfg.get_double("eval.angle_tol", tol.angle_tol);
      const cl::MetricsReport rep =
          cl::evaluate_dng(gen, ref, tol, have_stab ? &hull : nullptr);
      std::ofstream out(ev_out);
      if (!out) throw cl::invalid_input("cannot write report to " + ev_out);
      out << cl::metrics_report_to_json(rep, cl::kToolVersion, cfg.hash());
      std::printf("n=%lld struct_val=%.4f comp_val=%.4f unique=%.4f novel=%.4f un=%.4f\n",
                  static_cast<long long>(rep.n_generated), rep.struct_val, rep.comp_val,
                  rep.unique, rep.novel, rep.un);
      if (rep.sun) std::printf("sun=%.4f msun=%.4f\n", *rep.sun, *rep.msun);
      if (rep.wdist_rho)
        std::printf("wdist_rho=%.4f wdist_nary=%.4f\n", *rep.wdist_rho, *rep.wdist_nary);
      std::printf("report -> %s\n", ev_out.c_str());
      return 0;
    }

    if (ce->parsed()) {
      const std::vector<cl::Crystal> pred = cl::read_crystals_jsonl(ce_pred);
      const std::vector<cl::Crystal> gt = cl::read_crystals_jsonl(ce_gt);
      cl::MatchTolerances tol;
      const cl::CspMetrics m = cl::csp_metrics(pred, gt, tol);
      std::printf("match_rate=%.4f (%d/%zu)\n", m.match_rate, m.n_matched, pred.size());
      if (m.mean_rmsd)
        std::printf("mean_rmsd=%.5f\n", *m.mean_rmsd);
      else
        std::printf("mean_rmsd=n/a (no matches)\n");
      return 0;
    }

    if (ds_stats->parsed()) {
      const cl::Corpus corpus = cl::load_corpus(ds_file, 1 << 20);
      std::printf("crystals: %zu\n", corpus.crystals.size());
      std::printf("atom-count histogram:\n");
      for (const auto& [n, p] : corpus.atom_count_hist) std::printf("  N=%d: %.4f\n", n, p);
      std::printf("elements:");
      for (int z : corpus.element_set) std::printf(" %s", cl::element_facts(z).symbol);
      std::printf("\n");
      return 0;
    }

    if (gm_mi->parsed()) {
      cl::Mat3 lat{};
      if (!mi_lattice.empty()) {
        for (int i = 0; i < 3; ++i)
          for (int k = 0; k < 3; ++k) lat[i][k] = mi_lattice[i * 3 + k];
      } else {
        const double a = mi_cubic > 0.0 ? mi_cubic : 1.0;
        lat = {{{a, 0, 0}, {0, a, 0}, {0, 0, a}}};
      }
      const cl::Vec3 fi = {mi_points[0], mi_points[1], mi_points[2]};
      const cl::Vec3 fj = {mi_points[3], mi_points[4], mi_points[5]};
      const auto r = cl::min_image(fi, fj, lat, mi_radius);
      std::printf("(%g, %g, %g) d=%g\n", r.delta_frac[0], r.delta_frac[1], r.delta_frac[2],
                  r.cart_dist);
      return 0;
    }
    if (gm_wrap->parsed()) {
      for (size_t i = 0; i < wrap_vals.size(); ++i)
        std::printf("%s%g", i ? " " : "", cl::wrap(wrap_vals[i]));
      std::printf("\n");
      return 0;
    }
    if (gm_mod1->parsed()) {
      for (size_t i = 0; i < mod1_vals.size(); ++i)
        std::printf("%s%g", i ? " " : "", cl::mod1(mod1_vals[i]));
      std::printf("\n");
      return 0;
    }
    if (gm_rt->parsed()) {
      cl::Mat3 lat{};
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) lat[i][k] = rt_lattice[i * 3 + k];
      const cl::LatticeLatent y = cl::latent_from_lattice(lat);
      const cl::Mat3 lat2 = cl::lattice_from_latent(y);
      const auto p1 = cl::lattice_parameters(lat);
      const auto p2 = cl::lattice_parameters(lat2);
      double max_err = 0.0;
      for (int k = 0; k < 6; ++k)
        max_err = std::max(max_err, std::abs(p1[k] - p2[k]) / std::max(1.0, std::abs(p1[k])));
      std::printf("latent: (%g, %g, %g, %g, %g, %g)\n", y.y[0], y.y[1], y.y[2], y.y[3], y.y[4],
                  y.y[5]);
      std::printf("max lattice-parameter error: %.3e\n", max_err);
      return 0;
    }

    if (sc->parsed()) {
      const cl::SamplerConfig scfg = cl::sampler_from_config(cfg);
      const auto sigmas = cl::karras_schedule(scfg);
      const auto aa = cl::aa_factors(scfg);
      if (sc_dump) {
        std::printf("# crystalite %s config=%s\n", cl::kToolVersion, cfg.hash().c_str());
        std::printf("i,sigma,alpha_types,alpha_coords,alpha_lattice\n");
        for (int i = 0; i < scfg.steps; ++i)
          std::printf("%d,%.10g,%.10g,%.10g,%.10g\n", i, sigmas[i], aa.h[i], aa.f[i], aa.lat[i]);
        std::printf("%d,0,,,\n", scfg.steps);
      } else {
        std::printf("steps=%d sigma in [%g, %g], rho=%g\n", scfg.steps, scfg.sigma_min,
                    scfg.sigma_max, scfg.rho);
      }
      return 0;
    }

    std::fprintf(stderr, "error: no subcommand\n");
    return 2;
  } catch (const cl::invalid_input& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
