#include "crystalite/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "crystalite/elements.hpp"
#include "crystalite/mat.hpp"

namespace crystalite {

namespace {

bool crystal_finite(const Crystal& c) {
  for (const auto& row : c.lattice)
    for (double v : row)
      if (!std::isfinite(v)) return false;
  for (const auto& f : c.frac_coords)
    for (double v : f)
      if (!std::isfinite(v)) return false;
  return true;
}

// Minimum interatomic distance including self-images, on the canonical cell.
double min_interatomic_distance(const Crystal& canon) {
  const int n = canon.natoms();
  double dmin = std::numeric_limits<double>::infinity();
  // Shortest nonzero lattice vector within the R=1 shell (self-image).
  for (int r0 = -1; r0 <= 1; ++r0)
    for (int r1 = -1; r1 <= 1; ++r1)
      for (int r2 = -1; r2 <= 1; ++r2) {
        if (r0 == 0 && r1 == 0 && r2 == 0) continue;
        const Vec3 x = cartesian(Vec3{static_cast<double>(r0), static_cast<double>(r1),
                                      static_cast<double>(r2)},
                                 canon.lattice);
        dmin = std::min(dmin, std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
      }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const auto r = min_image(canon.frac_coords[i], canon.frac_coords[j], canon.lattice, 1);
      dmin = std::min(dmin, r.cart_dist);
    }
  return dmin;
}

}  // namespace

ValidityResult structural_validity(const Crystal& c) {
  if (c.atomic_numbers.empty() || c.frac_coords.size() != c.atomic_numbers.size())
    return {false, "nonfinite"};
  if (!crystal_finite(c)) return {false, "nonfinite"};
  const double vol = det3(c.lattice);
  if (!(vol > 0.0)) return {false, "lattice"};
  if (vol < 0.1) return {false, "volume"};

  Crystal canon;
  try {
    Crystal wrapped = c;
    for (auto& f : wrapped.frac_coords) f = mod1(f);
    canon = canonicalize(wrapped);
  } catch (const invalid_input&) {
    return {false, "lattice"};
  }
  if (min_interatomic_distance(canon) < 0.5) return {false, "min_dist"};
  return {true, ""};
}

bool composition_validity(const Crystal& c) {
  std::map<int, std::vector<int>> table;
  for (int z : c.atomic_numbers) {
    if (!element_supported(z)) return false;
    const ElementFacts& f = element_facts(z);
    auto& states = table[z];
    if (states.empty())
      for (int k = 0; k < f.n_ox; ++k) states.push_back(f.ox_states[k]);
  }
  return composition_validity(c, table);
}

bool composition_validity(const Crystal& c, const std::map<int, std::vector<int>>& ox_table) {
  // Reduced formula.
  std::map<int, int> counts;
  for (int z : c.atomic_numbers) counts[z]++;
  if (counts.size() == 1) return true;  // unary

  bool all_metal = true;
  for (const auto& [z, cnt] : counts) {
    if (!element_supported(z) || !element_facts(z).metal) {
      all_metal = false;
      break;
    }
  }
  if (all_metal) return true;

  int g = 0;
  for (const auto& [z, cnt] : counts) g = std::gcd(g, cnt);
  std::vector<std::pair<int, int>> formula;  // (Z, reduced count)
  for (const auto& [z, cnt] : counts) formula.push_back({z, cnt / g});

  // Exhaustive species-wise assignment search with range pruning.
  const int m = static_cast<int>(formula.size());
  std::vector<const std::vector<int>*> states(m);
  for (int i = 0; i < m; ++i) {
    auto it = ox_table.find(formula[i].first);
    if (it == ox_table.end() || it->second.empty()) return false;
    states[i] = &it->second;
  }
  std::vector<int> lo(m + 1, 0), hi(m + 1, 0);  // reachable charge bounds from i..end
  for (int i = m - 1; i >= 0; --i) {
    int mn = states[i]->front(), mx = states[i]->front();
    for (int s : *states[i]) {
      mn = std::min(mn, s);
      mx = std::max(mx, s);
    }
    lo[i] = lo[i + 1] + mn * formula[i].second;
    hi[i] = hi[i + 1] + mx * formula[i].second;
  }
  std::function<bool(int, int)> search = [&](int i, int charge) {
    if (i == m) return charge == 0;
    if (charge + lo[i] > 0 || charge + hi[i] < 0) return false;
    for (int s : *states[i])
      if (search(i + 1, charge + s * formula[i].second)) return true;
    return false;
  };
  return search(0, 0);
}

Fingerprint fingerprint(const Crystal& c) {
  Crystal wrapped = c;
  for (auto& f : wrapped.frac_coords) f = mod1(f);
  const Crystal canon = canonicalize(wrapped);

  Fingerprint fp;
  fp.natoms = canon.natoms();
  std::map<int, int> counts;
  for (int z : canon.atomic_numbers) counts[z]++;
  int g = 0;
  for (const auto& [z, cnt] : counts) g = std::gcd(g, cnt);
  for (const auto& [z, cnt] : counts) fp.reduced_composition.push_back({z, cnt / g});

  fp.volume = det3(canon.lattice);
  const double scale = std::cbrt(fp.volume);
  for (int i = 0; i < fp.natoms; ++i)
    for (int j = i + 1; j < fp.natoms; ++j) {
      const auto r = min_image(canon.frac_coords[i], canon.frac_coords[j], canon.lattice, 1);
      fp.norm_dists.push_back(r.cart_dist / scale);
    }
  std::sort(fp.norm_dists.begin(), fp.norm_dists.end());

  const auto p = lattice_parameters(canon.lattice);
  fp.lengths = {p[0], p[1], p[2]};
  fp.angles = {p[3], p[4], p[5]};
  std::sort(fp.lengths.begin(), fp.lengths.end());
  std::sort(fp.angles.begin(), fp.angles.end());
  return fp;
}

bool match(const Fingerprint& a, const Fingerprint& b, const MatchTolerances& tol) {
  if (a.reduced_composition != b.reduced_composition) return false;
  if (a.natoms != b.natoms) return false;
  for (int k = 0; k < 3; ++k) {
    const double mid = 0.5 * (a.lengths[k] + b.lengths[k]);
    if (std::abs(a.lengths[k] - b.lengths[k]) > tol.ltol * mid) return false;
    if (std::abs(a.angles[k] - b.angles[k]) > tol.angle_tol) return false;
  }
  for (size_t k = 0; k < a.norm_dists.size(); ++k)
    if (std::abs(a.norm_dists[k] - b.norm_dists[k]) > tol.stol) return false;
  return true;
}

bool match(const Crystal& a, const Crystal& b, const MatchTolerances& tol) {
  return match(fingerprint(a), fingerprint(b), tol);
}

UniquenessResult uniqueness(const std::vector<Crystal>& crystals, const MatchTolerances& tol) {
  UniquenessResult res;
  if (crystals.empty()) {
    res.empty_input = true;
    return res;
  }
  std::vector<Fingerprint> fps;
  fps.reserve(crystals.size());
  for (const auto& c : crystals) fps.push_back(fingerprint(c));

  for (size_t i = 0; i < fps.size(); ++i) {
    bool dup = false;
    for (int r : res.representatives)
      if (match(fps[i], fps[r], tol)) {
        dup = true;
        break;
      }
    if (!dup) res.representatives.push_back(static_cast<int>(i));
  }
  res.rate = static_cast<double>(res.representatives.size()) / crystals.size();
  return res;
}

UnResult un_rate(const std::vector<Crystal>& crystals, const std::vector<Crystal>& reference,
                 const MatchTolerances& tol) {
  UnResult res;
  if (crystals.empty()) {
    res.empty_input = true;
    return res;
  }
  std::vector<Fingerprint> fps, ref_fps;
  fps.reserve(crystals.size());
  for (const auto& c : crystals) fps.push_back(fingerprint(c));
  ref_fps.reserve(reference.size());
  for (const auto& c : reference) ref_fps.push_back(fingerprint(c));

  for (size_t i = 0; i < fps.size(); ++i) {
    bool seen = false;
    for (const auto& rf : ref_fps)
      if (match(fps[i], rf, tol)) {
        seen = true;
        break;
      }
    if (!seen) res.novel_indices.push_back(static_cast<int>(i));
  }
  for (int i : res.novel_indices) {
    bool dup = false;
    for (int r : res.un_representatives)
      if (match(fps[i], fps[r], tol)) {
        dup = true;
        break;
      }
    if (!dup) res.un_representatives.push_back(i);
  }
  const double cand = static_cast<double>(crystals.size());
  res.novel_rate = res.novel_indices.size() / cand;
  res.un_rate = res.un_representatives.size() / cand;
  return res;
}

double wasserstein1(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw invalid_input("wasserstein1: empty sample set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Integrate |F_a - F_b| over the merged breakpoints.
  size_t ia = 0, ib = 0;
  double prev = std::min(a[0], b[0]);
  double area = 0.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (ia < a.size() || ib < b.size()) {
    const double t = (ib >= b.size() || (ia < a.size() && a[ia] <= b[ib])) ? a[ia] : b[ib];
    area += std::abs(ia / na - ib / nb) * (t - prev);
    prev = t;
    while (ia < a.size() && a[ia] == t) ++ia;
    while (ib < b.size() && b[ib] == t) ++ib;
  }
  return area;
}

double mass_density(const Crystal& c) {
  double mass = 0.0;
  for (int z : c.atomic_numbers) mass += element_facts(z).mass;
  // amu/A^3 -> g/cm^3
  return mass * 1.66053906660 / det3(c.lattice);
}

int n_ary(const Crystal& c) {
  std::vector<int> zs = c.atomic_numbers;
  std::sort(zs.begin(), zs.end());
  zs.erase(std::unique(zs.begin(), zs.end()), zs.end());
  return static_cast<int>(zs.size());
}

DistributionMetrics distribution_metrics(const std::vector<Crystal>& generated,
                                         const std::vector<Crystal>& reference) {
  std::vector<double> rho_g, rho_r, nary_g, nary_r;
  for (const auto& c : generated) {
    rho_g.push_back(mass_density(c));
    nary_g.push_back(n_ary(c));
  }
  for (const auto& c : reference) {
    rho_r.push_back(mass_density(c));
    nary_r.push_back(n_ary(c));
  }
  return {wasserstein1(rho_g, rho_r), wasserstein1(nary_g, nary_r)};
}

namespace {

// O(n^3) Hungarian algorithm (potentials formulation), square cost matrix.
double hungarian_min_cost(const Mat& cost) {
  const int n = cost.rows();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = std::numeric_limits<double>::infinity();
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) total += cost(p[j] - 1, j - 1);
  return total;
}

// Best-assignment sum of squared min-image distances between same-element
// sites, with the prediction globally shifted by t.
double assignment_sq_sum(const Crystal& pred, const Crystal& gt, const Vec3& t) {
  std::map<int, std::vector<int>> by_elem_pred, by_elem_gt;
  for (int i = 0; i < pred.natoms(); ++i) by_elem_pred[pred.atomic_numbers[i]].push_back(i);
  for (int i = 0; i < gt.natoms(); ++i) by_elem_gt[gt.atomic_numbers[i]].push_back(i);

  double total = 0.0;
  for (const auto& [z, gt_idx] : by_elem_gt) {
    const auto& pr_idx = by_elem_pred.at(z);
    const int m = static_cast<int>(gt_idx.size());
    Mat cost(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        Vec3 fp = pred.frac_coords[pr_idx[a]];
        for (int k = 0; k < 3; ++k) fp[k] = mod1(fp[k] + t[k]);
        const auto r = min_image(fp, gt.frac_coords[gt_idx[b]], gt.lattice, 1);
        cost(a, b) = r.cart_dist * r.cart_dist;
      }
    total += hungarian_min_cost(cost);
  }
  return total;
}

// RMS of the best-assignment min-image distances; no global alignment is
// applied, so a rigid translation shows up in the number.
double best_rmsd(const Crystal& pred, const Crystal& gt) {
  return std::sqrt(assignment_sq_sum(pred, gt, Vec3{0, 0, 0}) / gt.natoms());
}

}  // namespace

CspMetrics csp_metrics(const std::vector<Crystal>& predictions,
                       const std::vector<Crystal>& ground_truths, const MatchTolerances& tol) {
  if (predictions.size() != ground_truths.size())
    throw invalid_input("csp_metrics: prediction/ground-truth count mismatch");
  CspMetrics res;
  double rmsd_sum = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (!match(predictions[i], ground_truths[i], tol)) continue;
    res.n_matched += 1;
    rmsd_sum += best_rmsd(predictions[i], ground_truths[i]);
  }
  res.match_rate =
      predictions.empty() ? 0.0 : static_cast<double>(res.n_matched) / predictions.size();
  if (res.n_matched > 0) res.mean_rmsd = rmsd_sum / res.n_matched;
  return res;
}

MetricsReport evaluate_dng(const std::vector<Crystal>& generated,
                           const std::vector<Crystal>& reference, const MatchTolerances& tol,
                           const std::map<int, double>* e_above_hull) {
  MetricsReport r;
  r.n_generated = static_cast<int64_t>(generated.size());
  if (generated.empty()) {
    r.empty_warning = true;
    return r;
  }

  int n_struct = 0, n_comp = 0, n_both = 0;
  std::vector<Crystal> valid_set;
  std::vector<int> eval_indices;  // finite geometry, N-ary >= 1
  std::vector<Crystal> eval_set;
  for (size_t i = 0; i < generated.size(); ++i) {
    const bool sv = structural_validity(generated[i]).valid;
    const bool cv = composition_validity(generated[i]);
    n_struct += sv;
    n_comp += cv;
    n_both += sv && cv;
    if (sv && cv) valid_set.push_back(generated[i]);
    if (crystal_finite(generated[i]) && det3(generated[i].lattice) > 0.0 &&
        n_ary(generated[i]) >= 1) {
      eval_indices.push_back(static_cast<int>(i));
      eval_set.push_back(generated[i]);
    }
  }
  const double n = static_cast<double>(generated.size());
  r.struct_val = n_struct / n;
  r.comp_val = n_comp / n;
  r.overall_val = n_both / n;
  r.n_eval = static_cast<int64_t>(eval_set.size());
  r.n_novel_cand = r.n_eval;

  const UniquenessResult uq = uniqueness(eval_set, tol);
  r.unique = uq.rate;
  const UnResult un = un_rate(eval_set, reference, tol);
  r.novel = un.novel_rate;
  r.un = un.un_rate;
  r.empty_warning = uq.empty_input;

  if (e_above_hull && !un.un_representatives.empty()) {
    int stable = 0, meta = 0;
    for (int local : un.un_representatives) {
      const int orig = eval_indices[local];
      auto it = e_above_hull->find(orig);
      if (it == e_above_hull->end()) continue;  // missing entries count as failures
      if (it->second <= 0.0) ++stable;
      if (it->second <= 0.1) ++meta;
    }
    const double nun = static_cast<double>(un.un_representatives.size());
    r.stable_frac = stable / nun;
    r.meta_frac = meta / nun;
    const SunResult s = sun_compose(r.un, *r.stable_frac, *r.meta_frac);
    r.sun = s.sun;
    r.msun = s.msun;
  }

  if (!valid_set.empty() && !reference.empty()) {
    const DistributionMetrics dm = distribution_metrics(valid_set, reference);
    r.wdist_rho = dm.wdist_rho;
    r.wdist_nary = dm.wdist_nary;
  }
  return r;
}

std::string metrics_report_to_json(const MetricsReport& r, const std::string& tool_version,
                                   const std::string& config_hash) {
  nlohmann::json j;
  j["tool_version"] = tool_version;
  j["config_hash"] = config_hash;
  j["n_generated"] = r.n_generated;
  j["n_eval"] = r.n_eval;
  j["n_novel_cand"] = r.n_novel_cand;
  j["empty_warning"] = r.empty_warning;

  auto metric = [&](const char* name, double value, bool extensive) {
    nlohmann::json m;
    m["value"] = value;
    m["kind"] = extensive ? "extensive" : "intensive";
    if (extensive) m["n_generated"] = r.n_generated;
    j["metrics"][name] = m;
  };
  metric("struct_val", r.struct_val, false);
  metric("comp_val", r.comp_val, false);
  metric("overall_val", r.overall_val, false);
  metric("unique", r.unique, true);
  metric("novel", r.novel, true);
  metric("un", r.un, true);
  if (r.stable_frac) metric("stable_frac_un", *r.stable_frac, false);
  if (r.meta_frac) metric("meta_frac_un", *r.meta_frac, false);
  if (r.sun) metric("sun", *r.sun, true);
  if (r.msun) metric("msun", *r.msun, true);
  if (r.wdist_rho) metric("wdist_rho", *r.wdist_rho, false);
  if (r.wdist_nary) metric("wdist_nary", *r.wdist_nary, false);
  return j.dump(2);
}

}  // namespace crystalite
