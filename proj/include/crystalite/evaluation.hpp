#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crystalite/geometry.hpp"

namespace crystalite {

struct MatchTolerances {
  double stol = 0.5;       // normalized-distance tolerance
  double ltol = 0.3;       // relative lattice-length tolerance
  double angle_tol = 10.0; // degrees
};

struct ValidityResult {
  bool valid = false;
  std::string reason;  // "nonfinite", "lattice", "volume", "min_dist" or empty
};

// Gates: finite values and positive cell, volume >= 0.1 A^3, then minimum
// interatomic distance (pairs and self-images) >= 0.5 A. Geometry is checked
// on the canonicalized cell so the R=1 minimum-image search is exact.
ValidityResult structural_validity(const Crystal& c);

// True iff some species-wise assignment of common oxidation states balances
// charge for the reduced formula; unary structures and all-metal alloys pass
// outright. The oxidation table maps Z to its candidate states.
bool composition_validity(const Crystal& c);
bool composition_validity(const Crystal& c, const std::map<int, std::vector<int>>& ox_table);

// Order-insensitive structural identity proxy: reduced composition, atom
// count, sorted V^{1/3}-normalized min-image pair distances, sorted lattice
// parameters, all on the canonical cell.
struct Fingerprint {
  std::vector<std::pair<int, int>> reduced_composition;  // (Z, count), sorted
  int natoms = 0;
  std::vector<double> norm_dists;   // sorted
  std::array<double, 3> lengths{};  // sorted
  std::array<double, 3> angles{};   // sorted, degrees
  double volume = 0.0;
};

Fingerprint fingerprint(const Crystal& c);

bool match(const Fingerprint& a, const Fingerprint& b, const MatchTolerances& tol);
bool match(const Crystal& a, const Crystal& b, const MatchTolerances& tol);

struct UniquenessResult {
  double rate = 0.0;
  std::vector<int> representatives;  // first-occurrence indices
  bool empty_input = false;
};

// Greedy first-occurrence deduplication.
UniquenessResult uniqueness(const std::vector<Crystal>& crystals, const MatchTolerances& tol);

struct UnResult {
  double novel_rate = 0.0;
  double un_rate = 0.0;
  std::vector<int> novel_indices;
  std::vector<int> un_representatives;
  bool empty_input = false;
};

// Two-stage: restrict to the novel subset (no match in the reference), then
// greedily deduplicate within it. Both rates use the candidate count.
UnResult un_rate(const std::vector<Crystal>& crystals, const std::vector<Crystal>& reference,
                 const MatchTolerances& tol);

// Exact empirical Wasserstein-1 via CDF-area integration.
double wasserstein1(std::vector<double> a, std::vector<double> b);

// Mass density in g/cm^3 and distinct-element count.
double mass_density(const Crystal& c);
int n_ary(const Crystal& c);

struct DistributionMetrics {
  double wdist_rho = 0.0;
  double wdist_nary = 0.0;
};

DistributionMetrics distribution_metrics(const std::vector<Crystal>& generated,
                                         const std::vector<Crystal>& reference);

struct CspMetrics {
  double match_rate = 0.0;
  std::optional<double> mean_rmsd;  // absent when nothing matched
  int n_matched = 0;
};

// Match rate via the fingerprint matcher; RMSD over matched pairs is the
// best per-element assignment of min-image Cartesian distances under the
// ground-truth lattice, in raw Angstrom (no global alignment).
CspMetrics csp_metrics(const std::vector<Crystal>& predictions,
                       const std::vector<Crystal>& ground_truths, const MatchTolerances& tol);

struct SunResult {
  double sun = 0.0;
  double msun = 0.0;
};

inline SunResult sun_compose(double un, double stable_frac, double meta_frac) {
  return {un * stable_frac, un * meta_frac};
}

struct MetricsReport {
  int64_t n_generated = 0;
  int64_t n_eval = 0;        // candidates after the finite/N-ary filter
  int64_t n_novel_cand = 0;
  double struct_val = 0.0;
  double comp_val = 0.0;
  double overall_val = 0.0;
  double unique = 0.0;
  double novel = 0.0;
  double un = 0.0;
  std::optional<double> stable_frac;  // within the UN set, <= 0.0 eV/atom
  std::optional<double> meta_frac;    //                   <= 0.1 eV/atom
  std::optional<double> sun;
  std::optional<double> msun;
  std::optional<double> wdist_rho;
  std::optional<double> wdist_nary;
  bool empty_warning = false;
};

// Full DNG evaluation. e_above_hull, when provided, is keyed by generated
// index; entries missing from it count as not stable.
MetricsReport evaluate_dng(const std::vector<Crystal>& generated,
                           const std::vector<Crystal>& reference, const MatchTolerances& tol,
                           const std::map<int, double>* e_above_hull = nullptr);

std::string metrics_report_to_json(const MetricsReport& r, const std::string& tool_version,
                                   const std::string& config_hash);

}  // namespace crystalite
