#include "crystalite/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "crystalite/elements.hpp"
#include "crystalite/geometry.hpp"  // invalid_input

namespace crystalite {

namespace {

// Cyclic Jacobi eigendecomposition for small symmetric matrices.
// Returns eigenvalues (descending) and the matching orthonormal columns in v.
void jacobi_eigen(Mat a, std::vector<double>& eigvals, Mat& v) {
  const int n = a.rows();
  v = Mat(n, n);
  for (int i = 0; i < n; ++i) v(i, i) = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> diag(n);
  for (int i = 0; i < n; ++i) diag[i] = a(i, i);
  std::stable_sort(order.begin(), order.end(),
                   [&diag](int x, int y) { return diag[x] > diag[y]; });

  eigvals.resize(n);
  Mat sorted(n, n);
  for (int j = 0; j < n; ++j) {
    eigvals[j] = diag[order[j]];
    for (int i = 0; i < n; ++i) sorted(i, j) = v(i, order[j]);
  }
  v = sorted;
}

void l2_normalize_rows(Mat& m) {
  for (int i = 0; i < m.rows(); ++i) {
    double nrm = 0.0;
    for (int j = 0; j < m.cols(); ++j) nrm += m(i, j) * m(i, j);
    nrm = std::sqrt(nrm);
    if (nrm > 0.0)
      for (int j = 0; j < m.cols(); ++j) m(i, j) /= nrm;
  }
}

}  // namespace

std::vector<double> raw_descriptor(int z) {
  const ElementFacts& f = element_facts(z);
  std::vector<double> d(kDescriptorDim, 0.0);
  d[f.period - 1] = 1.0;                                   // onehot7(period-1)
  d[7 + f.group] = 1.0;                                    // onehot19(group)
  const int block_idx = f.block == 's' ? 0 : f.block == 'p' ? 1 : f.block == 'd' ? 2 : 3;
  d[7 + 19 + block_idx] = 1.0;                             // onehot4(block)
  d[30] = f.val_s / 2.0;
  d[31] = f.val_p / 6.0;
  d[32] = f.val_d / 10.0;
  d[33] = f.val_f / 14.0;
  return d;
}

int TokenTable::index_of(int z) const {
  auto it = std::lower_bound(elements.begin(), elements.end(), z);
  if (it == elements.end() || *it != z) return -1;
  return static_cast<int>(it - elements.begin());
}

TokenTable build_table(const std::vector<int>& element_set, int d_h, bool use_pca) {
  if (element_set.empty()) throw invalid_input("build_table: empty element set");
  if (use_pca && (d_h < 1 || d_h > kDescriptorDim))
    throw invalid_input("build_table: d_h must be in [1," + std::to_string(kDescriptorDim) +
                        "], achievable rank is at most " + std::to_string(kDescriptorDim));

  TokenTable t;
  t.elements = element_set;
  std::sort(t.elements.begin(), t.elements.end());
  t.elements.erase(std::unique(t.elements.begin(), t.elements.end()), t.elements.end());
  const int nz = static_cast<int>(t.elements.size());
  t.use_pca = use_pca;
  t.d_h = use_pca ? d_h : kDescriptorDim;
  t.facts_hash = facts_version_hash();

  Mat raw(nz, kDescriptorDim);
  for (int i = 0; i < nz; ++i) {
    const auto d = raw_descriptor(t.elements[i]);
    for (int j = 0; j < kDescriptorDim; ++j) raw(i, j) = d[j];
  }

  // Featurewise standardization (population std; near-zero replaced by 1).
  t.mean.assign(kDescriptorDim, 0.0);
  t.std_dev.assign(kDescriptorDim, 0.0);
  for (int j = 0; j < kDescriptorDim; ++j) {
    double mu = 0.0;
    for (int i = 0; i < nz; ++i) mu += raw(i, j);
    mu /= nz;
    double var = 0.0;
    for (int i = 0; i < nz; ++i) var += (raw(i, j) - mu) * (raw(i, j) - mu);
    var /= nz;
    double sd = std::sqrt(var);
    if (sd < 1e-8) sd = 1.0;
    t.mean[j] = mu;
    t.std_dev[j] = sd;
  }

  // Group rebalancing by inverse square root of group size.
  static const int group_sizes[4] = {7, 19, 4, 4};
  Mat balanced(nz, kDescriptorDim);
  for (int i = 0; i < nz; ++i) {
    int j = 0;
    for (int gidx = 0; gidx < 4; ++gidx) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(group_sizes[gidx]));
      for (int k = 0; k < group_sizes[gidx]; ++k, ++j)
        balanced(i, j) = (raw(i, j) - t.mean[j]) / t.std_dev[j] * scale;
    }
  }

  t.raw_prototypes = balanced;
  l2_normalize_rows(t.raw_prototypes);

  if (!use_pca) {
    t.prototypes = t.raw_prototypes;
    return t;
  }

  // PCA on the balanced (pre-normalization) descriptors. The covariance
  // eigenbasis provides an orthonormal completion, so d_h up to 34 is valid
  // even past the numerical rank; trailing components then carry ~zero
  // variance.
  Mat cov(kDescriptorDim, kDescriptorDim);
  for (int a = 0; a < kDescriptorDim; ++a)
    for (int b = a; b < kDescriptorDim; ++b) {
      double s = 0.0;
      for (int i = 0; i < nz; ++i) s += balanced(i, a) * balanced(i, b);
      cov(a, b) = cov(b, a) = s / nz;
    }
  std::vector<double> eigvals;
  Mat eigvecs;
  jacobi_eigen(cov, eigvals, eigvecs);

  t.pca_basis = Mat(kDescriptorDim, d_h);
  for (int j = 0; j < d_h; ++j) {
    // Sign convention: largest-magnitude loading positive.
    int argmax = 0;
    for (int i = 1; i < kDescriptorDim; ++i)
      if (std::abs(eigvecs(i, j)) > std::abs(eigvecs(argmax, j))) argmax = i;
    const double sgn = eigvecs(argmax, j) >= 0.0 ? 1.0 : -1.0;
    for (int i = 0; i < kDescriptorDim; ++i) t.pca_basis(i, j) = sgn * eigvecs(i, j);
  }

  t.prototypes = matmul(balanced, t.pca_basis);
  l2_normalize_rows(t.prototypes);
  return t;
}

Mat encode(const std::vector<int>& atomic_numbers, const TokenTable& table) {
  Mat h(static_cast<int>(atomic_numbers.size()), table.d_h);
  for (size_t i = 0; i < atomic_numbers.size(); ++i) {
    const int idx = table.index_of(atomic_numbers[i]);
    if (idx < 0)
      throw invalid_input("encode: element Z=" + std::to_string(atomic_numbers[i]) +
                          " not in token table");
    for (int j = 0; j < table.d_h; ++j) h(static_cast<int>(i), j) = table.prototypes(idx, j);
  }
  return h;
}

int decode(const double* h_hat, int n, const TokenTable& table) {
  if (n != table.d_h) throw invalid_input("decode: dimension mismatch");
  double norm = 0.0;
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(h_hat[j])) throw invalid_input("decode: non-finite token");
    norm += h_hat[j] * h_hat[j];
  }
  if (norm == 0.0) throw invalid_input("decode: zero vector has no direction");

  int best = -1;
  double best_dot = 0.0;
  for (int i = 0; i < table.prototypes.rows(); ++i) {
    double dot = 0.0;
    for (int j = 0; j < n; ++j) dot += h_hat[j] * table.prototypes(i, j);
    if (best < 0 || dot > best_dot) {  // ties keep the earlier (smaller Z) row
      best = i;
      best_dot = dot;
    }
  }
  return table.elements[best];
}

int decode(const std::vector<double>& h_hat, const TokenTable& table) {
  return decode(h_hat.data(), static_cast<int>(h_hat.size()), table);
}

std::string token_table_to_json(const TokenTable& t) {
  nlohmann::json j;
  j["format"] = "crystalite-token-table-v1";
  j["facts_hash"] = t.facts_hash;
  j["elements"] = t.elements;
  j["d_h"] = t.d_h;
  j["use_pca"] = t.use_pca;
  j["mean"] = t.mean;
  j["std_dev"] = t.std_dev;
  auto mat_to_json = [](const Mat& m) {
    nlohmann::json out;
    out["rows"] = m.rows();
    out["cols"] = m.cols();
    std::vector<double> data(m.data(), m.data() + m.size());
    out["data"] = data;
    return out;
  };
  if (t.use_pca) j["pca_basis"] = mat_to_json(t.pca_basis);
  j["raw_prototypes"] = mat_to_json(t.raw_prototypes);
  j["prototypes"] = mat_to_json(t.prototypes);
  return j.dump();
}

TokenTable token_table_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("format", "") != "crystalite-token-table-v1")
    throw invalid_input("token table: unknown format");
  TokenTable t;
  t.facts_hash = j.at("facts_hash").get<uint64_t>();
  if (t.facts_hash != facts_version_hash())
    throw invalid_input("token table: element facts version mismatch");
  t.elements = j.at("elements").get<std::vector<int>>();
  t.d_h = j.at("d_h").get<int>();
  t.use_pca = j.at("use_pca").get<bool>();
  t.mean = j.at("mean").get<std::vector<double>>();
  t.std_dev = j.at("std_dev").get<std::vector<double>>();
  auto mat_from_json = [](const nlohmann::json& mj) {
    Mat m(mj.at("rows").get<int>(), mj.at("cols").get<int>());
    const auto data = mj.at("data").get<std::vector<double>>();
    if (data.size() != m.size()) throw invalid_input("token table: bad matrix payload");
    std::copy(data.begin(), data.end(), m.data());
    return m;
  };
  if (t.use_pca) t.pca_basis = mat_from_json(j.at("pca_basis"));
  t.raw_prototypes = mat_from_json(j.at("raw_prototypes"));
  t.prototypes = mat_from_json(j.at("prototypes"));
  return t;
}

}  // namespace crystalite
