#include "crystalite/autodiff.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace crystalite {

double stable_sum(const double* v, int n) {
  if (n == 0) return 0.0;
  if (n == 1) return v[0];
  std::array<double, 64> buf;
  std::vector<double> heap;
  double* b;
  if (n <= 64) {
    b = buf.data();
  } else {
    heap.resize(n);
    b = heap.data();
  }
  std::copy(v, v + n, b);
  std::sort(b, b + n);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += b[i];
  return s;
}

namespace {

inline double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus_scalar(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

constexpr double kLnEps = 1e-6;

}  // namespace

Var Tape::make(Mat val, bool requires_grad, std::function<void(Tape&)> back) {
  nodes_.push_back(Node{std::move(val), Mat(), requires_grad, std::move(back)});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Mat& Tape::grad_buf(int idx) {
  Node& n = nodes_[idx];
  if (n.grad.empty()) n.grad = Mat::zeros(n.val.rows(), n.val.cols());
  return n.grad;
}

const Mat& Tape::grad(Var v) const {
  const Node& n = nodes_[v.idx];
  if (n.grad.empty()) {
    static const Mat kEmpty;
    if (n.val.empty()) return kEmpty;
    // Never touched by backward: gradient is zero.
    const_cast<Node&>(n).grad = Mat::zeros(n.val.rows(), n.val.cols());
  }
  return n.grad;
}

Var Tape::input(Mat value) { return make(std::move(value), false, nullptr); }

Var Tape::param(Mat value) { return make(std::move(value), true, nullptr); }

Var Tape::scalar_input(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return input(std::move(m));
}

Var Tape::matmul(Var a, Var b) {
  Mat out = crystalite::matmul(val(a), val(b));
  Var r = make(std::move(out), rg(a) || rg(b), nullptr);
  if (nodes_[r.idx].requires_grad) {
    const int ridx = r.idx, ai = a.idx, bi = b.idx;
    nodes_[r.idx].back = [ridx, ai, bi](Tape& t) {
      const Mat& go = t.nodes_[ridx].grad;
      if (t.nodes_[ai].requires_grad)
        t.grad_buf(ai) += crystalite::matmul(go, crystalite::transpose(t.nodes_[bi].val));
      if (t.nodes_[bi].requires_grad)
        t.grad_buf(bi) += crystalite::matmul(crystalite::transpose(t.nodes_[ai].val), go);
    };
  }
  return r;
}

Var Tape::matmul_stable(Var a, Var b) {
  const Mat& av = val(a);
  const Mat& bv = val(b);
  const int n = av.rows(), k = av.cols(), m = bv.cols();
  Mat out(n, m);
  std::vector<double> terms(k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      for (int p = 0; p < k; ++p) terms[p] = av(i, p) * bv(p, j);
      out(i, j) = stable_sum(terms.data(), k);
    }
  const bool g = rg(a) || rg(b);
  Var r = make(std::move(out), g, nullptr);
  if (g) {
    const int ridx = r.idx, ai = a.idx, bi = b.idx;
    nodes_[r.idx].back = [ridx, ai, bi](Tape& t) {
      const Mat& go = t.nodes_[ridx].grad;
      if (t.nodes_[ai].requires_grad) {
        Mat bt = crystalite::transpose(t.nodes_[bi].val);
        t.grad_buf(ai) += crystalite::matmul(go, bt);
      }
      if (t.nodes_[bi].requires_grad) {
        Mat at = crystalite::transpose(t.nodes_[ai].val);
        t.grad_buf(bi) += crystalite::matmul(at, go);
      }
    };
  }
  return r;
}

Var Tape::transpose(Var a) {
  Var r = make(crystalite::transpose(val(a)), rg(a), nullptr);
  if (rg(a)) {
    const int ridx = r.idx, ai = a.idx;
    nodes_[r.idx].back = [ridx, ai](Tape& t) {
      t.grad_buf(ai) += crystalite::transpose(t.nodes_[ridx].grad);
    };
  }
  return r;
}

Var Tape::add(Var a, Var b) {
  Mat out = val(a);
  out += val(b);
  Var r = make(std::move(out), rg(a) || rg(b), nullptr);
  if (nodes_[r.idx].requires_grad) {
    const int ridx = r.idx, ai = a.idx, bi = b.idx;
    nodes_[r.idx].back = [ridx, ai, bi](Tape& t) {
      if (t.nodes_[ai].requires_grad) t.grad_buf(ai) += t.nodes_[ridx].grad;
      if (t.nodes_[bi].requires_grad) t.grad_buf(bi) += t.nodes_[ridx].grad;
    };
  }
  return r;
}

Var Tape::sub(Var a, Var b) {
  Mat out = val(a);
  out -= val(b);
  Var r = make(std::move(out), rg(a) || rg(b), nullptr);
  if (nodes_[r.idx].requires_grad) {
    const int ridx = r.idx, ai = a.idx, bi = b.idx;
    nodes_[r.idx].back = [ridx, ai, bi](Tape& t) {
      if (t.nodes_[ai].requires_grad) t.grad_buf(ai) += t.nodes_[ridx].grad;
      if (t.nodes_[bi].requires_grad) t.grad_buf(bi) -= t.nodes_[ridx].grad;
    };
  }
  return r;
}

Var Tape::hadamard(Var a, Var b) {
  const Mat& av = val(a);
  const Mat& bv = val(b);
  Mat out(av.rows(), av.cols());
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  Var r = make(std::move(out), rg(a) || rg(b), nullptr);
  if (nodes_[r.idx].requires_grad) {
    const int ridx = r.idx, ai = a.idx, bi = b.idx;
    nodes_[r.idx].back = [ridx, ai, bi](Tape& t) {
      const Mat& go = t.nodes_[ridx].grad;
      if (t.nodes_[ai].requires_grad) {
        Mat& ga = t.grad_buf(ai);
        const Mat& bv2 = t.nodes_[bi].val;
        for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv2[i];
      }
      if (t.nodes_[bi].requires_grad) {
        Mat& gb = t.grad_buf(bi);
        const Mat& av2 = t.nodes_[ai].val;
        for (size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av2[i];
      }
    };
  }
  return r;
}

Var Tape::scale(Var a, double s) {
  Mat out = val(a);
  out *= s;
  Var r = make(std::move(out), rg(a), nullptr);
  if (rg(a)) {
    const int ridx = r.idx, ai = a.idx;
    nodes_[r.idx].back = [ridx, ai, s](Tape& t) {
      Mat g = t.nodes_[ridx].grad;
      g *= s;
      t.grad_buf(ai) += g;
    };
  }
  return r;
}

Var Tape::add_scalar(Var a, double c) {
  Mat out = val(a);
  for (size_t i = 0; i < out.size(); ++i) out[i] += c;
  Var r = make(std::move(out), rg(a), nullptr);
  if (rg(a)) {
    const int ridx = r.idx, ai = a.idx;
    nodes_[r.idx].back = [ridx, ai](Tape& t) { t.grad_buf(ai) += t.nodes_[ridx].grad; };
  }
  return r;
}

Var Tape::affine(Var a, double s, Mat b) {
  Mat out = val(a);
  out *= s;
  out += b;
  Var r = make(std::move(out), rg(a), nullptr);
  if (rg(a)) {
    const int ridx = r.idx, ai = a.idx;
    nodes_[r.idx].back = [ridx, ai, s](Tape& t) {
      Mat g = t.nodes_[ridx].grad;
      g *= s;
      t.grad_buf(ai) += g;
    };
  }
  return r;
}

Var Tape::wrap_minus(Var a, Mat target) {
  const Mat& av = val(a);
  Mat out(av.rows(), av.cols());
  for (size_t i = 0; i < out.size(); ++i) {
    const double u = av[i] - target[i];
    out[i] = u - std::floor(u + 0.5);
  }
  Var r = make(std::move(out), rg(a), nullptr);
  if (rg(a)) {
    const int ridx = r.idx, ai = a.idx;
    nodes_[r.idx].back = [ridx, ai](Tape& t) { t.grad_buf(ai) += t.nodes_[ridx].grad; };
  }
  return r;
}

Var Tape::add_rowvec(Var a, Var rvec) {
  const Mat& av = val(a);
  const Mat& rv = val(rvec);
  Mat out = av;
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) += rv(0, j);
  Var r = make(std::move(out), rg(a) || rg(rvec), nullptr);
  if (nodes_[r.idx].requires_grad) {
    const int ridx = r.idx, ai = a.idx, vi = rvec.idx;
    nodes_[r.idx].back = [ridx, ai, vi](Tape& t) {
      const Mat& go = t.nodes_[ridx].grad;
      if (t.nodes_[ai].requires_grad) t.grad_buf(ai) += go;
      if (t.nodes_[vi].requires_grad) {
        Mat& gv = t.grad_buf(vi);
        for (int i = 0; i < go.rows(); ++i)
          for (int j = 0; j < go.cols(); ++j) gv(0, j) += go(i, j);
      }
    };
  }
  return r;
}

Var Tape::mul_rowvec(Var a, Var rvec) {
  const Mat& av = val(a);
  const Mat& rv = val(rvec);
  Mat out = av;
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) *= rv(0, j);
  Var r = make(std::move(out), rg(a) || rg(rvec), nullptr);
  if (nodes_[r.idx].requires_grad) {
    const int ridx = r.idx, ai = a.idx, vi = rvec.idx;
    nodes_[r.idx].back = [ridx, ai, vi](Tape& t) {
      const Mat& go = t.nodes_[ridx].grad;
      const Mat& av2 = t.nodes_[ai].val;
      const Mat& rv2 = t.nodes_[vi].val;
      if (t.nodes_[ai].requires_grad) {
        Mat& ga = t.grad_buf(ai);
        for (int i = 0; i < go.rows(); ++i)
          for (int j = 0; j < go.cols(); ++j) ga(i, j) += go(i, j) * rv2(0, j);
      }
      if (t.nodes_[vi].requires_grad) {
        Mat& gv = t.grad_buf(vi);
        for (int i = 0; i < go.rows(); ++i)
          for (int j = 0; j < go.cols(); ++j) gv(0, j) += go(i, j) * av2(i, j);
      }
    };
  }
  return r;
}

Var Tape::scale_by(Var a, Var s) {
  const double sv = val(s)(0, 0);
  Mat out = val(a);
  out *= sv;
  Var r = make(std::move(out), rg(a) || rg(s), nullptr);
  if (nodes_[r.idx].requires_grad) {
    const int ridx = r.idx, ai = a.idx, si = s.idx;
    nodes_[r.idx].back = [ridx, ai, si](Tape& t) {
      const Mat& go = t.nodes_[ridx].grad;
      const double sv2 = t.nodes_[si].val(0, 0);
      if (t.nodes_[ai].requires_grad) {
        Mat g = go;
        g *= sv2;
        t.grad_buf(ai) += g;
      }
      if (t.nodes_[si].requires_grad) {
        const Mat& av2 = t.nodes_[ai].val;
        double acc = 0.0;
        for (size_t i = 0; i < go.size(); ++i) acc += go[i] * av2[i];
        t.grad_buf(si)(0, 0) += acc;
      }
    };
  }
  return r;
}

Var Tape::const_times_scalar(Mat c, Var s) {
  const double sv = val(s)(0, 0);
  Mat out = c;
  out *= sv;
  Var r = make(std::move(out), rg(s), nullptr);
  if (rg(s)) {
    const int ridx = r.idx, si = s.idx;
    nodes_[r.idx].back = [ridx, si, c = std::move(c)](Tape& t) {
      const Mat& go = t.nodes_[ridx].grad;
      double acc = 0.0;
      for (size_t i = 0; i < go.size(); ++i) acc += go[i] * c[i];
      t.grad_buf(si)(0, 0) += acc;
    };
  }
  return r;
}

Var Tape::silu(Var a) {
  const Mat& av = val(a);
  Mat out(av.rows(), av.cols());
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * sigmoid_scalar(av[i]);
  Var r = make(std::move(out), rg(a), nullptr);
  if (rg(a)) {
    const int ridx = r.idx, ai = a.idx;
    nodes_[r.idx].back = [ridx, ai](Tape& t) {
      const Mat& go = t.nodes_[ridx].grad;
      const Mat& av2 = t.nodes_[ai].val;
      Mat& ga = t.grad_buf(ai);
      for (size_t i = 0; i < go.size(); ++i) {
        const double s = sigmoid_scalar(av2[i]);
        ga[i] += go[i] * s * (1.0 + av2[i] * (1.0 - s));
      }
    };
  }
  return r;
}

Var Tape::sigmoid(Var a) {
  const Mat& av = val(a);
  Mat out(av.rows(), av.cols());
  for (size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_scalar(av[i]);
  Var r = make(std::move(out), rg(a), nullptr);
  if (rg(a)) {
    const int ridx = r.idx, ai = a.idx;
    nodes_[r.idx].back = [ridx, ai](Tape& t) {
      const Mat& go = t.nodes_[ridx].grad;
      const Mat& ov = t.nodes_[ridx].val;
      Mat& ga = t.grad_buf(ai);
      for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * ov[i] * (1.0 - ov[i]);
    };
  }
  return r;
}

Var Tape::softplus(Var a) {
  const Mat& av = val(a);
  Mat out(av.rows(), av.cols());
  for (size_t i = 0; i < out.size(); ++i) out[i] = softplus_scalar(av[i]);
  Var r = make(std::move(out), rg(a), nullptr);
  if (rg(a)) {
    const int ridx = r.idx, ai = a.idx;
    nodes_[r.idx].back = [ridx, ai](Tape& t) {
      const Mat& go = t.nodes_[ridx].grad;
      const Mat& av2 = t.nodes_[ai].val;
      Mat& ga = t.grad_buf(ai);
      for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * sigmoid_scalar(av2[i]);
    };
  }
  return r;
}

Var Tape::layer_norm_rows(Var a) {
  const Mat& av = val(a);
  const int n = av.rows(), c = av.cols();
  Mat out(n, c);
  Mat inv_std(n, 1);
  for (int i = 0; i < n; ++i) {
    double mu = 0.0;
    for (int j = 0; j < c; ++j) mu += av(i, j);
    mu /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) var += (av(i, j) - mu) * (av(i, j) - mu);
    var /= c;
    const double is = 1.0 / std::sqrt(var + kLnEps);
    inv_std(i, 0) = is;
    for (int j = 0; j < c; ++j) out(i, j) = (av(i, j) - mu) * is;
  }
  Var r = make(std::move(out), rg(a), nullptr);
  if (rg(a)) {
    const int ridx = r.idx, ai = a.idx;
    nodes_[r.idx].back = [ridx, ai, inv_std = std::move(inv_std)](Tape& t) {
      const Mat& go = t.nodes_[ridx].grad;
      const Mat& xhat = t.nodes_[ridx].val;
      Mat& ga = t.grad_buf(ai);
      const int n2 = go.rows(), c2 = go.cols();
      for (int i = 0; i < n2; ++i) {
        double gmean = 0.0, gxmean = 0.0;
        for (int j = 0; j < c2; ++j) {
          gmean += go(i, j);
          gxmean += go(i, j) * xhat(i, j);
        }
        gmean /= c2;
        gxmean /= c2;
        const double is = inv_std(i, 0);
        for (int j = 0; j < c2; ++j)
          ga(i, j) += is * (go(i, j) - gmean - xhat(i, j) * gxmean);
      }
    };
  }
  return r;
}

Var Tape::softmax_rows(Var a) {
  const Mat& av = val(a);
  const int n = av.rows(), c = av.cols();
  Mat out(n, c);
  std::vector<double> e(c);
  for (int i = 0; i < n; ++i) {
    double m = av(i, 0);
    for (int j = 1; j < c; ++j) m = std::max(m, av(i, j));
    for (int j = 0; j < c; ++j) e[j] = std::exp(av(i, j) - m);
    const double denom = stable_sum(e.data(), c);
    for (int j = 0; j < c; ++j) out(i, j) = e[j] / denom;
  }
  Var r = make(std::move(out), rg(a), nullptr);
  if (rg(a)) {
    const int ridx = r.idx, ai = a.idx;
    nodes_[r.idx].back = [ridx, ai](Tape& t) {
      const Mat& go = t.nodes_[ridx].grad;
      const Mat& p = t.nodes_[ridx].val;
      Mat& ga = t.grad_buf(ai);
      for (int i = 0; i < go.rows(); ++i) {
        double dot = 0.0;
        for (int j = 0; j < go.cols(); ++j) dot += go(i, j) * p(i, j);
        for (int j = 0; j < go.cols(); ++j) ga(i, j) += p(i, j) * (go(i, j) - dot);
      }
    };
  }
  return r;
}

Var Tape::slice_rows(Var a, int r0, int r1) {
  const Mat& av = val(a);
  Mat out(r1 - r0, av.cols());
  for (int i = r0; i < r1; ++i)
    for (int j = 0; j < av.cols(); ++j) out(i - r0, j) = av(i, j);
  Var r = make(std::move(out), rg(a), nullptr);
  if (rg(a)) {
    const int ridx = r.idx, ai = a.idx;
    nodes_[r.idx].back = [ridx, ai, r0](Tape& t) {
      const Mat& go = t.nodes_[ridx].grad;
      Mat& ga = t.grad_buf(ai);
      for (int i = 0; i < go.rows(); ++i)
        for (int j = 0; j < go.cols(); ++j) ga(i + r0, j) += go(i, j);
    };
  }
  return r;
}

Var Tape::slice_cols(Var a, int c0, int c1) {
  const Mat& av = val(a);
  Mat out(av.rows(), c1 - c0);
  for (int i = 0; i < av.rows(); ++i)
    for (int j = c0; j < c1; ++j) out(i, j - c0) = av(i, j);
  Var r = make(std::move(out), rg(a), nullptr);
  if (rg(a)) {
    const int ridx = r.idx, ai = a.idx;
    nodes_[r.idx].back = [ridx, ai, c0](Tape& t) {
      const Mat& go = t.nodes_[ridx].grad;
      Mat& ga = t.grad_buf(ai);
      for (int i = 0; i < go.rows(); ++i)
        for (int j = 0; j < go.cols(); ++j) ga(i, j + c0) += go(i, j);
    };
  }
  return r;
}

Var Tape::concat_rows(Var a, Var b) {
  const Mat& av = val(a);
  const Mat& bv = val(b);
  Mat out(av.rows() + bv.rows(), av.cols());
  for (int i = 0; i < av.rows(); ++i)
    for (int j = 0; j < av.cols(); ++j) out(i, j) = av(i, j);
  for (int i = 0; i < bv.rows(); ++i)
    for (int j = 0; j < bv.cols(); ++j) out(av.rows() + i, j) = bv(i, j);
  Var r = make(std::move(out), rg(a) || rg(b), nullptr);
  if (nodes_[r.idx].requires_grad) {
    const int ridx = r.idx, ai = a.idx, bi = b.idx;
    const int arows = av.rows();
    nodes_[r.idx].back = [ridx, ai, bi, arows](Tape& t) {
      const Mat& go = t.nodes_[ridx].grad;
      if (t.nodes_[ai].requires_grad) {
        Mat& ga = t.grad_buf(ai);
        for (int i = 0; i < ga.rows(); ++i)
          for (int j = 0; j < ga.cols(); ++j) ga(i, j) += go(i, j);
      }
      if (t.nodes_[bi].requires_grad) {
        Mat& gb = t.grad_buf(bi);
        for (int i = 0; i < gb.rows(); ++i)
          for (int j = 0; j < gb.cols(); ++j) gb(i, j) += go(arows + i, j);
      }
    };
  }
  return r;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  int cols = 0;
  bool g = false;
  for (Var p : parts) {
    cols += val(p).cols();
    g = g || rg(p);
  }
  const int rows = val(parts[0]).rows();
  Mat out(rows, cols);
  int off = 0;
  for (Var p : parts) {
    const Mat& pv = val(p);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < pv.cols(); ++j) out(i, off + j) = pv(i, j);
    off += pv.cols();
  }
  Var r = make(std::move(out), g, nullptr);
  if (g) {
    const int ridx = r.idx;
    std::vector<int> idxs;
    std::vector<int> widths;
    for (Var p : parts) {
      idxs.push_back(p.idx);
      widths.push_back(val(p).cols());
    }
    nodes_[r.idx].back = [ridx, idxs, widths](Tape& t) {
      const Mat& go = t.nodes_[ridx].grad;
      int off2 = 0;
      for (size_t k = 0; k < idxs.size(); ++k) {
        if (t.nodes_[idxs[k]].requires_grad) {
          Mat& gp = t.grad_buf(idxs[k]);
          for (int i = 0; i < go.rows(); ++i)
            for (int j = 0; j < widths[k]; ++j) gp(i, j) += go(i, off2 + j);
        }
        off2 += widths[k];
      }
    };
  }
  return r;
}

Var Tape::pad_bottom_right(Var a) {
  const Mat& av = val(a);
  Mat out(av.rows() + 1, av.cols() + 1, 0.0);
  for (int i = 0; i < av.rows(); ++i)
    for (int j = 0; j < av.cols(); ++j) out(i, j) = av(i, j);
  Var r = make(std::move(out), rg(a), nullptr);
  if (rg(a)) {
    const int ridx = r.idx, ai = a.idx;
    nodes_[r.idx].back = [ridx, ai](Tape& t) {
      const Mat& go = t.nodes_[ridx].grad;
      Mat& ga = t.grad_buf(ai);
      for (int i = 0; i < ga.rows(); ++i)
        for (int j = 0; j < ga.cols(); ++j) ga(i, j) += go(i, j);
    };
  }
  return r;
}

Var Tape::col_as_square(Var a, int c, int n) {
  const Mat& av = val(a);
  if (av.rows() != n * n) throw std::logic_error("col_as_square: row count is not n^2");
  Mat out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = av(i * n + j, c);
  Var r = make(std::move(out), rg(a), nullptr);
  if (rg(a)) {
    const int ridx = r.idx, ai = a.idx;
    nodes_[r.idx].back = [ridx, ai, c, n](Tape& t) {
      const Mat& go = t.nodes_[ridx].grad;
      Mat& ga = t.grad_buf(ai);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) ga(i * n + j, c) += go(i, j);
    };
  }
  return r;
}

Var Tape::sum_all(Var a) {
  const Mat& av = val(a);
  Mat out(1, 1);
  double s = 0.0;
  for (size_t i = 0; i < av.size(); ++i) s += av[i];
  out(0, 0) = s;
  Var r = make(std::move(out), rg(a), nullptr);
  if (rg(a)) {
    const int ridx = r.idx, ai = a.idx;
    nodes_[r.idx].back = [ridx, ai](Tape& t) {
      const double g = t.nodes_[ridx].grad(0, 0);
      Mat& ga = t.grad_buf(ai);
      for (size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    };
  }
  return r;
}

Var Tape::elem(Var a, int row, int col) {
  Mat out(1, 1);
  out(0, 0) = val(a)(row, col);
  Var r = make(std::move(out), rg(a), nullptr);
  if (rg(a)) {
    const int ridx = r.idx, ai = a.idx;
    nodes_[r.idx].back = [ridx, ai, row, col](Tape& t) {
      t.grad_buf(ai)(row, col) += t.nodes_[ridx].grad(0, 0);
    };
  }
  return r;
}

void Tape::backward(Var loss) {
  if (val(loss).rows() != 1 || val(loss).cols() != 1)
    throw std::logic_error("backward: loss must be scalar");
  grad_buf(loss.idx)(0, 0) = 1.0;
  for (int i = loss.idx; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.back && !n.grad.empty()) n.back(*this);
  }
}

}  // namespace crystalite
