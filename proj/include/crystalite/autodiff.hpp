#pragma once

#include <functional>
#include <vector>

#include "crystalite/mat.hpp"

namespace crystalite {

// Reverse-mode tape over Mat values. A Tape lives for one forward/backward
// pass; handles are indices into it. Only the operations the denoiser needs
// are provided. Gradients flow to parameter leaves; plain inputs are
// constants.
//
// Reductions that cross atom tokens in the forward pass (softmax normalizer,
// attention value mix) use order-independent summation so the network output
// is exactly permutation-equivariant.
struct Var {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

class Tape {
 public:
  Var input(Mat value);
  Var param(Mat value);
  Var scalar_input(double v);

  const Mat& val(Var v) const { return nodes_[v.idx].val; }
  const Mat& grad(Var v) const;  // valid after backward()

  Var matmul(Var a, Var b);
  // Matmul whose inner sums are order-independent; used for the attention
  // value mix where the summation index runs over atoms.
  Var matmul_stable(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, double s);
  Var add_scalar(Var a, double c);
  // s * a + b, with s and b constants.
  Var affine(Var a, double s, Mat b);
  // wrap(a - t) with constant target t; derivative is identity a.e.
  Var wrap_minus(Var a, Mat t);

  Var add_rowvec(Var a, Var r);  // r broadcast over rows of a
  Var mul_rowvec(Var a, Var r);
  Var scale_by(Var a, Var s);               // s is 1x1
  Var const_times_scalar(Mat c, Var s);     // s is 1x1

  Var silu(Var a);
  Var sigmoid(Var a);
  Var softplus(Var a);
  Var layer_norm_rows(Var a);               // no learned affine
  Var softmax_rows(Var a);                  // max-shifted, stable denominator

  Var slice_rows(Var a, int r0, int r1);
  Var slice_cols(Var a, int c0, int c1);
  Var concat_rows(Var a, Var b);
  Var concat_cols(const std::vector<Var>& parts);
  // Zero row and column appended (lattice-token padding of pair biases).
  Var pad_bottom_right(Var a);
  // Column c of a PxH matrix reshaped to an n x n square (row-major pairs).
  Var col_as_square(Var a, int c, int n);

  Var sum_all(Var a);                       // 1x1
  Var elem(Var a, int r, int c);            // 1x1 view

  void backward(Var loss_scalar);

  size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Mat val;
    Mat grad;
    bool requires_grad = false;
    std::function<void(Tape&)> back;
  };

  Var make(Mat val, bool rg, std::function<void(Tape&)> back);
  Mat& grad_buf(int idx);
  bool rg(Var v) const { return nodes_[v.idx].requires_grad; }

  std::vector<Node> nodes_;
};

}  // namespace crystalite
