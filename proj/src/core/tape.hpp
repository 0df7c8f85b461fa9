#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "mat.hpp"

namespace intona {

// Reverse-mode tape. Building an op records a node and eagerly evaluates it;
// backward() fills adjoints for everything reachable from a scalar loss.
// Node indices are strictly increasing, so the recorded graph is acyclic by
// construction and replay() re-runs it in order.
template <typename T>
class Tape {
public:
  enum class Op {
    Leaf,
    MatMul,
    Add,
    AddBias,
    Sub,
    Mul,
    Scale,
    Tanh,
    Sigmoid,
    Relu,
    Exp,
    Clamp,
    SoftmaxRows,
    Conv1d,
    MaxPool1d,
    ConcatCols,
    ConcatRows,
    SliceRows,
    SliceCols,
    ReverseRows,
    RepeatRows,
    Sum,
    Mean,
    Square,
    CrossEntropy,
  };

  struct Node {
    Op op = Op::Leaf;
    int a = -1, b = -1, c = -1;
    int i0 = 0, i1 = 0, i2 = 0;
    T d0 = T(0), d1 = T(0);
    std::vector<int> idx;  // targets (cross-entropy) or argmax (max-pool)
    bool requires_grad = false;
    Mat<T> val;
    Mat<T> grad;
  };

  int leaf(Mat<T> v, bool requires_grad = true) {
    Node n;
    n.op = Op::Leaf;
    n.requires_grad = requires_grad;
    n.val = std::move(v);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int constant(Mat<T> v) { return leaf(std::move(v), false); }

  int matmul(int a, int b) {
    require(val(a).cols == val(b).rows, Status::ShapeMismatch,
            "matmul: inner dimensions differ");
    return push(Op::MatMul, a, b);
  }
  int add(int a, int b) {
    require(val(a).same_shape(val(b)), Status::ShapeMismatch,
            "add: shapes differ");
    return push(Op::Add, a, b);
  }
  int add_bias(int a, int bias) {
    require(val(bias).rows == 1 && val(bias).cols == val(a).cols,
            Status::ShapeMismatch, "add_bias: bias must be 1 x cols");
    return push(Op::AddBias, a, bias);
  }
  int sub(int a, int b) {
    require(val(a).same_shape(val(b)), Status::ShapeMismatch,
            "sub: shapes differ");
    return push(Op::Sub, a, b);
  }
  int mul(int a, int b) {
    require(val(a).same_shape(val(b)), Status::ShapeMismatch,
            "mul: shapes differ");
    return push(Op::Mul, a, b);
  }
  int scale(int a, T k) {
    Node n = unary(Op::Scale, a);
    n.d0 = k;
    return emplace(std::move(n));
  }
  int neg(int a) { return scale(a, T(-1)); }
  int tanh_(int a) { return push(Op::Tanh, a); }
  int sigmoid_(int a) { return push(Op::Sigmoid, a); }
  int relu_(int a) { return push(Op::Relu, a); }
  int exp_(int a) { return push(Op::Exp, a); }
  int clamp_(int a, T lo, T hi) {
    Node n = unary(Op::Clamp, a);
    n.d0 = lo;
    n.d1 = hi;
    return emplace(std::move(n));
  }
  int softmax_rows(int a) { return push(Op::SoftmaxRows, a); }

  // x: T x Cin, w: (k*Cin) x Cout, b: 1 x Cout; zero padding pl/pr rows.
  int conv1d(int x, int w, int b, int k, int pl, int pr) {
    const int cin = val(x).cols;
    require(val(w).rows == k * cin, Status::ShapeMismatch,
            "conv1d: weight rows must be k * in_channels");
    require(val(b).rows == 1 && val(b).cols == val(w).cols,
            Status::ShapeMismatch, "conv1d: bias must be 1 x out_channels");
    require(val(x).rows + pl + pr - k + 1 > 0, Status::ShapeMismatch,
            "conv1d: kernel longer than padded input");
    Node n;
    n.op = Op::Conv1d;
    n.a = x;
    n.b = w;
    n.c = b;
    n.i0 = k;
    n.i1 = pl;
    n.i2 = pr;
    return emplace(std::move(n));
  }

  // Stride-1 max pool over [t, t+width-1], window clipped at the end.
  int maxpool1d(int x, int width) {
    require(width >= 1, Status::InvalidArgument, "maxpool1d: width < 1");
    Node n = unary(Op::MaxPool1d, x);
    n.i0 = width;
    return emplace(std::move(n));
  }

  int concat_cols(int a, int b) {
    require(val(a).rows == val(b).rows, Status::ShapeMismatch,
            "concat_cols: row counts differ");
    return push(Op::ConcatCols, a, b);
  }
  int concat_rows(int a, int b) {
    require(val(a).cols == val(b).cols, Status::ShapeMismatch,
            "concat_rows: column counts differ");
    return push(Op::ConcatRows, a, b);
  }
  int slice_rows(int a, int r0, int r1) {
    require(0 <= r0 && r0 < r1 && r1 <= val(a).rows, Status::ShapeMismatch,
            "slice_rows: range out of bounds");
    Node n = unary(Op::SliceRows, a);
    n.i0 = r0;
    n.i1 = r1;
    return emplace(std::move(n));
  }
  int slice_cols(int a, int c0, int c1) {
    require(0 <= c0 && c0 < c1 && c1 <= val(a).cols, Status::ShapeMismatch,
            "slice_cols: range out of bounds");
    Node n = unary(Op::SliceCols, a);
    n.i0 = c0;
    n.i1 = c1;
    return emplace(std::move(n));
  }
  int reverse_rows(int a) { return push(Op::ReverseRows, a); }
  int repeat_rows(int a, int n_rows) {
    require(val(a).rows == 1, Status::ShapeMismatch,
            "repeat_rows: input must be a single row");
    Node n = unary(Op::RepeatRows, a);
    n.i0 = n_rows;
    return emplace(std::move(n));
  }
  int sum(int a) { return push(Op::Sum, a); }
  int mean(int a) { return push(Op::Mean, a); }
  int square(int a) { return push(Op::Square, a); }

  // Sum over rows of -log(max(p[r, target_r], 1e-12)).
  int cross_entropy(int probs, std::vector<int> targets) {
    require(static_cast<int>(targets.size()) == val(probs).rows,
            Status::ShapeMismatch,
            "cross_entropy: one target per probability row required");
    for (int t : targets)
      require(t >= 0 && t < val(probs).cols, Status::InvalidArgument,
              "cross_entropy: target index out of range");
    Node n = unary(Op::CrossEntropy, probs);
    n.idx = std::move(targets);
    return emplace(std::move(n));
  }

  const Mat<T>& val(int id) const { return nodes_[id].val; }
  const Mat<T>& grad(int id) const { return nodes_[id].grad; }
  size_t size() const { return nodes_.size(); }

  // Overwrite a leaf's value (used by replay-style evaluations).
  void set_leaf(int id, Mat<T> v) {
    require(nodes_[id].op == Op::Leaf, Status::InvalidArgument,
            "set_leaf: node is not a leaf");
    nodes_[id].val = std::move(v);
  }

  // Recompute every non-leaf value in recording order.
  void replay() {
    for (auto& n : nodes_)
      if (n.op != Op::Leaf) eval(n);
  }

  void backward(int loss) {
    require(val(loss).rows == 1 && val(loss).cols == 1, Status::InvalidArgument,
            "backward: loss must be scalar");
    for (auto& n : nodes_) {
      n.grad = Mat<T>(n.val.rows, n.val.cols);
    }
    nodes_[loss].grad.v[0] = T(1);
    for (int i = loss; i >= 0; --i) backprop(nodes_[i]);
  }

private:
  Node unary(Op op, int a) {
    Node n;
    n.op = op;
    n.a = a;
    return n;
  }

  int push(Op op, int a, int b = -1) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    return emplace(std::move(n));
  }

  int emplace(Node n) {
    n.requires_grad = (n.a >= 0 && nodes_[n.a].requires_grad) ||
                      (n.b >= 0 && nodes_[n.b].requires_grad) ||
                      (n.c >= 0 && nodes_[n.c].requires_grad);
    eval(n);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  bool rg(int id) const { return id >= 0 && nodes_[id].requires_grad; }

  void eval(Node& n) {
    const Mat<T>* A = n.a >= 0 ? &nodes_[n.a].val : nullptr;
    const Mat<T>* B = n.b >= 0 ? &nodes_[n.b].val : nullptr;
    const Mat<T>* C = n.c >= 0 ? &nodes_[n.c].val : nullptr;
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMul:
        gemm(*A, false, *B, false, n.val);
        break;
      case Op::Add: {
        n.val = *A;
        for (size_t i = 0; i < n.val.size(); ++i) n.val.v[i] += B->v[i];
        break;
      }
      case Op::AddBias: {
        n.val = *A;
        for (int r = 0; r < n.val.rows; ++r)
          for (int c = 0; c < n.val.cols; ++c) n.val.at(r, c) += B->at(0, c);
        break;
      }
      case Op::Sub: {
        n.val = *A;
        for (size_t i = 0; i < n.val.size(); ++i) n.val.v[i] -= B->v[i];
        break;
      }
      case Op::Mul: {
        n.val = *A;
        for (size_t i = 0; i < n.val.size(); ++i) n.val.v[i] *= B->v[i];
        break;
      }
      case Op::Scale: {
        n.val = *A;
        for (auto& x : n.val.v) x *= n.d0;
        break;
      }
      case Op::Tanh: {
        n.val = *A;
        for (auto& x : n.val.v) x = std::tanh(x);
        break;
      }
      case Op::Sigmoid: {
        n.val = *A;
        for (auto& x : n.val.v) x = T(1) / (T(1) + std::exp(-x));
        break;
      }
      case Op::Relu: {
        n.val = *A;
        for (auto& x : n.val.v) x = x > T(0) ? x : T(0);
        break;
      }
      case Op::Exp: {
        n.val = *A;
        for (auto& x : n.val.v) x = std::exp(x);
        break;
      }
      case Op::Clamp: {
        n.val = *A;
        for (auto& x : n.val.v) x = std::clamp(x, n.d0, n.d1);
        break;
      }
      case Op::SoftmaxRows: {
        n.val = *A;
        for (int r = 0; r < n.val.rows; ++r) {
          T* row = n.val.row_ptr(r);
          T mx = row[0];
          for (int c = 1; c < n.val.cols; ++c) mx = std::max(mx, row[c]);
          T acc = T(0);
          for (int c = 0; c < n.val.cols; ++c) {
            row[c] = std::exp(row[c] - mx);
            acc += row[c];
          }
          for (int c = 0; c < n.val.cols; ++c) row[c] /= acc;
        }
        break;
      }
      case Op::Conv1d: {
        const int k = n.i0, pl = n.i1;
        const int rows = A->rows, cin = A->cols, cout = B->cols;
        const int orows = rows + n.i1 + n.i2 - k + 1;
        n.val = Mat<T>(orows, cout);
        for (int t = 0; t < orows; ++t) {
          T* orow = n.val.row_ptr(t);
          for (int c = 0; c < cout; ++c) orow[c] = C->at(0, c);
          for (int dk = 0; dk < k; ++dk) {
            const int j = t + dk - pl;
            if (j < 0 || j >= rows) continue;
            const T* xrow = A->row_ptr(j);
            for (int ci = 0; ci < cin; ++ci) {
              const T xv = xrow[ci];
              if (xv == T(0)) continue;
              const T* wrow = B->row_ptr(dk * cin + ci);
              for (int c = 0; c < cout; ++c) orow[c] += xv * wrow[c];
            }
          }
        }
        break;
      }
      case Op::MaxPool1d: {
        const int width = n.i0;
        n.val = Mat<T>(A->rows, A->cols);
        n.idx.assign(n.val.size(), 0);
        for (int t = 0; t < A->rows; ++t)
          for (int c = 0; c < A->cols; ++c) {
            int best = t;
            T bv = A->at(t, c);
            for (int d = 1; d < width && t + d < A->rows; ++d)
              if (A->at(t + d, c) > bv) {
                bv = A->at(t + d, c);
                best = t + d;
              }
            n.val.at(t, c) = bv;
            n.idx[static_cast<size_t>(t) * A->cols + c] = best;
          }
        break;
      }
      case Op::ConcatCols: {
        n.val = Mat<T>(A->rows, A->cols + B->cols);
        for (int r = 0; r < A->rows; ++r) {
          std::copy(A->row_ptr(r), A->row_ptr(r) + A->cols, n.val.row_ptr(r));
          std::copy(B->row_ptr(r), B->row_ptr(r) + B->cols,
                    n.val.row_ptr(r) + A->cols);
        }
        break;
      }
      case Op::ConcatRows: {
        n.val = Mat<T>(A->rows + B->rows, A->cols);
        std::copy(A->v.begin(), A->v.end(), n.val.v.begin());
        std::copy(B->v.begin(), B->v.end(), n.val.v.begin() + A->v.size());
        break;
      }
      case Op::SliceRows: {
        n.val = Mat<T>(n.i1 - n.i0, A->cols);
        std::copy(A->row_ptr(n.i0), A->row_ptr(n.i0) + n.val.size(),
                  n.val.v.begin());
        break;
      }
      case Op::SliceCols: {
        n.val = Mat<T>(A->rows, n.i1 - n.i0);
        for (int r = 0; r < A->rows; ++r)
          std::copy(A->row_ptr(r) + n.i0, A->row_ptr(r) + n.i1,
                    n.val.row_ptr(r));
        break;
      }
      case Op::ReverseRows: {
        n.val = Mat<T>(A->rows, A->cols);
        for (int r = 0; r < A->rows; ++r)
          std::copy(A->row_ptr(r), A->row_ptr(r) + A->cols,
                    n.val.row_ptr(A->rows - 1 - r));
        break;
      }
      case Op::RepeatRows: {
        n.val = Mat<T>(n.i0, A->cols);
        for (int r = 0; r < n.i0; ++r)
          std::copy(A->v.begin(), A->v.end(), n.val.row_ptr(r));
        break;
      }
      case Op::Sum: {
        n.val = Mat<T>(1, 1);
        T acc = T(0);
        for (T x : A->v) acc += x;
        n.val.v[0] = acc;
        break;
      }
      case Op::Mean: {
        n.val = Mat<T>(1, 1);
        T acc = T(0);
        for (T x : A->v) acc += x;
        n.val.v[0] = acc / static_cast<T>(A->size());
        break;
      }
      case Op::Square: {
        n.val = *A;
        for (auto& x : n.val.v) x *= x;
        break;
      }
      case Op::CrossEntropy: {
        n.val = Mat<T>(1, 1);
        T acc = T(0);
        for (int r = 0; r < A->rows; ++r) {
          const T p = std::max(A->at(r, n.idx[r]), T(1e-12));
          acc -= std::log(p);
        }
        n.val.v[0] = acc;
        break;
      }
    }
  }

  void backprop(Node& n) {
    if (n.op == Op::Leaf || !n.requires_grad) return;
    Mat<T>& d = n.grad;
    Mat<T>* dA = n.a >= 0 ? &nodes_[n.a].grad : nullptr;
    Mat<T>* dB = n.b >= 0 ? &nodes_[n.b].grad : nullptr;
    Mat<T>* dC = n.c >= 0 ? &nodes_[n.c].grad : nullptr;
    const Mat<T>* A = n.a >= 0 ? &nodes_[n.a].val : nullptr;
    const Mat<T>* B = n.b >= 0 ? &nodes_[n.b].val : nullptr;
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMul:
        if (rg(n.a)) gemm(d, false, *B, true, *dA, true);
        if (rg(n.b)) gemm(*A, true, d, false, *dB, true);
        break;
      case Op::Add:
        for (size_t i = 0; i < d.size(); ++i) {
          if (rg(n.a)) dA->v[i] += d.v[i];
          if (rg(n.b)) dB->v[i] += d.v[i];
        }
        break;
      case Op::AddBias:
        for (int r = 0; r < d.rows; ++r)
          for (int c = 0; c < d.cols; ++c) {
            if (rg(n.a)) dA->at(r, c) += d.at(r, c);
            if (rg(n.b)) dB->at(0, c) += d.at(r, c);
          }
        break;
      case Op::Sub:
        for (size_t i = 0; i < d.size(); ++i) {
          if (rg(n.a)) dA->v[i] += d.v[i];
          if (rg(n.b)) dB->v[i] -= d.v[i];
        }
        break;
      case Op::Mul:
        for (size_t i = 0; i < d.size(); ++i) {
          if (rg(n.a)) dA->v[i] += d.v[i] * B->v[i];
          if (rg(n.b)) dB->v[i] += d.v[i] * A->v[i];
        }
        break;
      case Op::Scale:
        for (size_t i = 0; i < d.size(); ++i) dA->v[i] += n.d0 * d.v[i];
        break;
      case Op::Tanh:
        for (size_t i = 0; i < d.size(); ++i)
          dA->v[i] += d.v[i] * (T(1) - n.val.v[i] * n.val.v[i]);
        break;
      case Op::Sigmoid:
        for (size_t i = 0; i < d.size(); ++i)
          dA->v[i] += d.v[i] * n.val.v[i] * (T(1) - n.val.v[i]);
        break;
      case Op::Relu:
        for (size_t i = 0; i < d.size(); ++i)
          if (A->v[i] > T(0)) dA->v[i] += d.v[i];
        break;
      case Op::Exp:
        for (size_t i = 0; i < d.size(); ++i) dA->v[i] += d.v[i] * n.val.v[i];
        break;
      case Op::Clamp:
        for (size_t i = 0; i < d.size(); ++i)
          if (A->v[i] > n.d0 && A->v[i] < n.d1) dA->v[i] += d.v[i];
        break;
      case Op::SoftmaxRows:
        for (int r = 0; r < d.rows; ++r) {
          T dot = T(0);
          for (int c = 0; c < d.cols; ++c) dot += d.at(r, c) * n.val.at(r, c);
          for (int c = 0; c < d.cols; ++c)
            dA->at(r, c) += n.val.at(r, c) * (d.at(r, c) - dot);
        }
        break;
      case Op::Conv1d: {
        const int k = n.i0, pl = n.i1;
        const int rows = A->rows, cin = A->cols, cout = B->cols;
        const bool need_dx = rg(n.a), need_dw = rg(n.b);
        for (int t = 0; t < d.rows; ++t) {
          const T* drow = d.row_ptr(t);
          if (rg(n.c))
            for (int c = 0; c < cout; ++c) dC->at(0, c) += drow[c];
          for (int dk = 0; dk < k; ++dk) {
            const int j = t + dk - pl;
            if (j < 0 || j >= rows) continue;
            const T* xrow = A->row_ptr(j);
            T* dxrow = dA->row_ptr(j);
            for (int ci = 0; ci < cin; ++ci) {
              const T* wrow = B->row_ptr(dk * cin + ci);
              T* dwrow = dB->row_ptr(dk * cin + ci);
              T acc = T(0);
              for (int c = 0; c < cout; ++c) {
                if (need_dx) acc += drow[c] * wrow[c];
                if (need_dw) dwrow[c] += drow[c] * xrow[ci];
              }
              if (need_dx) dxrow[ci] += acc;
            }
          }
        }
        break;
      }
      case Op::MaxPool1d:
        for (int t = 0; t < d.rows; ++t)
          for (int c = 0; c < d.cols; ++c)
            dA->at(n.idx[static_cast<size_t>(t) * d.cols + c], c) += d.at(t, c);
        break;
      case Op::ConcatCols:
        for (int r = 0; r < d.rows; ++r)
          for (int c = 0; c < d.cols; ++c) {
            if (c < A->cols)
              dA->at(r, c) += d.at(r, c);
            else
              dB->at(r, c - A->cols) += d.at(r, c);
          }
        break;
      case Op::ConcatRows:
        for (size_t i = 0; i < A->v.size(); ++i) dA->v[i] += d.v[i];
        for (size_t i = 0; i < B->v.size(); ++i)
          dB->v[i] += d.v[i + A->v.size()];
        break;
      case Op::SliceRows:
        for (int r = 0; r < d.rows; ++r)
          for (int c = 0; c < d.cols; ++c) dA->at(n.i0 + r, c) += d.at(r, c);
        break;
      case Op::SliceCols:
        for (int r = 0; r < d.rows; ++r)
          for (int c = 0; c < d.cols; ++c) dA->at(r, n.i0 + c) += d.at(r, c);
        break;
      case Op::ReverseRows:
        for (int r = 0; r < d.rows; ++r)
          for (int c = 0; c < d.cols; ++c)
            dA->at(d.rows - 1 - r, c) += d.at(r, c);
        break;
      case Op::RepeatRows:
        for (int r = 0; r < d.rows; ++r)
          for (int c = 0; c < d.cols; ++c) dA->at(0, c) += d.at(r, c);
        break;
      case Op::Sum:
        for (auto& g : dA->v) g += d.v[0];
        break;
      case Op::Mean: {
        const T s = d.v[0] / static_cast<T>(dA->size());
        for (auto& g : dA->v) g += s;
        break;
      }
      case Op::Square:
        for (size_t i = 0; i < d.size(); ++i)
          dA->v[i] += d.v[i] * T(2) * A->v[i];
        break;
      case Op::CrossEntropy:
        for (int r = 0; r < A->rows; ++r) {
          const T p = A->at(r, n.idx[r]);
          if (p > T(1e-12)) dA->at(r, n.idx[r]) -= d.v[0] / p;
        }
        break;
    }
  }

  std::vector<Node> nodes_;
};

template <typename T>
using ParamMap = std::map<std::string, Mat<T>>;

}  // namespace intona
