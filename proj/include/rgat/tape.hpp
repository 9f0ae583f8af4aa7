#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rgat/errors.hpp"
#include "rgat/matrix.hpp"

namespace rgat {

template <typename S>
class Tape;

// Handle to a node on a tape. Valid as long as the tape lives.
template <typename S>
struct Var {
  Tape<S>* tape = nullptr;
  int id = -1;
};

// Reverse-mode tape. Nodes are appended in evaluation order, which is a
// topological order by construction, so backward() is a single reverse sweep.
// One tape per forward pass; a tape is single-threaded, but independent tapes
// may run on different threads.
template <typename S>
class Tape {
 public:
  using BackFn = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<S> leaf(Mat<S> v) { return push(std::move(v), nullptr); }

  Var<S> node(Mat<S> v, BackFn back) { return push(std::move(v), std::move(back)); }

  const Mat<S>& val(Var<S> x) const { return nodes_[x.id].value; }
  const Mat<S>& grad(Var<S> x) const { return nodes_[x.id].grad; }
  Mat<S>& grad_mut(Var<S> x) { return nodes_[x.id].grad; }
  const Mat<S>& val_at(int id) const { return nodes_[id].value; }
  const Mat<S>& grad_at(int id) const { return nodes_[id].grad; }

  void zero_grad() {
    for (auto& n : nodes_) n.grad.fill(S(0));
  }

  // Seeds d(root)/d(root) = 1 and accumulates gradients into every node.
  // root must be a scalar (1x1).
  void backward(Var<S> root) {
    if (val(root).rows != 1 || val(root).cols != 1)
      throw dimension_error("backward root must be 1x1, got " + val(root).shape_str());
    zero_grad();
    nodes_[root.id].grad(0, 0) = S(1);
    for (int i = root.id; i >= 0; --i)
      if (nodes_[i].back) nodes_[i].back(*this, i);
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct NodeRec {
    Mat<S> value;
    Mat<S> grad;
    BackFn back;
  };

  Var<S> push(Mat<S> v, BackFn back) {
    NodeRec rec;
    rec.grad = Mat<S>(v.rows, v.cols);
    rec.value = std::move(v);
    rec.back = std::move(back);
    nodes_.push_back(std::move(rec));
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<NodeRec> nodes_;
};

// ---- ops ----

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
  Tape<S>& t = *a.tape;
  const Mat<S>& A = t.val(a);
  const Mat<S>& B = t.val(b);
  if (A.cols != B.rows)
    throw dimension_error("matmul: inner dimensions differ, " + A.shape_str() + " x " +
                          B.shape_str());
  Mat<S> C(A.rows, B.cols);
  detail::mm_nn_acc(A, B, C);
  return t.node(std::move(C), [a, b](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_at(self);
    detail::mm_nt_acc(g, tp.val(b), tp.grad_mut(a));  // dA = g B^T
    detail::mm_tn_acc(tp.val(a), g, tp.grad_mut(b));  // dB = A^T g
  });
}

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
  Tape<S>& t = *a.tape;
  const Mat<S>& A = t.val(a);
  const Mat<S>& B = t.val(b);
  if (!A.same_shape(B))
    throw dimension_error("add: shapes differ, " + A.shape_str() + " vs " + B.shape_str());
  Mat<S> C = A;
  for (std::size_t i = 0; i < C.a.size(); ++i) C.a[i] += B.a[i];
  return t.node(std::move(C), [a, b](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_at(self);
    Mat<S>& ga = tp.grad_mut(a);
    Mat<S>& gb = tp.grad_mut(b);
    for (std::size_t i = 0; i < g.a.size(); ++i) {
      ga.a[i] += g.a[i];
      gb.a[i] += g.a[i];
    }
  });
}

template <typename S>
Var<S> sub(Var<S> a, Var<S> b) {
  Tape<S>& t = *a.tape;
  const Mat<S>& A = t.val(a);
  const Mat<S>& B = t.val(b);
  if (!A.same_shape(B))
    throw dimension_error("sub: shapes differ, " + A.shape_str() + " vs " + B.shape_str());
  Mat<S> C = A;
  for (std::size_t i = 0; i < C.a.size(); ++i) C.a[i] -= B.a[i];
  return t.node(std::move(C), [a, b](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_at(self);
    Mat<S>& ga = tp.grad_mut(a);
    Mat<S>& gb = tp.grad_mut(b);
    for (std::size_t i = 0; i < g.a.size(); ++i) {
      ga.a[i] += g.a[i];
      gb.a[i] -= g.a[i];
    }
  });
}

// mat (r x c) plus a column (r x 1) broadcast across columns
template <typename S>
Var<S> add_bias(Var<S> m, Var<S> bias) {
  Tape<S>& t = *m.tape;
  const Mat<S>& M = t.val(m);
  const Mat<S>& B = t.val(bias);
  if (B.cols != 1 || B.rows != M.rows)
    throw dimension_error("add_bias: bias " + B.shape_str() + " does not broadcast over " +
                          M.shape_str());
  Mat<S> C = M;
  for (int r = 0; r < C.rows; ++r)
    for (int c = 0; c < C.cols; ++c) C(r, c) += B(r, 0);
  return t.node(std::move(C), [m, bias](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_at(self);
    Mat<S>& gm = tp.grad_mut(m);
    Mat<S>& gb = tp.grad_mut(bias);
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < g.cols; ++c) {
        gm(r, c) += g(r, c);
        gb(r, 0) += g(r, c);
      }
  });
}

template <typename S>
Var<S> hadamard(Var<S> a, Var<S> b) {
  Tape<S>& t = *a.tape;
  const Mat<S>& A = t.val(a);
  const Mat<S>& B = t.val(b);
  if (!A.same_shape(B))
    throw dimension_error("hadamard: shapes differ, " + A.shape_str() + " vs " + B.shape_str());
  Mat<S> C = A;
  for (std::size_t i = 0; i < C.a.size(); ++i) C.a[i] *= B.a[i];
  return t.node(std::move(C), [a, b](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_at(self);
    const Mat<S>& A2 = tp.val(a);
    const Mat<S>& B2 = tp.val(b);
    Mat<S>& ga = tp.grad_mut(a);
    Mat<S>& gb = tp.grad_mut(b);
    for (std::size_t i = 0; i < g.a.size(); ++i) {
      ga.a[i] += g.a[i] * B2.a[i];
      gb.a[i] += g.a[i] * A2.a[i];
    }
  });
}

template <typename S>
Var<S> scale(Var<S> a, S c) {
  Tape<S>& t = *a.tape;
  Mat<S> C = t.val(a);
  for (S& v : C.a) v *= c;
  return t.node(std::move(C), [a, c](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_at(self);
    Mat<S>& ga = tp.grad_mut(a);
    for (std::size_t i = 0; i < g.a.size(); ++i) ga.a[i] += c * g.a[i];
  });
}

// matrix times a 1x1 tape scalar
template <typename S>
Var<S> scale_by(Var<S> a, Var<S> s) {
  Tape<S>& t = *a.tape;
  const Mat<S>& Sv = t.val(s);
  if (Sv.rows != 1 || Sv.cols != 1)
    throw dimension_error("scale_by: scalar operand must be 1x1, got " + Sv.shape_str());
  Mat<S> C = t.val(a);
  const S sv = Sv(0, 0);
  for (S& v : C.a) v *= sv;
  return t.node(std::move(C), [a, s](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_at(self);
    const Mat<S>& A2 = tp.val(a);
    const S sv2 = tp.val(s)(0, 0);
    Mat<S>& ga = tp.grad_mut(a);
    S acc = 0;
    for (std::size_t i = 0; i < g.a.size(); ++i) {
      ga.a[i] += sv2 * g.a[i];
      acc += g.a[i] * A2.a[i];
    }
    tp.grad_mut(s)(0, 0) += acc;
  });
}

template <typename S>
Var<S> tanh(Var<S> a) {
  Tape<S>& t = *a.tape;
  Mat<S> C = t.val(a);
  for (S& v : C.a) v = std::tanh(v);
  return t.node(std::move(C), [a](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_at(self);
    const Mat<S>& y = tp.val_at(self);
    Mat<S>& ga = tp.grad_mut(a);
    for (std::size_t i = 0; i < g.a.size(); ++i) ga.a[i] += g.a[i] * (S(1) - y.a[i] * y.a[i]);
  });
}

template <typename S>
Var<S> relu(Var<S> a) {
  Tape<S>& t = *a.tape;
  Mat<S> C = t.val(a);
  for (S& v : C.a) v = v > S(0) ? v : S(0);
  return t.node(std::move(C), [a](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_at(self);
    const Mat<S>& x = tp.val(a);
    Mat<S>& ga = tp.grad_mut(a);
    for (std::size_t i = 0; i < g.a.size(); ++i)
      if (x.a[i] > S(0)) ga.a[i] += g.a[i];
  });
}

// axis 0: normalize each column over its rows; axis 1: each row over its columns.
// Max-subtracted for stability.
template <typename S>
Var<S> softmax(Var<S> a, int axis = 0) {
  if (axis != 0 && axis != 1) throw dimension_error("softmax: axis must be 0 or 1");
  Tape<S>& t = *a.tape;
  const Mat<S>& A = t.val(a);
  Mat<S> C(A.rows, A.cols);
  const int slices = axis == 0 ? A.cols : A.rows;
  const int len = axis == 0 ? A.rows : A.cols;
  auto at = [&](auto& m, int slice, int k) -> decltype(auto) {
    return axis == 0 ? m(k, slice) : m(slice, k);
  };
  for (int s = 0; s < slices; ++s) {
    S mx = at(A, s, 0);
    for (int k = 1; k < len; ++k) mx = std::max(mx, at(A, s, k));
    S sum = 0;
    for (int k = 0; k < len; ++k) {
      const S e = std::exp(at(A, s, k) - mx);
      at(C, s, k) = e;
      sum += e;
    }
    for (int k = 0; k < len; ++k) at(C, s, k) /= sum;
  }
  return t.node(std::move(C), [a, axis](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_at(self);
    const Mat<S>& y = tp.val_at(self);
    Mat<S>& ga = tp.grad_mut(a);
    const int slices = axis == 0 ? y.cols : y.rows;
    const int len = axis == 0 ? y.rows : y.cols;
    auto at = [&](const auto& m, int slice, int k) -> decltype(auto) {
      return axis == 0 ? m(k, slice) : m(slice, k);
    };
    auto atm = [&](auto& m, int slice, int k) -> decltype(auto) {
      return axis == 0 ? m(k, slice) : m(slice, k);
    };
    for (int s = 0; s < slices; ++s) {
      S dot = 0;
      for (int k = 0; k < len; ++k) dot += at(g, s, k) * at(y, s, k);
      for (int k = 0; k < len; ++k)
        atm(ga, s, k) += at(y, s, k) * (at(g, s, k) - dot);
    }
  });
}

// Stack parts vertically. Gradient splits back along the same row ranges.
template <typename S>
Var<S> concat_rows(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw dimension_error("concat_rows: no operands");
  Tape<S>& t = *parts[0].tape;
  const int cols = t.val(parts[0]).cols;
  int rows = 0;
  for (const auto& p : parts) {
    if (t.val(p).cols != cols)
      throw dimension_error("concat_rows: column counts differ");
    rows += t.val(p).rows;
  }
  Mat<S> C(rows, cols);
  int r0 = 0;
  for (const auto& p : parts) {
    const Mat<S>& P = t.val(p);
    for (int r = 0; r < P.rows; ++r)
      for (int c = 0; c < cols; ++c) C(r0 + r, c) = P(r, c);
    r0 += P.rows;
  }
  return t.node(std::move(C), [parts](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_at(self);
    int r0 = 0;
    for (const auto& p : parts) {
      Mat<S>& gp = tp.grad_mut(p);
      for (int r = 0; r < gp.rows; ++r)
        for (int c = 0; c < gp.cols; ++c) gp(r, c) += g(r0 + r, c);
      r0 += gp.rows;
    }
  });
}

// Stack parts side by side (columns are instances of a batch).
template <typename S>
Var<S> concat_cols(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw dimension_error("concat_cols: no operands");
  Tape<S>& t = *parts[0].tape;
  const int rows = t.val(parts[0]).rows;
  int cols = 0;
  for (const auto& p : parts) {
    if (t.val(p).rows != rows)
      throw dimension_error("concat_cols: row counts differ");
    cols += t.val(p).cols;
  }
  Mat<S> C(rows, cols);
  int c0 = 0;
  for (const auto& p : parts) {
    const Mat<S>& P = t.val(p);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < P.cols; ++c) C(r, c0 + c) = P(r, c);
    c0 += P.cols;
  }
  return t.node(std::move(C), [parts](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_at(self);
    int c0 = 0;
    for (const auto& p : parts) {
      Mat<S>& gp = tp.grad_mut(p);
      for (int r = 0; r < gp.rows; ++r)
        for (int c = 0; c < gp.cols; ++c) gp(r, c) += g(r, c0 + c);
      c0 += gp.cols;
    }
  });
}

template <typename S>
Var<S> add_n(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw dimension_error("add_n: no operands");
  Tape<S>& t = *parts[0].tape;
  Mat<S> C = t.val(parts[0]);
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const Mat<S>& P = t.val(parts[i]);
    if (!P.same_shape(C)) throw dimension_error("add_n: shapes differ");
    for (std::size_t k = 0; k < C.a.size(); ++k) C.a[k] += P.a[k];
  }
  return t.node(std::move(C), [parts](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_at(self);
    for (const auto& p : parts) {
      Mat<S>& gp = tp.grad_mut(p);
      for (std::size_t k = 0; k < g.a.size(); ++k) gp.a[k] += g.a[k];
    }
  });
}

// Elementwise mean of same-shaped operands.
template <typename S>
Var<S> mean_of(const std::vector<Var<S>>& parts) {
  return scale(add_n(parts), S(1) / static_cast<S>(parts.size()));
}

// Elementwise max over operands; gradient routes to the first argmax.
template <typename S>
Var<S> max_n(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw dimension_error("max_n: no operands");
  Tape<S>& t = *parts[0].tape;
  Mat<S> C = t.val(parts[0]);
  std::vector<int> winner(C.a.size(), 0);
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const Mat<S>& P = t.val(parts[i]);
    if (!P.same_shape(C)) throw dimension_error("max_n: shapes differ");
    for (std::size_t k = 0; k < C.a.size(); ++k)
      if (P.a[k] > C.a[k]) {
        C.a[k] = P.a[k];
        winner[k] = static_cast<int>(i);
      }
  }
  return t.node(std::move(C), [parts, winner](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_at(self);
    for (std::size_t k = 0; k < g.a.size(); ++k)
      tp.grad_mut(parts[winner[k]]).a[k] += g.a[k];
  });
}

template <typename S>
Var<S> sum_reduce(Var<S> a) {
  Tape<S>& t = *a.tape;
  S total = 0;
  for (S v : t.val(a).a) total += v;
  Mat<S> C(1, 1);
  C(0, 0) = total;
  return t.node(std::move(C), [a](Tape<S>& tp, int self) {
    const S g = tp.grad_at(self)(0, 0);
    Mat<S>& ga = tp.grad_mut(a);
    for (S& v : ga.a) v += g;
  });
}

template <typename S>
Var<S> slice_rows(Var<S> a, int r0, int r1) {
  Tape<S>& t = *a.tape;
  const Mat<S>& A = t.val(a);
  if (r0 < 0 || r1 > A.rows || r0 >= r1)
    throw dimension_error("slice_rows: range [" + std::to_string(r0) + ", " +
                          std::to_string(r1) + ") invalid for " + A.shape_str());
  Mat<S> C(r1 - r0, A.cols);
  for (int r = r0; r < r1; ++r)
    for (int c = 0; c < A.cols; ++c) C(r - r0, c) = A(r, c);
  return t.node(std::move(C), [a, r0](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_at(self);
    Mat<S>& ga = tp.grad_mut(a);
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < g.cols; ++c) ga(r0 + r, c) += g(r, c);
  });
}

// Inner product of two column vectors, as a 1x1 node.
template <typename S>
Var<S> dot(Var<S> a, Var<S> b) {
  Tape<S>& t = *a.tape;
  const Mat<S>& A = t.val(a);
  const Mat<S>& B = t.val(b);
  if (A.cols != 1 || B.cols != 1 || A.rows != B.rows)
    throw dimension_error("dot: needs equal-length column vectors, got " + A.shape_str() +
                          " and " + B.shape_str());
  S s = 0;
  for (int r = 0; r < A.rows; ++r) s += A(r, 0) * B(r, 0);
  Mat<S> C(1, 1);
  C(0, 0) = s;
  return t.node(std::move(C), [a, b](Tape<S>& tp, int self) {
    const S g = tp.grad_at(self)(0, 0);
    const Mat<S>& A2 = tp.val(a);
    const Mat<S>& B2 = tp.val(b);
    Mat<S>& ga = tp.grad_mut(a);
    Mat<S>& gb = tp.grad_mut(b);
    for (int r = 0; r < A2.rows; ++r) {
      ga(r, 0) += g * B2(r, 0);
      gb(r, 0) += g * A2(r, 0);
    }
  });
}

// Mean cross-entropy over columns of a logit matrix (K x B), one label per
// column. Log-sum-exp is max-subtracted; backward is softmax minus one-hot.
template <typename S>
Var<S> cross_entropy_cols(Var<S> logits, const std::vector<int>& labels) {
  Tape<S>& t = *logits.tape;
  const Mat<S>& Z = t.val(logits);
  if (static_cast<int>(labels.size()) != Z.cols)
    throw dimension_error("cross_entropy_cols: " + std::to_string(labels.size()) +
                          " labels for " + std::to_string(Z.cols) + " columns");
  for (int y : labels)
    if (y < 0 || y >= Z.rows) throw usage_error("cross_entropy_cols: label out of range");
  const int B = Z.cols;
  S total = 0;
  Mat<S> probs(Z.rows, Z.cols);
  for (int b = 0; b < B; ++b) {
    S mx = Z(0, b);
    for (int k = 1; k < Z.rows; ++k) mx = std::max(mx, Z(k, b));
    S sum = 0;
    for (int k = 0; k < Z.rows; ++k) {
      const S e = std::exp(Z(k, b) - mx);
      probs(k, b) = e;
      sum += e;
    }
    for (int k = 0; k < Z.rows; ++k) probs(k, b) /= sum;
    total += std::log(sum) + mx - Z(labels[b], b);
  }
  Mat<S> C(1, 1);
  C(0, 0) = total / static_cast<S>(B);
  return t.node(std::move(C), [logits, labels, probs](Tape<S>& tp, int self) {
    const S g = tp.grad_at(self)(0, 0);
    Mat<S>& gz = tp.grad_mut(logits);
    const S inv = S(1) / static_cast<S>(probs.cols);
    for (int b = 0; b < probs.cols; ++b)
      for (int k = 0; k < probs.rows; ++k) {
        S d = probs(k, b);
        if (k == labels[b]) d -= S(1);
        gz(k, b) += g * inv * d;
      }
  });
}

// ---- finite-difference gradient checking ----

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  int row = -1, col = -1;    // worst entry
  double analytic = 0.0, numeric = 0.0;
};

struct GradCheckReport {
  double tol = 0.0;
  std::vector<GradCheckEntry> entries;

  bool passed() const {
    for (const auto& e : entries)
      if (!(e.max_rel_err <= tol)) return false;
    return true;
  }

  std::string summary() const {
    std::string s;
    for (const auto& e : entries) {
      char line[256];
      std::snprintf(line, sizeof line, "%-28s max_rel_err=%.3e at (%d,%d) analytic=%+.6e numeric=%+.6e %s\n",
                    e.name.c_str(), e.max_rel_err, e.row, e.col, e.analytic, e.numeric,
                    e.max_rel_err <= tol ? "ok" : "FAIL");
      s += line;
    }
    return s;
  }
};

// Central finite differences against analytic gradients, in 64-bit.
// value_fn re-evaluates the scalar from current parameter storage; grad_fn
// returns analytic gradients in the same order as params. Parameters are
// perturbed in place and restored.
inline GradCheckReport grad_check(
    const std::function<double()>& value_fn,
    const std::function<std::vector<Mat<double>>()>& grad_fn,
    const std::vector<std::pair<std::string, Mat<double>*>>& params,
    double h = 1e-5, double tol = 1e-4) {
  GradCheckReport report;
  report.tol = tol;
  const std::vector<Mat<double>> analytic = grad_fn();
  if (analytic.size() != params.size())
    throw usage_error("grad_check: gradient count does not match parameter count");
  for (std::size_t p = 0; p < params.size(); ++p) {
    GradCheckEntry entry;
    entry.name = params[p].first;
    Mat<double>& theta = *params[p].second;
    if (!analytic[p].same_shape(theta))
      throw dimension_error("grad_check: gradient shape mismatch for " + entry.name);
    for (int r = 0; r < theta.rows; ++r)
      for (int c = 0; c < theta.cols; ++c) {
        const double keep = theta(r, c);
        theta(r, c) = keep + h;
        const double fp = value_fn();
        theta(r, c) = keep - h;
        const double fm = value_fn();
        theta(r, c) = keep;
        if (!std::isfinite(fp) || !std::isfinite(fm))
          throw evaluation_error("grad_check: non-finite objective while perturbing " +
                                 entry.name);
        const double numeric = (fp - fm) / (2.0 * h);
        const double a = analytic[p](r, c);
        const double rel = std::abs(a - numeric) /
                           std::max(std::abs(a) + std::abs(numeric), 1e-6);
        if (rel > entry.max_rel_err) {
          entry.max_rel_err = rel;
          entry.row = r;
          entry.col = c;
          entry.analytic = a;
          entry.numeric = numeric;
        }
      }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace rgat
