#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "rgat/errors.hpp"
#include "rgat/matrix.hpp"
#include "rgat/rng.hpp"
#include "rgat/tape.hpp"

namespace rgat {

template <typename S>
struct AdamState {
  S beta1 = S(0.9);
  S beta2 = S(0.999);
  S eps = S(1e-8);
  long step_count = 0;
  std::vector<Mat<S>> m;  // first moments, parallel to the parameter list
  std::vector<Mat<S>> v;  // second moments
};

template <typename S>
AdamState<S> make_adam_state(const std::vector<Mat<S>*>& params, S beta1 = S(0.9),
                             S beta2 = S(0.999), S eps = S(1e-8)) {
  AdamState<S> st;
  st.beta1 = beta1;
  st.beta2 = beta2;
  st.eps = eps;
  for (const Mat<S>* p : params) {
    st.m.emplace_back(p->rows, p->cols);
    st.v.emplace_back(p->rows, p->cols);
  }
  return st;
}

// One Adam update with bias correction. Aborts on non-finite gradients,
// naming the offending tensor.
template <typename S>
void adam_step(const std::vector<Mat<S>*>& params, const std::vector<Mat<S>>& grads,
               const std::vector<std::string>& names, AdamState<S>& st, S lr) {
  if (params.size() != grads.size() || st.m.size() != params.size())
    throw usage_error("adam_step: parameter, gradient and state counts differ");
  if (!(lr > S(0))) throw config_error("adam_step: learning rate must be positive");
  st.step_count += 1;
  const S bc1 = S(1) - static_cast<S>(std::pow(static_cast<double>(st.beta1), st.step_count));
  const S bc2 = S(1) - static_cast<S>(std::pow(static_cast<double>(st.beta2), st.step_count));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Mat<S>& theta = *params[p];
    const Mat<S>& g = grads[p];
    if (!g.same_shape(theta))
      throw dimension_error("adam_step: gradient shape " + g.shape_str() +
                            " does not match parameter " + theta.shape_str());
    if (!all_finite(g))
      throw training_error("adam_step: non-finite gradient in tensor '" +
                           (p < names.size() ? names[p] : std::to_string(p)) + "'");
    Mat<S>& m = st.m[p];
    Mat<S>& v = st.v[p];
    for (std::size_t i = 0; i < theta.a.size(); ++i) {
      m.a[i] = st.beta1 * m.a[i] + (S(1) - st.beta1) * g.a[i];
      v.a[i] = st.beta2 * v.a[i] + (S(1) - st.beta2) * g.a[i] * g.a[i];
      const S mhat = m.a[i] / bc1;
      const S vhat = v.a[i] / bc2;
      theta.a[i] -= lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

// Linear ramp from 0 to peak over warmup_steps, then linear decay to 0 at
// total_steps. Steps are 1-based; lr(warmup_steps) == peak.
struct WarmupSchedule {
  double peak_lr = 1e-3;
  long warmup_steps = 1;
  long total_steps = 1;

  WarmupSchedule() = default;
  WarmupSchedule(double peak, long warmup, long total)
      : peak_lr(peak), warmup_steps(warmup), total_steps(total) {
    if (!(peak_lr > 0)) throw config_error("warmup schedule: peak_lr must be positive");
    if (warmup_steps < 1 || warmup_steps > total_steps)
      throw config_error("warmup schedule: need 1 <= warmup_steps <= total_steps");
  }

  double lr_at(long step) const {
    if (step < 1 || step > total_steps)
      throw usage_error("lr_at: step " + std::to_string(step) + " outside [1, " +
                        std::to_string(total_steps) + "]");
    if (step <= warmup_steps)
      return peak_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
    if (total_steps == warmup_steps) return peak_lr;
    return peak_lr * static_cast<double>(total_steps - step) /
           static_cast<double>(total_steps - warmup_steps);
  }
};

inline double lr_at(long step, const WarmupSchedule& schedule) { return schedule.lr_at(step); }

// L2 penalty λ·Σ‖W‖² restricted to parameter groups carrying one of the tags.
struct RegularizerSpec {
  double lambda = 1e-4;
  std::set<std::string> tags = {"rgat"};

  RegularizerSpec() = default;
  RegularizerSpec(double l, std::set<std::string> t) : lambda(l), tags(std::move(t)) {
    if (lambda < 0) throw config_error("regularizer: lambda must be >= 0");
  }
};

template <typename S>
Var<S> l2_penalty(Tape<S>& t, const std::vector<Var<S>>& weights, S lambda) {
  if (weights.empty() || lambda == S(0)) {
    Mat<S> zero(1, 1);
    return t.leaf(std::move(zero));
  }
  std::vector<Var<S>> terms;
  terms.reserve(weights.size());
  for (Var<S> w : weights) terms.push_back(sum_reduce(hadamard(w, w)));
  return scale(add_n(terms), lambda);
}

// Inverted dropout: in training, entries are zeroed with probability `rate`
// and survivors scaled by 1/(1-rate); in eval it is exactly the identity.
template <typename S>
Var<S> dropout(Var<S> x, double rate, bool training, SplitMix64& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw config_error("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  Tape<S>& t = *x.tape;
  const Mat<S>& X = t.val(x);
  Mat<S> mask(X.rows, X.cols);
  const S keep_scale = S(1.0 / (1.0 - rate));
  for (S& v : mask.a) v = rng.uniform() >= rate ? keep_scale : S(0);
  Mat<S> C = X;
  for (std::size_t i = 0; i < C.a.size(); ++i) C.a[i] *= mask.a[i];
  return t.node(std::move(C), [x, mask](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_at(self);
    Mat<S>& gx = tp.grad_mut(x);
    for (std::size_t i = 0; i < g.a.size(); ++i) gx.a[i] += g.a[i] * mask.a[i];
  });
}

// Running statistics for batch normalization. Updated only by the training
// loop; eval reads them.
template <typename S>
struct BnState {
  Mat<S> running_mean;  // d x 1
  Mat<S> running_var;   // d x 1
  S momentum = S(0.9);

  BnState() = default;
  explicit BnState(int d, S mom = S(0.9)) : running_mean(d, 1), running_var(d, 1), momentum(mom) {
    running_var.fill(S(1));
  }
};

// Batch statistics normalization over columns (features are rows). Variance is
// the biased batch variance. If `update` is given, running stats receive an
// EMA update as a side effect; pass nullptr for a pure function (gradient
// checking re-evaluates the forward many times).
template <typename S>
Var<S> batch_norm_train(Var<S> x, Var<S> gamma, Var<S> beta, S eps, BnState<S>* update) {
  Tape<S>& t = *x.tape;
  const Mat<S>& X = t.val(x);
  const Mat<S>& G = t.val(gamma);
  const Mat<S>& B = t.val(beta);
  if (G.cols != 1 || B.cols != 1 || G.rows != X.rows || B.rows != X.rows)
    throw dimension_error("batch_norm: gamma/beta must be " + std::to_string(X.rows) +
                          "x1 columns");
  if (X.cols < 2)
    throw batch_error("batch_norm: training needs a batch of at least 2, got " +
                      std::to_string(X.cols));
  const int d = X.rows, n = X.cols;
  Mat<S> mean(d, 1), var(d, 1), istd(d, 1);
  for (int r = 0; r < d; ++r) {
    S mu = 0;
    for (int c = 0; c < n; ++c) mu += X(r, c);
    mu /= static_cast<S>(n);
    S v = 0;
    for (int c = 0; c < n; ++c) {
      const S dx = X(r, c) - mu;
      v += dx * dx;
    }
    v /= static_cast<S>(n);
    mean(r, 0) = mu;
    var(r, 0) = v;
    istd(r, 0) = S(1) / std::sqrt(v + eps);
  }
  Mat<S> xhat(d, n), y(d, n);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < n; ++c) {
      xhat(r, c) = (X(r, c) - mean(r, 0)) * istd(r, 0);
      y(r, c) = G(r, 0) * xhat(r, c) + B(r, 0);
    }
  if (update) {
    const S mom = update->momentum;
    for (int r = 0; r < d; ++r) {
      update->running_mean(r, 0) = mom * update->running_mean(r, 0) + (S(1) - mom) * mean(r, 0);
      update->running_var(r, 0) = mom * update->running_var(r, 0) + (S(1) - mom) * var(r, 0);
    }
  }
  return t.node(std::move(y), [x, gamma, beta, xhat, istd](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_at(self);
    const Mat<S>& G2 = tp.val(gamma);
    Mat<S>& gx = tp.grad_mut(x);
    Mat<S>& gg = tp.grad_mut(gamma);
    Mat<S>& gb = tp.grad_mut(beta);
    const int d = g.rows, n = g.cols;
    for (int r = 0; r < d; ++r) {
      S sum_g = 0, sum_gx = 0;
      for (int c = 0; c < n; ++c) {
        sum_g += g(r, c);
        sum_gx += g(r, c) * xhat(r, c);
      }
      gb(r, 0) += sum_g;
      gg(r, 0) += sum_gx;
      const S mg = sum_g / static_cast<S>(n);
      const S mgx = sum_gx / static_cast<S>(n);
      const S coeff = G2(r, 0) * istd(r, 0);
      for (int c = 0; c < n; ++c)
        gx(r, c) += coeff * (g(r, c) - mg - xhat(r, c) * mgx);
    }
  });
}

// Eval-mode normalization with the stored running statistics.
template <typename S>
Var<S> batch_norm_eval(Var<S> x, Var<S> gamma, Var<S> beta, const BnState<S>& st, S eps) {
  Tape<S>& t = *x.tape;
  const Mat<S>& X = t.val(x);
  const Mat<S>& G = t.val(gamma);
  const Mat<S>& B = t.val(beta);
  if (G.cols != 1 || B.cols != 1 || G.rows != X.rows || B.rows != X.rows)
    throw dimension_error("batch_norm: gamma/beta must be " + std::to_string(X.rows) +
                          "x1 columns");
  if (st.running_mean.rows != X.rows)
    throw dimension_error("batch_norm: running stats sized for " +
                          std::to_string(st.running_mean.rows) + " features, input has " +
                          std::to_string(X.rows));
  const int d = X.rows, n = X.cols;
  Mat<S> xhat(d, n), y(d, n), istd(d, 1);
  for (int r = 0; r < d; ++r) istd(r, 0) = S(1) / std::sqrt(st.running_var(r, 0) + eps);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < n; ++c) {
      xhat(r, c) = (X(r, c) - st.running_mean(r, 0)) * istd(r, 0);
      y(r, c) = G(r, 0) * xhat(r, c) + B(r, 0);
    }
  return t.node(std::move(y), [x, gamma, beta, xhat, istd](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_at(self);
    const Mat<S>& G2 = tp.val(gamma);
    Mat<S>& gx = tp.grad_mut(x);
    Mat<S>& gg = tp.grad_mut(gamma);
    Mat<S>& gb = tp.grad_mut(beta);
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < g.cols; ++c) {
        gx(r, c) += g(r, c) * G2(r, 0) * istd(r, 0);
        gg(r, 0) += g(r, c) * xhat(r, c);
        gb(r, 0) += g(r, c);
      }
  });
}

template <typename S>
Var<S> batch_norm(Var<S> x, Var<S> gamma, Var<S> beta, BnState<S>& st, bool training,
                  S eps = S(1e-5)) {
  return training ? batch_norm_train(x, gamma, beta, eps, &st)
                  : batch_norm_eval(x, gamma, beta, st, eps);
}

}  // namespace rgat
