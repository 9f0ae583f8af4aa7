#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rgat/gap.hpp"
#include "rgat/model.hpp"
#include "rgat/optim.hpp"

namespace rgat {

// Tripartite classifier head: concat(vA, vB, vP) -> hidden with batch norm,
// ReLU and dropout -> 3 logits in the fixed order [A, B, NEITHER].
template <typename S>
struct HeadParams {
  int input_dim = 0;
  int hidden = 512;
  Mat<S> w1, b1;        // hidden x input_dim, hidden x 1
  Mat<S> gamma, beta;   // batch-norm scale and shift, hidden x 1
  Mat<S> w2, b2;        // 3 x hidden, 3 x 1
  BnState<S> bn;        // running statistics, trained loop only

  template <typename F>
  void visit(F&& f) {
    f("head.w1", "head", w1, true);
    f("head.b1", "head", b1, true);
    f("head.bn_gamma", "head", gamma, true);
    f("head.bn_beta", "head", beta, true);
    f("head.w2", "head", w2, true);
    f("head.b2", "head", b2, true);
    f("head.bn_running_mean", "head", bn.running_mean, false);
    f("head.bn_running_var", "head", bn.running_var, false);
  }
  template <typename F>
  void visit(F&& f) const {
    const_cast<HeadParams*>(this)->visit(
        [&](const std::string& name, const char* tag, Mat<S>& v, bool trainable) {
          f(name, tag, static_cast<const Mat<S>&>(v), trainable);
        });
  }
};

template <typename S>
HeadParams<S> init_head_params(int input_dim, int hidden, std::uint64_t seed,
                               S bn_momentum = S(0.9)) {
  if (input_dim < 1 || hidden < 1)
    throw config_error("head params: input and hidden sizes must be >= 1");
  HeadParams<S> p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  p.w1 = Mat<S>(hidden, input_dim);
  p.b1 = Mat<S>(hidden, 1);
  p.gamma = Mat<S>(hidden, 1);
  p.gamma.fill(S(1));
  p.beta = Mat<S>(hidden, 1);
  p.w2 = Mat<S>(kClasses, hidden);
  p.b2 = Mat<S>(kClasses, 1);
  p.bn = BnState<S>(hidden, bn_momentum);
  SplitMix64 rng(mix_seed(seed, fnv1a64("head-init")));
  detail::glorot_fill(p.w1, rng);
  detail::glorot_fill(p.w2, rng);
  return p;
}

template <typename S>
struct BoundHead {
  const HeadParams<S>* params = nullptr;
  Var<S> w1, b1, gamma, beta, w2, b2;
};

template <typename S>
BoundHead<S> bind_head(Tape<S>& t, const HeadParams<S>& p) {
  BoundHead<S> b;
  b.params = &p;
  b.w1 = t.leaf(p.w1);
  b.b1 = t.leaf(p.b1);
  b.gamma = t.leaf(p.gamma);
  b.beta = t.leaf(p.beta);
  b.w2 = t.leaf(p.w2);
  b.b2 = t.leaf(p.b2);
  return b;
}

// X holds one concatenated instance per column. In training mode the batch
// statistics normalize (columns >= 2) and `bn_update` may record them; eval
// uses the stored running statistics and ignores dropout.
template <typename S>
Var<S> head_forward(Tape<S>& t, const BoundHead<S>& p, Var<S> X, bool training,
                    double dropout_rate, SplitMix64* rng, BnState<S>* bn_update,
                    S bn_eps = S(1e-5)) {
  auto pre = add_bias(matmul(p.w1, X), p.b1);
  Var<S> normed = training ? batch_norm_train(pre, p.gamma, p.beta, bn_eps, bn_update)
                           : batch_norm_eval(pre, p.gamma, p.beta, p.params->bn, bn_eps);
  Var<S> hidden = relu(normed);
  if (training && dropout_rate > 0.0) {
    if (!rng) throw usage_error("head_forward: dropout in training mode needs an rng");
    hidden = dropout(hidden, dropout_rate, true, *rng);
  }
  return add_bias(matmul(p.w2, hidden), p.b2);
}

template <typename S>
struct ClassifyOutput {
  Var<S> logits;  // 3 x 1
  Var<S> probs;   // softmax over [A, B, NEITHER]
};

// Single-instance classification per the head contract. Training mode is only
// valid through a batch (batch norm needs >= 2 columns), so this wrapper is
// the evaluation path; the trainer assembles batches itself.
template <typename S>
ClassifyOutput<S> classify(Tape<S>& t, const BoundHead<S>& p, Var<S> vA, Var<S> vB, Var<S> vP,
                           bool training = false, double dropout_rate = 0.0,
                           SplitMix64* rng = nullptr, BnState<S>* bn_update = nullptr) {
  const auto& a = t.val(vA);
  const auto& b = t.val(vB);
  const auto& c = t.val(vP);
  if (a.cols != 1 || !a.same_shape(b) || !a.same_shape(c))
    throw dimension_error("classify: mention vectors must be equal-length columns, got " +
                          a.shape_str() + ", " + b.shape_str() + ", " + c.shape_str());
  auto x = concat_rows<S>({vA, vB, vP});
  auto logits = head_forward(t, p, x, training, dropout_rate, rng, bn_update);
  return {logits, softmax(logits, 0)};
}

// Mean of the blended vectors over a mention's token set; a singleton is that
// node's vector itself.
template <typename S>
Var<S> mention_vector(const std::vector<int>& tokens, const std::vector<NodeTrace<S>>& traces) {
  if (tokens.empty()) throw usage_error("mention_vector: empty token set");
  std::vector<Var<S>> parts;
  parts.reserve(tokens.size());
  for (int idx : tokens) {
    if (idx < 0 || idx >= static_cast<int>(traces.size()))
      throw usage_error("mention_vector: token index " + std::to_string(idx) +
                        " outside the graph");
    parts.push_back(traces[idx].blended);
  }
  return parts.size() == 1 ? parts[0] : mean_of(parts);
}

// Cross-entropy against the one-hot label plus the L2 penalty on the given
// (already tape-bound) RGAT weight tensors.
template <typename S>
Var<S> loss(Tape<S>& t, Var<S> logits, Label label, const RegularizerSpec& reg,
            const std::vector<Var<S>>& rgat_weights) {
  auto ce = cross_entropy_cols(logits, {static_cast<int>(label)});
  return add(ce, l2_penalty(t, rgat_weights, static_cast<S>(reg.lambda)));
}

template <typename S>
Var<S> batch_loss(Tape<S>& t, Var<S> logits, const std::vector<Label>& labels,
                  const RegularizerSpec& reg, const std::vector<Var<S>>& rgat_weights) {
  std::vector<int> ints;
  ints.reserve(labels.size());
  for (Label l : labels) ints.push_back(static_cast<int>(l));
  auto ce = cross_entropy_cols(logits, ints);
  return add(ce, l2_penalty(t, rgat_weights, static_cast<S>(reg.lambda)));
}

// The complete trainable model: RGAT layer plus classifier head.
template <typename S>
struct ModelParams {
  RgatParams<S> rgat;
  HeadParams<S> head;

  template <typename F>
  void visit(F&& f) {
    rgat.visit(f);
    head.visit(f);
  }
  template <typename F>
  void visit(F&& f) const {
    rgat.visit(f);
    head.visit(f);
  }
};

template <typename S>
ModelParams<S> init_model_params(const RgatConfig& cfg, int hidden, std::uint64_t seed,
                                 S bn_momentum = S(0.9)) {
  ModelParams<S> p;
  p.rgat = init_rgat_params<S>(cfg, seed);
  p.head = init_head_params<S>(3 * cfg.blend_dim(), hidden, mix_seed(seed, 0x48EADULL),
                               bn_momentum);
  return p;
}

// Rounds every tensor through f32. Checkpoints store f32, so evaluating after
// this matches evaluating after a save/load round trip bit for bit.
template <typename S>
void round_to_f32(ModelParams<S>& p) {
  p.visit([](const std::string&, const char*, Mat<S>& m, bool) {
    for (S& v : m.a) v = static_cast<S>(static_cast<float>(v));
  });
}

// One forward pass's bound leaves for the whole model, with the bookkeeping
// the optimizer needs. Binding order follows visit order for trainables.
template <typename S>
struct ParamBinding {
  struct Entry {
    std::string name;
    std::string tag;
    Mat<S>* value = nullptr;
    Var<S> var;
  };
  std::vector<Entry> entries;
  BoundRgat<S> rgat;
  BoundHead<S> head;

  std::vector<Var<S>> tagged(const std::set<std::string>& tags) const {
    std::vector<Var<S>> out;
    for (const auto& e : entries)
      if (tags.count(e.tag)) out.push_back(e.var);
    return out;
  }
  std::vector<Mat<S>*> values() const {
    std::vector<Mat<S>*> out;
    for (const auto& e : entries) out.push_back(e.value);
    return out;
  }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& e : entries) out.push_back(e.name);
    return out;
  }
  std::vector<Mat<S>> gradients(const Tape<S>& t) const {
    std::vector<Mat<S>> out;
    for (const auto& e : entries) out.push_back(t.grad(e.var));
    return out;
  }
};

template <typename S>
ParamBinding<S> bind_model(Tape<S>& t, ModelParams<S>& p) {
  ParamBinding<S> b;
  b.rgat.cfg = &p.rgat.cfg;
  auto record = [&](const std::string& name, const char* tag, Mat<S>& m) {
    Var<S> v = t.leaf(m);
    b.entries.push_back({name, tag, &m, v});
    return v;
  };
  b.rgat.compress = record("rgat.compress", "rgat", p.rgat.compress);
  for (int r = 0; r < kRelations; ++r)
    b.rgat.neighbor_proj[r] =
        record("rgat.neighbor_proj." + std::to_string(r), "rgat", p.rgat.neighbor_proj[r]);
  for (int r = 0; r < kRelations; ++r)
    b.rgat.value_proj[r] =
        record("rgat.value_proj." + std::to_string(r), "rgat", p.rgat.value_proj[r]);
  for (std::size_t i = 0; i < p.rgat.attn_w2.size(); ++i)
    b.rgat.attn_w2.push_back(
        record("rgat.attn_w2." + std::to_string(i), "rgat", p.rgat.attn_w2[i]));
  for (std::size_t i = 0; i < p.rgat.attn_w.size(); ++i)
    b.rgat.attn_w.push_back(record("rgat.attn_w." + std::to_string(i), "rgat", p.rgat.attn_w[i]));
  b.rgat.shortcut = record("rgat.shortcut", "shortcut", p.rgat.shortcut);
  b.head.params = &p.head;
  b.head.w1 = record("head.w1", "head", p.head.w1);
  b.head.b1 = record("head.b1", "head", p.head.b1);
  b.head.gamma = record("head.bn_gamma", "head", p.head.gamma);
  b.head.beta = record("head.bn_beta", "head", p.head.beta);
  b.head.w2 = record("head.w2", "head", p.head.w2);
  b.head.b2 = record("head.b2", "head", p.head.b2);
  return b;
}

}  // namespace rgat
