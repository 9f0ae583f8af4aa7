#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rgat/conllu.hpp"
#include "rgat/embeddings.hpp"
#include "rgat/errors.hpp"
#include "rgat/matrix.hpp"
#include "rgat/rng.hpp"
#include "rgat/tape.hpp"

namespace rgat {

// How the three per-relation vectors fold into the final syntactic embedding.
enum class FinalAggregator { Sum, Mean, Concat };

// How sampled neighbor base embeddings pool inside one relation.
enum class InnerAggregator { Sum, Mean, MaxPool };

inline const char* to_string(FinalAggregator a) {
  switch (a) {
    case FinalAggregator::Sum: return "sum";
    case FinalAggregator::Mean: return "mean";
    default: return "concat";
  }
}

inline const char* to_string(InnerAggregator a) {
  switch (a) {
    case InnerAggregator::Sum: return "sum";
    case InnerAggregator::Mean: return "mean";
    default: return "maxpool";
  }
}

inline FinalAggregator final_aggregator_from_string(const std::string& s) {
  if (s == "sum") return FinalAggregator::Sum;
  if (s == "mean") return FinalAggregator::Mean;
  if (s == "concat") return FinalAggregator::Concat;
  throw config_error("unknown final aggregator '" + s + "' (sum, mean or concat)");
}

inline InnerAggregator inner_aggregator_from_string(const std::string& s) {
  if (s == "sum") return InnerAggregator::Sum;
  if (s == "mean") return InnerAggregator::Mean;
  if (s == "maxpool") return InnerAggregator::MaxPool;
  throw config_error("unknown inner aggregator '" + s + "' (sum, mean or maxpool)");
}

struct RgatConfig {
  int d_bert = 1024;  // frozen contextual width
  int d = 256;        // compressed node width
  int m = 10;         // edge embedding width
  int n = 20;         // attention width
  FinalAggregator final_agg = FinalAggregator::Concat;
  InnerAggregator inner_agg = InnerAggregator::Sum;
  bool per_relation_attention = false;

  int syntactic_dim() const { return final_agg == FinalAggregator::Concat ? 3 * d : d; }
  int blend_dim() const { return syntactic_dim() + d; }

  void validate() const {
    if (d_bert < 1 || d < 1 || m < 1 || n < 1)
      throw config_error("rgat config: all dimensions must be >= 1");
  }
};

// All learnable tensors of the layer. Matrices map input width (columns) to
// output width (rows), so every equation reads as matrix times column vector.
template <typename S>
struct RgatParams {
  RgatConfig cfg;
  Mat<S> compress;                        // d x d_bert
  std::array<Mat<S>, kRelations> neighbor_proj;  // m x d, per relation
  std::array<Mat<S>, kRelations> value_proj;     // d x m, per relation
  std::vector<Mat<S>> attn_w2;            // n x m; one shared or three per-relation
  std::vector<Mat<S>> attn_w;             // n x 1
  Mat<S> shortcut;                        // d x d_bert, compact contextual projection

  int attn_index(int relation) const { return cfg.per_relation_attention ? relation : 0; }

  template <typename F>
  void visit(F&& f) {
    f("rgat.compress", "rgat", compress, true);
    for (int r = 0; r < kRelations; ++r)
      f("rgat.neighbor_proj." + std::to_string(r), "rgat", neighbor_proj[r], true);
    for (int r = 0; r < kRelations; ++r)
      f("rgat.value_proj." + std::to_string(r), "rgat", value_proj[r], true);
    for (std::size_t i = 0; i < attn_w2.size(); ++i)
      f("rgat.attn_w2." + std::to_string(i), "rgat", attn_w2[i], true);
    for (std::size_t i = 0; i < attn_w.size(); ++i)
      f("rgat.attn_w." + std::to_string(i), "rgat", attn_w[i], true);
    f("rgat.shortcut", "shortcut", shortcut, true);
  }
  template <typename F>
  void visit(F&& f) const {
    const_cast<RgatParams*>(this)->visit(
        [&](const std::string& name, const char* tag, Mat<S>& v, bool trainable) {
          f(name, tag, static_cast<const Mat<S>&>(v), trainable);
        });
  }
};

namespace detail {

template <typename S>
void glorot_fill(Mat<S>& m, SplitMix64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(m.rows + m.cols));
  for (S& v : m.a) v = static_cast<S>(rng.uniform(-bound, bound));
}

}  // namespace detail

template <typename S>
RgatParams<S> init_rgat_params(const RgatConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  RgatParams<S> p;
  p.cfg = cfg;
  p.compress = Mat<S>(cfg.d, cfg.d_bert);
  for (int r = 0; r < kRelations; ++r) {
    p.neighbor_proj[r] = Mat<S>(cfg.m, cfg.d);
    p.value_proj[r] = Mat<S>(cfg.d, cfg.m);
  }
  const int heads = cfg.per_relation_attention ? kRelations : 1;
  for (int i = 0; i < heads; ++i) {
    p.attn_w2.emplace_back(cfg.n, cfg.m);
    p.attn_w.emplace_back(cfg.n, 1);
  }
  p.shortcut = Mat<S>(cfg.d, cfg.d_bert);
  SplitMix64 rng(mix_seed(seed, fnv1a64("rgat-init")));
  p.visit([&](const std::string&, const char*, Mat<S>& m, bool) { detail::glorot_fill(m, rng); });
  return p;
}

// Tape leaves for one forward pass over a parameter set.
template <typename S>
struct BoundRgat {
  const RgatConfig* cfg = nullptr;
  Var<S> compress, shortcut;
  std::array<Var<S>, kRelations> neighbor_proj, value_proj;
  std::vector<Var<S>> attn_w2, attn_w;

  Var<S> attn_w2_for(int r) const { return attn_w2[cfg->per_relation_attention ? r : 0]; }
  Var<S> attn_w_for(int r) const { return attn_w[cfg->per_relation_attention ? r : 0]; }
};

template <typename S>
BoundRgat<S> bind_rgat(Tape<S>& t, const RgatParams<S>& p) {
  BoundRgat<S> b;
  b.cfg = &p.cfg;
  b.compress = t.leaf(p.compress);
  for (int r = 0; r < kRelations; ++r) b.neighbor_proj[r] = t.leaf(p.neighbor_proj[r]);
  for (int r = 0; r < kRelations; ++r) b.value_proj[r] = t.leaf(p.value_proj[r]);
  for (const auto& w2 : p.attn_w2) b.attn_w2.push_back(t.leaf(w2));
  for (const auto& w : p.attn_w) b.attn_w.push_back(t.leaf(w));
  b.shortcut = t.leaf(p.shortcut);
  return b;
}

// u_base = W_r0 u_out: a pure linear compression, no bias, no activation.
template <typename S>
Var<S> compress(const BoundRgat<S>& p, Var<S> u_out) {
  return matmul(p.compress, u_out);
}

// Edge embedding for one (node, relation): project the pooled sampled
// neighbor base embeddings; an empty neighbor set yields the zero vector.
template <typename S>
Var<S> aggregate_neighbors(Tape<S>& t, const BoundRgat<S>& p, int relation,
                           const std::vector<Var<S>>& sampled_bases,
                           InnerAggregator agg) {
  if (sampled_bases.empty()) return t.leaf(Mat<S>(p.cfg->m, 1));
  Var<S> pooled;
  switch (agg) {
    case InnerAggregator::Sum: pooled = add_n(sampled_bases); break;
    case InnerAggregator::Mean: pooled = mean_of(sampled_bases); break;
    case InnerAggregator::MaxPool: pooled = max_n(sampled_bases); break;
  }
  return matmul(p.neighbor_proj[relation], pooled);
}

// Attention over the three relations: logit_r = w^T tanh(W2 U_r), one softmax
// across the relation logits. Identical edge embeddings give exactly uniform
// weights.
template <typename S>
Var<S> attend(Tape<S>& t, const BoundRgat<S>& p, const std::array<Var<S>, kRelations>& edge) {
  std::vector<Var<S>> logits;
  logits.reserve(kRelations);
  for (int r = 0; r < kRelations; ++r)
    logits.push_back(dot(p.attn_w_for(r), tanh(matmul(p.attn_w2_for(r), edge[r]))));
  return softmax(concat_rows(logits), 0);
}

// v_r = u_base + a_r * M_r U_r
template <typename S>
Var<S> combine(const BoundRgat<S>& p, int relation, Var<S> u_base, Var<S> edge,
               Var<S> attention_r) {
  return add(u_base, scale_by(matmul(p.value_proj[relation], edge), attention_r));
}

// Final aggregation over the three relation vectors, in relation order.
template <typename S>
Var<S> finalize(const std::array<Var<S>, kRelations>& v, FinalAggregator mode) {
  const std::vector<Var<S>> parts(v.begin(), v.end());
  switch (mode) {
    case FinalAggregator::Sum: return add_n(parts);
    case FinalAggregator::Mean: return mean_of(parts);
    default: return concat_rows(parts);
  }
}

// Everything the layer computes for one node.
template <typename S>
struct NodeTrace {
  Var<S> u_out;                              // frozen contextual vector
  Var<S> u_base;                             // compressed base embedding
  std::array<Var<S>, kRelations> edge;       // per-relation edge embeddings
  Var<S> attention;                          // 3x1 relation weights
  std::array<Var<S>, kRelations> v_rel;      // per-relation combined vectors
  Var<S> v_final;                            // aggregated syntactic embedding
  Var<S> blended;                            // [v_final ; shortcut u_out]
};

// Full pass: compress every node, aggregate sampled neighbors per relation,
// attend, combine, aggregate, then blend with the compact contextual
// projection.
template <typename S>
std::vector<NodeTrace<S>> rgat_forward(Tape<S>& t, const DependencyGraph& g,
                                       const TokenEmbeddingTable& table,
                                       const NeighborSample& samples, const BoundRgat<S>& p) {
  const RgatConfig& cfg = *p.cfg;
  if (table.dim() != cfg.d_bert)
    throw dimension_error("rgat_forward: embedding table dimension " +
                          std::to_string(table.dim()) + " does not match configured d_bert " +
                          std::to_string(cfg.d_bert));
  const int n = static_cast<int>(g.tokens.size());
  for (int r = 0; r < kRelations; ++r)
    if (static_cast<int>(samples.picks[r].size()) != n)
      throw usage_error("rgat_forward: neighbor samples were drawn for a different graph");

  std::vector<NodeTrace<S>> traces(n);
  for (int i = 0; i < n; ++i) {
    const std::vector<float>& raw = table.lookup(g.doc_id, i);
    Mat<S> u(cfg.d_bert, 1);
    for (int k = 0; k < cfg.d_bert; ++k) u(k, 0) = static_cast<S>(raw[k]);
    traces[i].u_out = t.leaf(std::move(u));
    traces[i].u_base = compress(p, traces[i].u_out);
  }
  for (int i = 0; i < n; ++i) {
    NodeTrace<S>& trace = traces[i];
    for (int r = 0; r < kRelations; ++r) {
      std::vector<Var<S>> sampled;
      for (int j : samples.picks[r][i]) sampled.push_back(traces[j].u_base);
      trace.edge[r] = aggregate_neighbors(t, p, r, sampled, cfg.inner_agg);
    }
    trace.attention = attend(t, p, trace.edge);
    for (int r = 0; r < kRelations; ++r)
      trace.v_rel[r] = combine(p, r, trace.u_base, trace.edge[r],
                               slice_rows(trace.attention, r, r + 1));
    trace.v_final = finalize(trace.v_rel, cfg.final_agg);
    trace.blended = concat_rows<S>({trace.v_final, matmul(p.shortcut, trace.u_out)});
  }
  return traces;
}

// Baseline relational GCN layer stack: normalized sums over the full neighbor
// sets (no sampling), ReLU per layer. Empty relations contribute zero.
template <typename S>
std::vector<Var<S>> rgcn_forward(Tape<S>& t, const DependencyGraph& g,
                                 const std::vector<Var<S>>& features,
                                 const std::vector<std::array<Var<S>, kRelations>>& layers) {
  const int n = static_cast<int>(g.tokens.size());
  if (static_cast<int>(features.size()) != n)
    throw dimension_error("rgcn_forward: one feature vector per token required");
  std::vector<Var<S>> h = features;
  for (const auto& weights : layers) {
    std::vector<Var<S>> next(n);
    for (int i = 0; i < n; ++i) {
      std::vector<Var<S>> contributions;
      for (int r = 0; r < kRelations; ++r) {
        const auto& nb = g.neighbors[r][i];
        if (nb.empty()) continue;
        std::vector<Var<S>> hs;
        hs.reserve(nb.size());
        for (int j : nb) hs.push_back(h[j]);
        contributions.push_back(
            scale(matmul(weights[r], add_n(hs)), S(1) / static_cast<S>(nb.size())));
      }
      next[i] = relu(add_n(contributions));  // self-loop guarantees nonempty
    }
    h = std::move(next);
  }
  return h;
}

}  // namespace rgat
