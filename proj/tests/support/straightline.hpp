#pragma once

// Independent straight-line evaluator of the layer math for cross-checking
// the tape implementation. Plain nested vectors and loops only; nothing here
// touches the library's tensor or tape code paths.

#include <cmath>
#include <string>
#include <vector>

namespace testsupport {

using Vec = std::vector<double>;
using Matrix = std::vector<Vec>;  // [row][col]

struct SlParams {
  Matrix compress;                    // d x d_bert
  std::vector<Matrix> neighbor_proj;  // 3 of m x d
  std::vector<Matrix> value_proj;     // 3 of d x m
  std::vector<Matrix> attn_w2;        // 1 or 3 of n x m
  std::vector<Vec> attn_w;            // 1 or 3 of n
  Matrix shortcut;                    // d x d_bert
  bool per_relation_attention = false;
  int inner_agg = 0;   // 0 sum, 1 mean, 2 maxpool
  int final_agg = 2;   // 0 sum, 1 mean, 2 concat
};

inline Vec sl_matvec(const Matrix& m, const Vec& x) {
  Vec y(m.size(), 0.0);
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < x.size(); ++c) y[r] += m[r][c] * x[c];
  return y;
}

inline Vec sl_softmax(const Vec& logits) {
  Vec out(logits.size());
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

struct SlNode {
  Vec u_base;
  std::vector<Vec> edge;  // 3 of m
  Vec attention;          // 3
  std::vector<Vec> v_rel; // 3 of d
  Vec v_final;
  Vec blended;
};

// samples[r][i] lists the sampled neighbor indices for node i under relation
// r; an empty list is the empty-neighborhood marker.
inline std::vector<SlNode> sl_forward(const std::vector<Vec>& u_out,
                                      const std::vector<std::vector<std::vector<int>>>& samples,
                                      const SlParams& p) {
  const std::size_t n = u_out.size();
  const std::size_t d = p.compress.size();
  const std::size_t m = p.neighbor_proj[0].size();
  std::vector<SlNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) nodes[i].u_base = sl_matvec(p.compress, u_out[i]);
  for (std::size_t i = 0; i < n; ++i) {
    SlNode& node = nodes[i];
    node.edge.resize(3);
    for (int r = 0; r < 3; ++r) {
      const auto& picks = samples[r][i];
      if (picks.empty()) {
        node.edge[r] = Vec(m, 0.0);
        continue;
      }
      Vec pooled(d, 0.0);
      if (p.inner_agg == 2) {
        pooled = nodes[picks[0]].u_base;
        for (std::size_t s = 1; s < picks.size(); ++s)
          for (std::size_t k = 0; k < d; ++k)
            pooled[k] = std::max(pooled[k], nodes[picks[s]].u_base[k]);
      } else {
        for (int j : picks)
          for (std::size_t k = 0; k < d; ++k) pooled[k] += nodes[j].u_base[k];
        if (p.inner_agg == 1)
          for (double& v : pooled) v /= static_cast<double>(picks.size());
      }
      node.edge[r] = sl_matvec(p.neighbor_proj[r], pooled);
    }
    Vec logits(3, 0.0);
    for (int r = 0; r < 3; ++r) {
      const int h = p.per_relation_attention ? r : 0;
      const Vec hid = sl_matvec(p.attn_w2[h], node.edge[r]);
      double logit = 0;
      for (std::size_t k = 0; k < hid.size(); ++k)
        logit += p.attn_w[h][k] * std::tanh(hid[k]);
      logits[r] = logit;
    }
    node.attention = sl_softmax(logits);
    node.v_rel.resize(3);
    for (int r = 0; r < 3; ++r) {
      const Vec scaled = sl_matvec(p.value_proj[r], node.edge[r]);
      node.v_rel[r] = node.u_base;
      for (std::size_t k = 0; k < d; ++k) node.v_rel[r][k] += node.attention[r] * scaled[k];
    }
    if (p.final_agg == 2) {
      for (int r = 0; r < 3; ++r)
        node.v_final.insert(node.v_final.end(), node.v_rel[r].begin(), node.v_rel[r].end());
    } else {
      node.v_final = Vec(d, 0.0);
      for (int r = 0; r < 3; ++r)
        for (std::size_t k = 0; k < d; ++k) node.v_final[k] += node.v_rel[r][k];
      if (p.final_agg == 1)
        for (double& v : node.v_final) v /= 3.0;
    }
    node.blended = node.v_final;
    const Vec compact = sl_matvec(p.shortcut, u_out[i]);
    node.blended.insert(node.blended.end(), compact.begin(), compact.end());
  }
  return nodes;
}

}  // namespace testsupport
