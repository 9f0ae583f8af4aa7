#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgat/errors.hpp"
#include "rgat/rng.hpp"

namespace rgat {

// The three information flows of the syntactic dependency graph.
// Relation order is fixed and is also the concatenation order downstream.
enum class Relation : int { HeadToDep = 0, DepToHead = 1, SelfLoop = 2 };
inline constexpr int kRelations = 3;

struct Token {
  int index = -1;  // 0-based document position
  std::string surface;
  int char_start = -1;  // offsets into the document text
  int char_end = -1;
  std::optional<int> head;  // document token index; absent for roots
  std::string deprel;       // ingested but unused by the model
};

struct DependencyGraph {
  std::string doc_id;
  std::string text;
  std::vector<Token> tokens;
  // neighbors[r][i]: for HeadToDep the node's head (flow in from the head, at
  // most one); for DepToHead the node's dependents; SelfLoop is always {i}.
  std::array<std::vector<std::vector<int>>, kRelations> neighbors;

  const std::vector<int>& relation_neighbors(int node, Relation r) const {
    return neighbors[static_cast<int>(r)][node];
  }

  int root_count() const {
    int n = 0;
    for (const Token& t : tokens)
      if (!t.head.has_value()) ++n;
    return n;
  }
};

struct GraphStats {
  std::string doc_id;
  std::size_t tokens = 0;
  std::size_t roots = 0;
  std::size_t max_out_degree = 0;  // most dependents on a single head
  std::size_t edges_head_to_dep = 0;
  std::size_t edges_dep_to_head = 0;
  std::size_t edges_self_loop = 0;
};

// Per (node, relation): exactly `draws` sampled neighbor indices, or an empty
// list marking an empty neighbor set (aggregates to the zero vector).
struct NeighborSample {
  int draws = 0;
  std::array<std::vector<std::vector<int>>, kRelations> picks;

  const std::vector<int>& at(int node, Relation r) const {
    return picks[static_cast<int>(r)][node];
  }
};

namespace detail {

struct PendingRow {
  std::string form;
  int head = 0;  // 1-based within sentence, 0 = root
  std::string deprel;
  std::size_t line_no = 0;
};

inline void build_neighbors(DependencyGraph& g) {
  const int n = static_cast<int>(g.tokens.size());
  for (auto& rel : g.neighbors) rel.assign(n, {});
  for (int i = 0; i < n; ++i) {
    g.neighbors[static_cast<int>(Relation::SelfLoop)][i] = {i};
    if (g.tokens[i].head.has_value()) {
      const int h = *g.tokens[i].head;
      g.neighbors[static_cast<int>(Relation::HeadToDep)][i].push_back(h);
      g.neighbors[static_cast<int>(Relation::DepToHead)][h].push_back(i);
    }
  }
}

inline bool parse_int(const std::string& s, long& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stol(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

}  // namespace detail

// Parses CoNLL-U text into one DependencyGraph per document. Documents are
// delimited by '# newdoc id = X' comments; a file without any newdoc marker
// becomes a single document with id "doc". Sentences of a document are merged
// with their roots kept (no artificial super-root). Character offsets come
// from the sentence's '# text =' comment when present, otherwise from joining
// surfaces with single spaces; sentence texts are joined with single spaces.
// Multiword-token ranges (id "a-b") and empty nodes (id "a.b") are skipped.
inline std::vector<DependencyGraph> parse_conllu(const std::string& input) {
  std::vector<DependencyGraph> docs;
  DependencyGraph doc;
  bool doc_open = false;
  doc.doc_id = "doc";

  std::vector<detail::PendingRow> sentence;
  std::string sentence_text;
  bool has_sentence_text = false;

  auto flush_sentence = [&]() {
    if (sentence.empty()) {
      sentence_text.clear();
      has_sentence_text = false;
      return;
    }
    std::string text = sentence_text;
    if (!has_sentence_text) {
      text.clear();
      for (std::size_t i = 0; i < sentence.size(); ++i) {
        if (i) text += ' ';
        text += sentence[i].form;
      }
    }
    const int base_token = static_cast<int>(doc.tokens.size());
    const int base_char = doc.text.empty() ? 0 : static_cast<int>(doc.text.size()) + 1;
    if (!doc.text.empty()) doc.text += ' ';
    doc.text += text;

    std::size_t cursor = 0;
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      const detail::PendingRow& row = sentence[i];
      const std::size_t pos = text.find(row.form, cursor);
      if (pos == std::string::npos)
        throw parse_error("line " + std::to_string(row.line_no) + ": token '" + row.form +
                          "' not found in sentence text");
      cursor = pos + row.form.size();
      Token tok;
      tok.index = base_token + static_cast<int>(i);
      tok.surface = row.form;
      tok.char_start = base_char + static_cast<int>(pos);
      tok.char_end = base_char + static_cast<int>(cursor);
      if (row.head != 0) {
        if (row.head < 0 || row.head > static_cast<int>(sentence.size()))
          throw structure_error("line " + std::to_string(row.line_no) + ": HEAD " +
                                std::to_string(row.head) + " out of range for a sentence of " +
                                std::to_string(sentence.size()) + " tokens");
        if (row.head == static_cast<int>(i) + 1)
          throw structure_error("line " + std::to_string(row.line_no) +
                                ": token is its own head");
        tok.head = base_token + row.head - 1;
      }
      tok.deprel = row.deprel;
      doc.tokens.push_back(std::move(tok));
    }
    sentence.clear();
    sentence_text.clear();
    has_sentence_text = false;
    doc_open = true;
  };

  auto flush_doc = [&]() {
    flush_sentence();
    if (!doc_open && doc.tokens.empty()) return;
    detail::build_neighbors(doc);
    for (const auto& existing : docs)
      if (existing.doc_id == doc.doc_id)
        throw duplication_error("duplicate document id '" + doc.doc_id + "'");
    docs.push_back(std::move(doc));
    doc = DependencyGraph{};
    doc.doc_id = "doc";
    doc_open = false;
  };

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= input.size()) {
    std::size_t end = input.find('\n', start);
    if (end == std::string::npos) end = input.size();
    std::string line = input.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    start = end + 1;
    ++line_no;
    if (end == input.size() && line.empty() && start > input.size()) break;

    if (line.empty()) {
      flush_sentence();
      continue;
    }
    if (line[0] == '#') {
      const std::string body = line.substr(1);
      auto trimmed = [&](std::size_t from) {
        std::size_t b = body.find_first_not_of(' ', from);
        return b == std::string::npos ? std::string{} : body.substr(b);
      };
      const std::string stripped = trimmed(0);
      if (stripped.rfind("newdoc", 0) == 0) {
        flush_doc();
        const std::size_t eq = stripped.find('=');
        if (eq != std::string::npos) {
          std::size_t b = stripped.find_first_not_of(' ', eq + 1);
          if (b != std::string::npos) doc.doc_id = stripped.substr(b);
        }
        doc_open = true;
      } else if (stripped.rfind("text", 0) == 0 && stripped.find('=') != std::string::npos &&
                 stripped.substr(0, stripped.find('=')).find_first_not_of("text ") ==
                     std::string::npos) {
        const std::size_t eq = stripped.find('=');
        std::size_t b = stripped.find_first_not_of(' ', eq + 1);
        sentence_text = b == std::string::npos ? std::string{} : stripped.substr(b);
        has_sentence_text = true;
      }
      continue;
    }

    // token line: exactly 10 tab-separated columns
    std::vector<std::string> cols;
    std::size_t field_start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', field_start);
      if (tab == std::string::npos) {
        cols.push_back(line.substr(field_start));
        break;
      }
      cols.push_back(line.substr(field_start, tab - field_start));
      field_start = tab + 1;
    }
    if (cols.size() != 10)
      throw parse_error("line " + std::to_string(line_no) + ": expected 10 tab-separated columns, got " +
                        std::to_string(cols.size()));
    const std::string& id = cols[0];
    if (id.find('-') != std::string::npos) continue;  // multiword token range
    if (id.find('.') != std::string::npos) continue;  // empty node
    long id_val = 0;
    if (!detail::parse_int(id, id_val))
      throw parse_error("line " + std::to_string(line_no) + ": ID column '" + id +
                        "' is not an integer");
    if (id_val != static_cast<long>(sentence.size()) + 1)
      throw parse_error("line " + std::to_string(line_no) + ": ID " + id +
                        " breaks the sentence's token sequence");
    long head_val = 0;
    if (!detail::parse_int(cols[6], head_val))
      throw parse_error("line " + std::to_string(line_no) + ": HEAD column '" + cols[6] +
                        "' is not an integer");
    detail::PendingRow row;
    row.form = cols[1];
    row.head = static_cast<int>(head_val);
    row.deprel = cols[7];
    row.line_no = line_no;
    sentence.push_back(std::move(row));
  }
  flush_doc();
  return docs;
}

// S uniform draws with replacement per nonempty neighbor set, deterministic
// under the seed; empty sets keep the empty marker.
inline NeighborSample sample_neighbors(const DependencyGraph& g, int draws, std::uint64_t seed) {
  if (draws < 1) throw config_error("sample_neighbors: draw count must be >= 1");
  NeighborSample out;
  out.draws = draws;
  SplitMix64 rng(seed);
  const int n = static_cast<int>(g.tokens.size());
  for (int r = 0; r < kRelations; ++r) out.picks[r].assign(n, {});
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < kRelations; ++r) {
      const auto& candidates = g.neighbors[r][i];
      if (candidates.empty()) continue;
      auto& picks = out.picks[r][i];
      picks.reserve(draws);
      for (int s = 0; s < draws; ++s)
        picks.push_back(candidates[rng.below(candidates.size())]);
    }
  return out;
}

inline GraphStats graph_stats(const DependencyGraph& g) {
  GraphStats st;
  st.doc_id = g.doc_id;
  st.tokens = g.tokens.size();
  st.roots = static_cast<std::size_t>(g.root_count());
  for (const auto& deps : g.neighbors[static_cast<int>(Relation::DepToHead)]) {
    st.max_out_degree = std::max(st.max_out_degree, deps.size());
    st.edges_dep_to_head += deps.size();
  }
  for (const auto& heads : g.neighbors[static_cast<int>(Relation::HeadToDep)])
    st.edges_head_to_dep += heads.size();
  for (const auto& self : g.neighbors[static_cast<int>(Relation::SelfLoop)])
    st.edges_self_loop += self.size();
  return st;
}

inline nlohmann::json stats_to_json(const GraphStats& st) {
  return nlohmann::json{{"doc", st.doc_id},
                        {"tokens", st.tokens},
                        {"roots", st.roots},
                        {"max_out_degree", st.max_out_degree},
                        {"edges",
                         {{"head_to_dep", st.edges_head_to_dep},
                          {"dep_to_head", st.edges_dep_to_head},
                          {"self_loop", st.edges_self_loop}}}};
}

}  // namespace rgat
