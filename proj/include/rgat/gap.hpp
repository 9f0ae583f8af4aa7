#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rgat/conllu.hpp"
#include "rgat/errors.hpp"

namespace rgat {

// Fixed class order everywhere: files, logits, probability vectors.
enum class Label : int { A = 0, B = 1, Neither = 2 };
inline constexpr int kClasses = 3;

inline const char* label_name(Label l) {
  switch (l) {
    case Label::A: return "A";
    case Label::B: return "B";
    default: return "NEITHER";
  }
}

inline Label label_from_name(const std::string& s) {
  if (s == "A") return Label::A;
  if (s == "B") return Label::B;
  if (s == "NEITHER") return Label::Neither;
  throw usage_error("unknown label '" + s + "' (expected A, B or NEITHER)");
}

// One pronoun-resolution example: does pronoun P refer to candidate A,
// candidate B, or neither.
struct GapInstance {
  std::string doc_id;
  std::string text;
  std::string pronoun;
  int pronoun_offset = -1;
  std::string a_text;
  int a_offset = -1;
  std::string b_text;
  int b_offset = -1;
  Label label = Label::Neither;
};

// Token index sets for the three mentions within one document graph.
struct MentionTokens {
  std::vector<int> a;
  std::vector<int> b;
  int p = -1;
};

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

inline bool parse_bool_cell(const std::string& s, const std::string& column, const std::string& id) {
  if (s == "TRUE" || s == "True" || s == "true") return true;
  if (s == "FALSE" || s == "False" || s == "false") return false;
  throw parse_error("row '" + id + "': column " + column + " must be TRUE or FALSE, got '" + s +
                    "'");
}

// the maximal run of tokens whose spans intersect [offset, offset+len)
inline std::vector<int> covering_tokens(const DependencyGraph& g, int offset, int len) {
  std::vector<int> out;
  const int end = offset + len;
  for (const Token& t : g.tokens)
    if (t.char_start < end && t.char_end > offset) out.push_back(t.index);
  return out;
}

}  // namespace detail

// Reads the public GAP column layout. Label is A if A-coref, B if B-coref,
// NEITHER otherwise; rows with both flags TRUE are rejected. Extra columns
// (URL) are ignored.
inline std::vector<GapInstance> read_gap_tsv(const std::string& tsv_text) {
  std::istringstream in(tsv_text);
  std::string line;
  if (!std::getline(in, line)) throw format_error("gap tsv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = detail::split_tabs(line);
  std::map<std::string, int> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = static_cast<int>(i);
  for (const char* required : {"ID", "Text", "Pronoun", "Pronoun-offset", "A", "A-offset",
                               "A-coref", "B", "B-offset", "B-coref"})
    if (!col.count(required))
      throw format_error(std::string("gap tsv: missing column '") + required + "'");

  std::vector<GapInstance> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = detail::split_tabs(line);
    if (cells.size() < header.size())
      throw format_error("gap tsv line " + std::to_string(line_no) + ": expected " +
                         std::to_string(header.size()) + " columns, got " +
                         std::to_string(cells.size()));
    GapInstance inst;
    inst.doc_id = cells[col["ID"]];
    inst.text = cells[col["Text"]];
    inst.pronoun = cells[col["Pronoun"]];
    inst.a_text = cells[col["A"]];
    inst.b_text = cells[col["B"]];
    try {
      inst.pronoun_offset = std::stoi(cells[col["Pronoun-offset"]]);
      inst.a_offset = std::stoi(cells[col["A-offset"]]);
      inst.b_offset = std::stoi(cells[col["B-offset"]]);
    } catch (const std::exception&) {
      throw parse_error("gap tsv row '" + inst.doc_id + "': non-integer offset column");
    }
    const bool a_coref = detail::parse_bool_cell(cells[col["A-coref"]], "A-coref", inst.doc_id);
    const bool b_coref = detail::parse_bool_cell(cells[col["B-coref"]], "B-coref", inst.doc_id);
    if (a_coref && b_coref)
      throw validation_error("gap tsv row '" + inst.doc_id +
                             "': A-coref and B-coref are both TRUE");
    inst.label = a_coref ? Label::A : b_coref ? Label::B : Label::Neither;

    auto offset_ok = [&](int off, const std::string& what) {
      if (off < 0 || off >= static_cast<int>(inst.text.size()))
        throw validation_error("gap tsv row '" + inst.doc_id + "': " + what + " offset " +
                               std::to_string(off) + " outside text of length " +
                               std::to_string(inst.text.size()));
    };
    offset_ok(inst.pronoun_offset, "pronoun");
    offset_ok(inst.a_offset, "A");
    offset_ok(inst.b_offset, "B");
    out.push_back(std::move(inst));
  }
  return out;
}

inline std::vector<GapInstance> read_gap_tsv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw usage_error("cannot open gap tsv '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return read_gap_tsv(ss.str());
}

// P maps to the single token whose span contains the pronoun offset; A and B
// map to the maximal contiguous token run covering their mention span.
inline MentionTokens locate_mentions(const GapInstance& inst, const DependencyGraph& g) {
  MentionTokens out;
  for (const Token& t : g.tokens)
    if (t.char_start <= inst.pronoun_offset && inst.pronoun_offset < t.char_end) {
      out.p = t.index;
      break;
    }
  if (out.p < 0)
    throw alignment_error("row '" + inst.doc_id + "': pronoun offset " +
                          std::to_string(inst.pronoun_offset) +
                          " does not fall inside any token");
  out.a = detail::covering_tokens(g, inst.a_offset, static_cast<int>(inst.a_text.size()));
  out.b = detail::covering_tokens(g, inst.b_offset, static_cast<int>(inst.b_text.size()));
  if (out.a.empty())
    throw alignment_error("row '" + inst.doc_id + "': A offset " + std::to_string(inst.a_offset) +
                          " (+" + std::to_string(inst.a_text.size()) + ") covers no token");
  if (out.b.empty())
    throw alignment_error("row '" + inst.doc_id + "': B offset " + std::to_string(inst.b_offset) +
                          " (+" + std::to_string(inst.b_text.size()) + ") covers no token");
  for (const auto* run : {&out.a, &out.b})
    for (std::size_t i = 1; i < run->size(); ++i)
      if ((*run)[i] != (*run)[i - 1] + 1)
        throw alignment_error("row '" + inst.doc_id + "': mention tokens are not contiguous");
  return out;
}

}  // namespace rgat
