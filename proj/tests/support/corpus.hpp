#pragma once

// Synthetic GAP-style corpus builder for tests: plain string assembly, no
// library code, so parser and ingestion are exercised end to end.

#include <string>
#include <vector>

namespace testsupport {

struct SynthCorpus {
  std::string tsv;
  std::string conllu;
  int count = 0;
};

namespace detail {

struct TokenSpec {
  std::string form;
  int head;  // 1-based within sentence, 0 = root
  const char* deprel;
};

inline const std::vector<std::string>& name_pool() {
  static const std::vector<std::string> names = {"Alice", "Bob",   "Carol", "Dave",
                                                 "Erin",  "Frank", "Grace", "Henry"};
  return names;
}

}  // namespace detail

// `count` instances over two sentence patterns; labels cycle A, B, NEITHER.
// Every instance is its own document with id prefix-%04d.
inline SynthCorpus make_corpus(int count, const std::string& prefix = "synth") {
  SynthCorpus corpus;
  corpus.count = count;
  corpus.tsv =
      "ID\tText\tPronoun\tPronoun-offset\tA\tA-offset\tA-coref\tB\tB-offset\tB-coref\tURL\n";
  const auto& names = detail::name_pool();
  for (int i = 0; i < count; ++i) {
    char idbuf[64];
    std::snprintf(idbuf, sizeof idbuf, "%s-%04d", prefix.c_str(), i);
    const std::string doc_id = idbuf;
    const std::string name_a = names[i % names.size()];
    const std::string name_b = names[(i + 3) % names.size()];
    const std::string pronoun = (i % 2 == 0) ? "she" : "he";
    const int label = i % 3;  // 0=A, 1=B, 2=NEITHER

    std::vector<detail::TokenSpec> tokens;
    bool two_token_a = (i % 4 == 1);
    std::string a_mention = two_token_a ? name_a + " Ann" : name_a;
    if (two_token_a) {
      tokens = {{name_a, 3, "nsubj"}, {"Ann", 1, "flat"},  {"met", 0, "root"},
                {name_b, 3, "obj"},   {"before", 7, "mark"}, {pronoun, 7, "nsubj"},
                {"left", 3, "advcl"}, {".", 3, "punct"}};
    } else {
      tokens = {{name_a, 2, "nsubj"}, {"told", 0, "root"},  {name_b, 2, "obj"},
                {"that", 7, "mark"},  {pronoun, 7, "nsubj"}, {"would", 7, "aux"},
                {"win", 2, "ccomp"},  {".", 2, "punct"}};
    }

    std::string text;
    int a_offset = -1, b_offset = -1, p_offset = -1;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (t) text += ' ';
      const int start = static_cast<int>(text.size());
      if (tokens[t].form == name_a && a_offset < 0) a_offset = start;
      if (tokens[t].form == name_b && b_offset < 0) b_offset = start;
      if (tokens[t].form == pronoun) p_offset = start;
      text += tokens[t].form;
    }

    corpus.tsv += doc_id + "\t" + text + "\t" + pronoun + "\t" + std::to_string(p_offset) +
                  "\t" + a_mention + "\t" + std::to_string(a_offset) + "\t" +
                  (label == 0 ? "TRUE" : "FALSE") + "\t" + name_b + "\t" +
                  std::to_string(b_offset) + "\t" + (label == 1 ? "TRUE" : "FALSE") +
                  "\thttp://example.test/" + doc_id + "\n";

    corpus.conllu += "# newdoc id = " + doc_id + "\n";
    corpus.conllu += "# text = " + text + "\n";
    for (std::size_t t = 0; t < tokens.size(); ++t)
      corpus.conllu += std::to_string(t + 1) + "\t" + tokens[t].form + "\t_\t_\t_\t_\t" +
                       std::to_string(tokens[t].head) + "\t" + tokens[t].deprel + "\t_\t_\n";
    corpus.conllu += "\n";
  }
  return corpus;
}

}  // namespace testsupport
