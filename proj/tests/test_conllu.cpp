#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>
#include <string>

#include "rgat/conllu.hpp"
#include "rgat/rng.hpp"

using rgat::DependencyGraph;
using rgat::Relation;

namespace {

std::string row(int id, const std::string& form, int head, const std::string& deprel = "dep") {
  return std::to_string(id) + "\t" + form + "\t_\t_\t_\t_\t" + std::to_string(head) + "\t" +
         deprel + "\t_\t_\n";
}

// random attachment tree over n tokens: token i>0 gets a head in [0, i)
std::string random_tree_doc(const std::string& id, int sentences, rgat::SplitMix64& rng,
                            int* total_tokens) {
  std::string s = "# newdoc id = " + id + "\n";
  *total_tokens = 0;
  for (int sent = 0; sent < sentences; ++sent) {
    const int n = 1 + static_cast<int>(rng.below(7));
    *total_tokens += n;
    for (int i = 0; i < n; ++i) {
      const int head = i == 0 ? 0 : static_cast<int>(rng.below(i)) + 1;
      s += row(i + 1, "w" + std::to_string(sent) + "_" + std::to_string(i), head);
    }
    s += "\n";
  }
  return s;
}

}  // namespace

TEST_CASE("two-token sentence builds the three relations", "[depgraph]") {
  const std::string text = row(1, "Alice", 2, "nsubj") + row(2, "smiled", 0, "root") + "\n";
  auto docs = rgat::parse_conllu(text);
  REQUIRE(docs.size() == 1);
  const DependencyGraph& g = docs[0];
  REQUIRE(g.tokens.size() == 2);
  CHECK(g.doc_id == "doc");
  CHECK(g.relation_neighbors(0, Relation::DepToHead).empty());
  CHECK(g.relation_neighbors(1, Relation::DepToHead) == std::vector<int>{0});
  CHECK(g.relation_neighbors(0, Relation::HeadToDep) == std::vector<int>{1});
  CHECK(g.relation_neighbors(1, Relation::HeadToDep).empty());
  CHECK(g.relation_neighbors(0, Relation::SelfLoop) == std::vector<int>{0});
  CHECK(g.relation_neighbors(1, Relation::SelfLoop) == std::vector<int>{1});
  CHECK(g.text == "Alice smiled");
  CHECK(g.tokens[0].char_start == 0);
  CHECK(g.tokens[0].char_end == 5);
  CHECK(g.tokens[1].char_start == 6);
  CHECK(g.tokens[1].char_end == 12);
  CHECK_FALSE(g.tokens[1].head.has_value());
  CHECK(g.tokens[0].head == 1);
}

TEST_CASE("single-token sentence has only the self loop", "[depgraph]") {
  auto docs = rgat::parse_conllu(row(1, "Hi", 0) + "\n");
  REQUIRE(docs.size() == 1);
  const auto& g = docs[0];
  CHECK(g.relation_neighbors(0, Relation::HeadToDep).empty());
  CHECK(g.relation_neighbors(0, Relation::DepToHead).empty());
  CHECK(g.relation_neighbors(0, Relation::SelfLoop) == std::vector<int>{0});
  auto st = rgat::graph_stats(g);
  CHECK(st.tokens == 1);
  CHECK(st.roots == 1);
  CHECK(st.edges_head_to_dep == 0);
  CHECK(st.edges_dep_to_head == 0);
  CHECK(st.edges_self_loop == 1);
}

TEST_CASE("malformed lines are reported with their line number", "[depgraph]") {
  const std::string bad_head = row(1, "a", 2) + "2\tb\t_\t_\t_\t_\tx\tdep\t_\t_\n";
  CHECK_THROWS_WITH(rgat::parse_conllu(bad_head),
                    Catch::Matchers::ContainsSubstring("line 2") &&
                        Catch::Matchers::ContainsSubstring("HEAD"));
  CHECK_THROWS_AS(rgat::parse_conllu(row(1, "a", 5) + "\n"), rgat::structure_error);
  CHECK_THROWS_AS(rgat::parse_conllu(row(1, "a", 1) + "\n"), rgat::structure_error);
  CHECK_THROWS_AS(rgat::parse_conllu("1\tonly\tthree\n"), rgat::parse_error);
  CHECK_THROWS_AS(rgat::parse_conllu(row(7, "a", 0)), rgat::parse_error);
}

TEST_CASE("documents merge sentences, keep roots, and respect # text", "[depgraph]") {
  std::string text;
  text += "# newdoc id = d1\n";
  text += "# text = Bob runs.\n";
  text += row(1, "Bob", 2) + row(2, "runs", 0) + row(3, ".", 2) + "\n";
  text += "# text = He won.\n";
  text += row(1, "He", 2) + row(2, "won", 0) + row(3, ".", 2) + "\n";
  text += "# newdoc id = d2\n";
  text += row(1, "Yes", 0) + "\n";
  auto docs = rgat::parse_conllu(text);
  REQUIRE(docs.size() == 2);
  const auto& g = docs[0];
  CHECK(g.doc_id == "d1");
  CHECK(g.text == "Bob runs. He won.");
  REQUIRE(g.tokens.size() == 6);
  CHECK(g.root_count() == 2);
  // "runs." has no space before the period; offsets must follow # text
  CHECK(g.tokens[2].char_start == 8);
  CHECK(g.tokens[2].char_end == 9);
  CHECK(g.tokens[3].surface == "He");
  CHECK(g.tokens[3].char_start == 10);
  // second sentence's heads are document-global
  CHECK(g.tokens[3].head == 4);
  CHECK(docs[1].doc_id == "d2");
  CHECK(docs[1].tokens.size() == 1);
}

TEST_CASE("multiword ranges and empty nodes are skipped", "[depgraph]") {
  std::string text;
  text += "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n";
  text += row(1, "do", 0);
  text += row(2, "n't", 1);
  text += "2.1\tghost\t_\t_\t_\t_\t_\t_\t_\t_\n";
  text += "\n";
  auto docs = rgat::parse_conllu(text);
  REQUIRE(docs.size() == 1);
  CHECK(docs[0].tokens.size() == 2);
  CHECK(docs[0].tokens[1].surface == "n't");
}

TEST_CASE("duplicate document ids are rejected", "[depgraph]") {
  std::string text = "# newdoc id = same\n" + row(1, "a", 0) + "\n# newdoc id = same\n" +
                     row(1, "b", 0) + "\n";
  CHECK_THROWS_AS(rgat::parse_conllu(text), rgat::duplication_error);
}

TEST_CASE("token not present in # text is an error", "[depgraph]") {
  std::string text = "# text = something else\n" + row(1, "missing", 0) + "\n";
  CHECK_THROWS_AS(rgat::parse_conllu(text), rgat::parse_error);
}

TEST_CASE("graph stats count chains and stars", "[depgraph]") {
  // chain: token1 <- token2 <- token3
  auto chain = rgat::parse_conllu(row(1, "a", 0) + row(2, "b", 1) + row(3, "c", 2) + "\n");
  auto st = rgat::graph_stats(chain[0]);
  CHECK(st.edges_dep_to_head == 2);
  CHECK(st.edges_head_to_dep == 2);
  CHECK(st.roots == 1);

  // star: center heads 4 dependents
  auto star = rgat::parse_conllu(row(1, "hub", 0) + row(2, "s1", 1) + row(3, "s2", 1) +
                                 row(4, "s3", 1) + row(5, "s4", 1) + "\n");
  auto sst = rgat::graph_stats(star[0]);
  CHECK(star[0].relation_neighbors(0, Relation::DepToHead).size() == 4);
  CHECK(sst.max_out_degree == 4);
  auto js = rgat::stats_to_json(sst);
  CHECK(js["edges"]["dep_to_head"] == 4);
  CHECK(js["tokens"] == 5);
}

TEST_CASE("random trees satisfy the edge-count and transpose invariants", "[depgraph]") {
  rgat::SplitMix64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    int tokens = 0;
    const int sentences = 1 + static_cast<int>(rng.below(3));
    auto docs = rgat::parse_conllu(random_tree_doc("t", sentences, rng, &tokens));
    REQUIRE(docs.size() == 1);
    const auto& g = docs[0];
    REQUIRE(static_cast<int>(g.tokens.size()) == tokens);
    auto st = rgat::graph_stats(g);
    CHECK(st.edges_self_loop == static_cast<std::size_t>(tokens));
    CHECK(st.edges_head_to_dep == static_cast<std::size_t>(tokens) - st.roots);
    CHECK(st.edges_dep_to_head == static_cast<std::size_t>(tokens) - st.roots);
    CHECK(st.roots == static_cast<std::size_t>(sentences));
    // HeadToDep and DepToHead are exact transposes
    std::set<std::pair<int, int>> h2d, d2h;
    for (int i = 0; i < tokens; ++i) {
      for (int j : g.relation_neighbors(i, Relation::HeadToDep)) h2d.insert({i, j});
      for (int j : g.relation_neighbors(i, Relation::DepToHead)) d2h.insert({j, i});
    }
    CHECK(h2d == d2h);
  }
}

TEST_CASE("splitmix64 matches the reference stream", "[depgraph]") {
  // reference vectors for seed 0 from the canonical splitmix64 implementation
  rgat::SplitMix64 g(0);
  CHECK(g.next_u64() == 0xe220a8397b1dcdafULL);
  CHECK(g.next_u64() == 0x6e789e6aa1b965f4ULL);
  CHECK(g.next_u64() == 0x06c45d188009454fULL);
}

TEST_CASE("neighbor sampling is forced, deterministic, and uniform", "[depgraph]") {
  auto docs = rgat::parse_conllu(row(1, "hub", 0) + row(2, "s1", 1) + row(3, "s2", 1) +
                                 row(4, "s3", 1) + row(5, "s4", 1) + "\n");
  const auto& g = docs[0];

  // single-neighbor set, four draws: four copies
  auto s = rgat::sample_neighbors(g, 4, 7);
  CHECK(s.at(1, Relation::HeadToDep) == std::vector<int>{0, 0, 0, 0});
  // empty marker for the root's incoming-head relation
  CHECK(s.at(0, Relation::HeadToDep).empty());

  // determinism
  auto s2 = rgat::sample_neighbors(g, 4, 7);
  for (int r = 0; r < rgat::kRelations; ++r) CHECK(s.picks[r] == s2.picks[r]);
  auto s3 = rgat::sample_neighbors(g, 4, 8);
  CHECK(s3.at(0, Relation::DepToHead).size() == 4);

  // uniformity: the hub's 4 dependents each drawn with frequency 0.25 +- 0.02
  std::map<int, long> counts;
  long total = 0;
  for (int resample = 0; resample < 10000; ++resample) {
    auto sm = rgat::sample_neighbors(g, 4, 1000 + resample);
    for (int pick : sm.at(0, Relation::DepToHead)) {
      ++counts[pick];
      ++total;
    }
  }
  REQUIRE(counts.size() == 4);
  for (auto& [node, count] : counts) {
    const double freq = static_cast<double>(count) / static_cast<double>(total);
    CHECK(freq == Catch::Approx(0.25).margin(0.02));
  }

  CHECK_THROWS_AS(rgat::sample_neighbors(g, 0, 1), rgat::config_error);
}
