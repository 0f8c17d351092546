#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "switchctl/controllers.hpp"
#include "switchctl/graph.hpp"
#include "switchctl/random.hpp"

using namespace switchctl;

namespace {

// independent node-count references
long long ftg_node_count(int M, int T) {
  long long total = 0, level = 1;
  for (int k = 0; k <= T; ++k) {
    total += level;
    level *= M;
  }
  return total;
}

long long pow_ll(int M, int T) {
  long long v = 1;
  for (int k = 0; k < T; ++k) v *= M;
  return v;
}

std::set<std::tuple<std::string, std::string, int>> edge_set(const LabeledGraph& g) {
  std::set<std::tuple<std::string, std::string, int>> out;
  for (const LabeledEdge& e : g.edges())
    out.insert({word_to_string(g.node(e.src)), word_to_string(g.node(e.dst)), e.label});
  return out;
}

}  // namespace

TEST_CASE("feedback tree of order 1 on two modes, enumerated by hand") {
  const LabeledGraph g = build_ftg(2, 1);
  REQUIRE(g.num_nodes() == 3);
  CHECK(word_to_string(g.node(0)) == "");
  CHECK(word_to_string(g.node(1)) == "1");
  CHECK(word_to_string(g.node(2)) == "2");
  const auto edges = edge_set(g);
  const std::set<std::tuple<std::string, std::string, int>> expected = {
      {"", "1", 1}, {"", "2", 2}, {"1", "", 1}, {"1", "", 2}, {"2", "", 1}, {"2", "", 2}};
  CHECK(edges == expected);
}

TEST_CASE("feedback tree of order 0 is the self-loop root") {
  const LabeledGraph g = build_ftg(2, 0);
  REQUIRE(g.num_nodes() == 1);
  const auto edges = edge_set(g);
  const std::set<std::tuple<std::string, std::string, int>> expected = {{"", "", 1}, {"", "", 2}};
  CHECK(edges == expected);
}

TEST_CASE("feedback tree of order 2 has 7 nodes and 14 edges") {
  const LabeledGraph g = build_ftg(2, 2);
  CHECK(g.num_nodes() == 7);
  CHECK(g.num_edges() == 14);
  CHECK(is_complete(g));
  CHECK(is_deterministic(g));
}

TEST_CASE("De Bruijn order 1 on two modes, enumerated by hand") {
  const LabeledGraph g = build_debruijn(2, 1);
  REQUIRE(g.num_nodes() == 2);
  const auto edges = edge_set(g);
  const std::set<std::tuple<std::string, std::string, int>> expected = {
      {"1", "1", 1}, {"1", "2", 2}, {"2", "1", 1}, {"2", "2", 2}};
  CHECK(edges == expected);
}

TEST_CASE("De Bruijn order 2 prepends the new symbol") {
  const LabeledGraph g = build_debruijn(2, 2);
  REQUIRE(g.num_nodes() == 4);
  REQUIRE(g.num_edges() == 8);
  const int n12 = g.node_index(parse_word("12"));
  REQUIRE(n12 >= 0);
  CHECK(g.node(successor(g, n12, 1)) == parse_word("11"));
  CHECK(g.node(successor(g, n12, 2)) == parse_word("21"));
}

TEST_CASE("De Bruijn with a single letter is one self-loop") {
  const LabeledGraph g = build_debruijn(1, 2);
  REQUIRE(g.num_nodes() == 1);
  CHECK(g.node(0) == parse_word("11"));
  REQUIRE(g.num_edges() == 1);
  CHECK(g.edges()[0] == LabeledEdge{0, 0, 1});
}

TEST_CASE("builders reject invalid parameters") {
  CHECK_THROWS_AS(build_ftg(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_ftg(2, -1), std::invalid_argument);
  CHECK_THROWS_AS(build_debruijn(2, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_ftg(8, 20), std::length_error);
  CHECK_THROWS_AS(build_debruijn(8, 10), std::length_error);
}

TEST_CASE("completeness and determinism classify hand-built graphs") {
  // single node, only label 1 present out of an alphabet of two
  const LabeledGraph missing(2, {Word::epsilon()}, {LabeledEdge{0, 0, 1}});
  CHECK_FALSE(is_complete(missing));
  CHECK(is_deterministic(missing));

  // two outgoing edges with the same label
  const LabeledGraph doubled(1, {parse_word("1"), parse_word("2")},
                             {LabeledEdge{0, 0, 1}, LabeledEdge{0, 1, 1}});
  CHECK(is_complete(doubled) == false);  // node 2 has no outgoing edge
  CHECK_FALSE(is_deterministic(doubled));

  CHECK(is_complete(build_ftg(2, 3)));
  CHECK(is_deterministic(build_ftg(3, 2)));
  CHECK(is_complete(build_debruijn(2, 2)));
  CHECK(is_deterministic(build_debruijn(2, 3)));
}

TEST_CASE("successor follows the defining shifts") {
  const LabeledGraph ftg = build_ftg(2, 2);
  CHECK(ftg.node(successor(ftg, ftg.node_index(parse_word("1")), 2)) == parse_word("12"));
  CHECK(ftg.node(successor(ftg, ftg.node_index(parse_word("12")), 1)) == Word::epsilon());

  const LabeledGraph missing(2, {Word::epsilon()}, {LabeledEdge{0, 0, 1}});
  CHECK_THROWS_AS(successor(missing, 0, 2), std::invalid_argument);
  const LabeledGraph doubled(1, {parse_word("1"), parse_word("2")},
                             {LabeledEdge{0, 0, 1}, LabeledEdge{0, 1, 1}});
  CHECK_THROWS_AS(successor(doubled, 0, 1), std::invalid_argument);
}

TEST_CASE("node and edge counts match the closed formulas") {
  for (int M = 1; M <= 3; ++M) {
    for (int T = 0; T <= 4; ++T) {
      const LabeledGraph g = build_ftg(M, T);
      CHECK(g.num_nodes() == ftg_node_count(M, T));
      CHECK(g.num_edges() == static_cast<long long>(M) * g.num_nodes());
      CHECK(is_complete(g));
      CHECK(is_deterministic(g));
    }
    for (int T = 1; T <= 4; ++T) {
      const LabeledGraph g = build_debruijn(M, T);
      CHECK(g.num_nodes() == pow_ll(M, T));
      CHECK(g.num_edges() == pow_ll(M, T + 1));
      CHECK(is_complete(g));
      CHECK(is_deterministic(g));
    }
  }
}

TEST_CASE("walking the feedback tree from the root tracks the cutting function") {
  std::mt19937_64 gen(123);
  for (int trial = 0; trial < 200; ++trial) {
    const int M = rng::uniform_int(gen, 1, 3);
    const int T = rng::uniform_int(gen, 0, 4);
    const LabeledGraph g = build_ftg(M, T);
    const int len = rng::uniform_int(gen, 1, 40);
    const SwitchingSignal sigma = rng::random_signal(M, len, gen());
    int state = g.node_index(Word::epsilon());
    for (int k = 0; k <= len; ++k) {
      CHECK(g.node(state) == cut(T + 1, sigma, k));
      if (k % (T + 1) == 0) CHECK(state == g.node_index(Word::epsilon()));
      if (k < len) state = successor(g, state, sigma(k));
    }
  }
}
