#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "switchctl/system.hpp"

namespace switchctl {

enum class GraphKind { FeedbackTree, DeBruijn, Custom };

inline std::string to_string(GraphKind k) {
  switch (k) {
    case GraphKind::FeedbackTree: return "ftg";
    case GraphKind::DeBruijn: return "debruijn";
    default: return "custom";
  }
}

struct LabeledEdge {
  int src;
  int dst;
  int label;

  friend bool operator==(const LabeledEdge&, const LabeledEdge&) = default;
};

/// Directed graph with edges labeled by modes. Nodes are words over the
/// alphabet; the stored node order is total and fixed, and downstream
/// tie-breaking (e.g. the piecewise-linear selector) uses it.
class LabeledGraph {
 public:
  LabeledGraph(int alphabet_size, std::vector<Word> nodes, std::vector<LabeledEdge> edges,
               GraphKind kind = GraphKind::Custom, int order = -1)
      : alphabet_size_(alphabet_size),
        kind_(kind),
        order_(order),
        nodes_(std::move(nodes)),
        edges_(std::move(edges)) {
    if (alphabet_size_ < 1) throw std::invalid_argument("alphabet size must be >= 1");
    if (nodes_.empty()) throw std::invalid_argument("graph needs at least one node");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      auto [it, inserted] = index_.emplace(nodes_[i], static_cast<int>(i));
      if (!inserted) throw std::invalid_argument("duplicate node '" + word_to_string(nodes_[i]) + "'");
    }
    out_.assign(nodes_.size(), {});
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const LabeledEdge& ed = edges_[e];
      if (ed.label < 1 || ed.label > alphabet_size_)
        throw std::invalid_argument("edge label " + std::to_string(ed.label) + " outside alphabet");
      if (ed.src < 0 || ed.src >= num_nodes() || ed.dst < 0 || ed.dst >= num_nodes())
        throw std::invalid_argument("edge endpoint out of range");
      out_[static_cast<std::size_t>(ed.src)].push_back(static_cast<int>(e));
    }
  }

  int alphabet_size() const { return alphabet_size_; }
  GraphKind kind() const { return kind_; }
  int order() const { return order_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Word>& nodes() const { return nodes_; }
  const std::vector<LabeledEdge>& edges() const { return edges_; }
  const Word& node(int idx) const { return nodes_.at(static_cast<std::size_t>(idx)); }

  /// Index of a word in the node order, or -1 when absent.
  int node_index(const Word& w) const {
    auto it = index_.find(w);
    return it == index_.end() ? -1 : it->second;
  }

  const std::vector<int>& out_edges(int node) const { return out_.at(static_cast<std::size_t>(node)); }

 private:
  int alphabet_size_;
  GraphKind kind_;
  int order_;
  std::vector<Word> nodes_;
  std::vector<LabeledEdge> edges_;
  std::map<Word, int> index_;
  std::vector<std::vector<int>> out_;
};

/// Every (node, label) pair has at least one outgoing edge.
inline bool is_complete(const LabeledGraph& g) {
  const int M = g.alphabet_size();
  std::vector<char> seen;
  for (int a = 0; a < g.num_nodes(); ++a) {
    seen.assign(static_cast<std::size_t>(M), 0);
    for (int e : g.out_edges(a)) seen[static_cast<std::size_t>(g.edges()[static_cast<std::size_t>(e)].label - 1)] = 1;
    for (char s : seen)
      if (!s) return false;
  }
  return true;
}

/// Every (node, label) pair has at most one outgoing edge.
inline bool is_deterministic(const LabeledGraph& g) {
  const int M = g.alphabet_size();
  std::vector<int> count;
  for (int a = 0; a < g.num_nodes(); ++a) {
    count.assign(static_cast<std::size_t>(M), 0);
    for (int e : g.out_edges(a))
      if (++count[static_cast<std::size_t>(g.edges()[static_cast<std::size_t>(e)].label - 1)] > 1) return false;
  }
  return true;
}

/// Unique target of the (node, label) edge in a deterministic graph.
inline int successor(const LabeledGraph& g, int node, int label) {
  if (label < 1 || label > g.alphabet_size()) throw std::invalid_argument("label outside alphabet");
  int found = -1;
  for (int e : g.out_edges(node)) {
    const LabeledEdge& ed = g.edges()[static_cast<std::size_t>(e)];
    if (ed.label != label) continue;
    if (found >= 0)
      throw std::invalid_argument("non-deterministic pair (node '" + word_to_string(g.node(node)) + "', label " +
                                  std::to_string(label) + ")");
    found = ed.dst;
  }
  if (found < 0)
    throw std::invalid_argument("no edge from node '" + word_to_string(g.node(node)) + "' with label " +
                                std::to_string(label));
  return found;
}

namespace detail {

inline void check_node_cap(double projected, std::size_t cap) {
  if (projected > static_cast<double>(cap))
    throw std::length_error("graph would exceed the node cap of " + std::to_string(cap));
}

}  // namespace detail

/// Feedback-tree graph of order T: nodes are all words of length <= T ordered
/// by (length, lexicographic); words grow symbol by symbol and words of length
/// T step back to the empty word.
inline LabeledGraph build_ftg(int M, int T, std::size_t node_cap = limits::kDefaultNodeCap) {
  if (M < 1) throw std::invalid_argument("alphabet size must be >= 1");
  if (T < 0) throw std::invalid_argument("feedback-tree order must be >= 0");

  double projected = 1.0, level = 1.0;
  for (int k = 1; k <= T; ++k) {
    level *= M;
    projected += level;
    detail::check_node_cap(projected, node_cap);
  }

  std::vector<Word> nodes{Word::epsilon()};
  std::size_t level_begin = 0;
  for (int k = 1; k <= T; ++k) {
    const std::size_t level_end = nodes.size();
    for (std::size_t j = level_begin; j < level_end; ++j)
      for (int i = 1; i <= M; ++i) nodes.push_back(nodes[j].append(i));
    level_begin = level_end;
  }

  std::vector<LabeledEdge> edges;
  edges.reserve(nodes.size() * static_cast<std::size_t>(M));
  LabeledGraph skeleton(M, nodes, {}, GraphKind::FeedbackTree, T);
  for (int a = 0; a < skeleton.num_nodes(); ++a) {
    const Word& w = skeleton.node(a);
    for (int i = 1; i <= M; ++i) {
      const int b = (w.length() < T) ? skeleton.node_index(w.append(i)) : 0;  // node 0 is epsilon
      edges.push_back(LabeledEdge{a, b, i});
    }
  }
  return LabeledGraph(M, std::move(nodes), std::move(edges), GraphKind::FeedbackTree, T);
}

/// De Bruijn graph of order T: nodes are all words of length exactly T;
/// reading symbol j at node (i_0, ..., i_{T-1}) moves to (j, i_0, ..., i_{T-2})
/// along the edge labeled j, so a node records the last T observed modes,
/// most recent first.
inline LabeledGraph build_debruijn(int M, int T, std::size_t node_cap = limits::kDefaultNodeCap) {
  if (M < 1) throw std::invalid_argument("alphabet size must be >= 1");
  if (T < 1) throw std::invalid_argument("De Bruijn order must be >= 1");

  double projected = 1.0;
  for (int k = 0; k < T; ++k) {
    projected *= M;
    detail::check_node_cap(projected, node_cap);
  }

  std::vector<Word> nodes;
  nodes.reserve(static_cast<std::size_t>(projected));
  Word w;
  w.symbols.assign(static_cast<std::size_t>(T), 1);
  for (;;) {
    nodes.push_back(w);
    int pos = T - 1;
    while (pos >= 0 && w.symbols[static_cast<std::size_t>(pos)] == M) {
      w.symbols[static_cast<std::size_t>(pos)] = 1;
      --pos;
    }
    if (pos < 0) break;
    ++w.symbols[static_cast<std::size_t>(pos)];
  }

  LabeledGraph skeleton(M, nodes, {}, GraphKind::DeBruijn, T);
  std::vector<LabeledEdge> edges;
  edges.reserve(nodes.size() * static_cast<std::size_t>(M));
  for (int a = 0; a < skeleton.num_nodes(); ++a) {
    const Word& src = skeleton.node(a);
    for (int j = 1; j <= M; ++j) {
      Word dst;
      dst.symbols.reserve(static_cast<std::size_t>(T));
      dst.symbols.push_back(j);
      dst.symbols.insert(dst.symbols.end(), src.symbols.begin(), src.symbols.end() - 1);
      edges.push_back(LabeledEdge{a, skeleton.node_index(dst), j});
    }
  }
  return LabeledGraph(M, std::move(nodes), std::move(edges), GraphKind::DeBruijn, T);
}

}  // namespace switchctl
