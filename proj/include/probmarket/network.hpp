#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace probmarket {

/// Library-wide error type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Position of a node in the network's node list. The list order is the
/// canonical topological labeling: parents always precede children in a
/// valid network.
using NodeIndex = std::uint32_t;

/// A parent-polarity pattern. Bit j (value 1 << j) is the polarity of the
/// j-th parent in the node's parent list; 1 means the parent is true.
using RowMask = std::uint32_t;

/// One literal: a node asserted true (positive) or false.
struct Literal {
  NodeIndex node = 0;
  bool positive = true;

  friend bool operator==(const Literal&, const Literal&) = default;
};

/// Total truth assignment over the nodes of one network, packed as bits
/// (bit i = value of node i). Limited to 32 nodes, far beyond anything
/// the enumeration paths can afford anyway.
class Assignment {
 public:
  Assignment(std::uint32_t node_count, std::uint32_t bits)
      : node_count_(node_count), bits_(bits) {
    if (node_count > 32) throw Error("assignment supports at most 32 nodes");
  }

  std::uint32_t node_count() const { return node_count_; }
  std::uint32_t bits() const { return bits_; }
  bool value(NodeIndex i) const { return (bits_ >> i) & 1u; }

  Assignment with(NodeIndex i, bool v) const {
    std::uint32_t b = v ? (bits_ | (1u << i)) : (bits_ & ~(1u << i));
    return Assignment(node_count_, b);
  }

  bool satisfies(const Literal& lit) const {
    return value(lit.node) == lit.positive;
  }

  friend bool operator==(const Assignment&, const Assignment&) = default;

 private:
  std::uint32_t node_count_;
  std::uint32_t bits_;
};

/// Conditional probability table: Pr(node true | parent pattern) for every
/// pattern over the listed parents. Rows are stored as a map so that
/// malformed tables (missing or surplus rows) remain representable for
/// validate() to report on.
struct Cpt {
  std::vector<NodeIndex> parents;     // ascending node index
  std::map<RowMask, double> rows;     // pattern -> Pr(node | pattern)

  std::uint32_t parent_count() const {
    return static_cast<std::uint32_t>(parents.size());
  }
};

struct Node {
  std::string name;
  Cpt cpt;
};

/// Diagnostic from validate(): which node broke which rule.
struct Violation {
  std::string node;
  std::string rule;
  std::string detail;
};

/// A binary-node belief network. Plain data: construction cannot fail, so
/// that invalid structures can be built and then audited with validate().
class BayesNet {
 public:
  NodeIndex add_node(std::string name) {
    nodes_.push_back(Node{std::move(name), {}});
    return static_cast<NodeIndex>(nodes_.size() - 1);
  }

  /// Convenience: node whose CPT rows are given by mask order
  /// (rows[mask] = Pr(node | pattern mask)). Parents must already exist.
  NodeIndex add_node(std::string name, const std::vector<std::string>& parent_names,
                     const std::vector<double>& rows_by_mask) {
    NodeIndex i = add_node(std::move(name));
    std::vector<NodeIndex> ps;
    for (const auto& pn : parent_names) {
      auto p = find(pn);
      if (!p) throw Error("unknown parent '" + pn + "' for node '" + nodes_[i].name + "'");
      ps.push_back(*p);
    }
    std::map<RowMask, double> rows;
    for (std::size_t m = 0; m < rows_by_mask.size(); ++m)
      rows[static_cast<RowMask>(m)] = rows_by_mask[m];
    set_cpt(i, std::move(ps), std::move(rows));
    return i;
  }

  void set_cpt(NodeIndex i, std::vector<NodeIndex> parents, std::map<RowMask, double> rows) {
    nodes_.at(i).cpt.parents = std::move(parents);
    nodes_.at(i).cpt.rows = std::move(rows);
  }

  std::uint32_t node_count() const { return static_cast<std::uint32_t>(nodes_.size()); }
  const Node& node(NodeIndex i) const { return nodes_.at(i); }
  const std::vector<Node>& nodes() const { return nodes_; }

  std::optional<NodeIndex> find(const std::string& name) const {
    for (NodeIndex i = 0; i < node_count(); ++i)
      if (nodes_[i].name == name) return i;
    return std::nullopt;
  }

  const std::string& name(NodeIndex i) const { return nodes_.at(i).name; }

  /// Every parent->child pair, in (parent, child) order of appearance.
  std::vector<std::pair<NodeIndex, NodeIndex>> edges() const {
    std::vector<std::pair<NodeIndex, NodeIndex>> out;
    for (NodeIndex i = 0; i < node_count(); ++i)
      for (NodeIndex p : nodes_[i].cpt.parents) out.emplace_back(p, i);
    return out;
  }

  bool has_edge(NodeIndex from, NodeIndex to) const {
    const auto& ps = nodes_.at(to).cpt.parents;
    return std::find(ps.begin(), ps.end(), from) != ps.end();
  }

 private:
  std::vector<Node> nodes_;
};

/// Parents-before-children order, ties broken by ascending node name so the
/// result is deterministic regardless of insertion order. Throws naming a
/// back edge if the graph is cyclic.
inline std::vector<NodeIndex> topological_order(const BayesNet& net) {
  const std::uint32_t n = net.node_count();
  std::vector<std::uint32_t> pending(n);
  std::vector<std::vector<NodeIndex>> children(n);
  for (NodeIndex i = 0; i < n; ++i) {
    const auto& ps = net.node(i).cpt.parents;
    pending[i] = static_cast<std::uint32_t>(ps.size());
    for (NodeIndex p : ps)
      if (p < n) children[p].push_back(i);
  }
  auto by_name = [&](NodeIndex a, NodeIndex b) { return net.name(a) > net.name(b); };
  std::priority_queue<NodeIndex, std::vector<NodeIndex>, decltype(by_name)> ready(by_name);
  for (NodeIndex i = 0; i < n; ++i)
    if (pending[i] == 0) ready.push(i);

  std::vector<NodeIndex> order;
  order.reserve(n);
  while (!ready.empty()) {
    NodeIndex i = ready.top();
    ready.pop();
    order.push_back(i);
    for (NodeIndex c : children[i])
      if (--pending[c] == 0) ready.push(c);
  }
  if (order.size() != n) {
    // Name one offending edge: an unplaced node with an unplaced parent.
    std::set<NodeIndex> placed(order.begin(), order.end());
    for (NodeIndex i = 0; i < n; ++i) {
      if (placed.count(i)) continue;
      for (NodeIndex p : net.node(i).cpt.parents) {
        if (p < n && !placed.count(p))
          throw Error("cycle detected: edge " + net.name(p) + " -> " + net.name(i) +
                      " lies on a directed cycle");
      }
    }
    throw Error("cycle detected");
  }
  return order;
}

/// Full invariant audit. Empty result means the network is well formed:
/// unique names, parent lists sorted and in range, node order topological,
/// acyclic, and every CPT carrying exactly one row per parent pattern with
/// probabilities in [0, 1].
inline std::vector<Violation> validate(const BayesNet& net) {
  std::vector<Violation> out;
  const std::uint32_t n = net.node_count();

  std::set<std::string> seen;
  for (NodeIndex i = 0; i < n; ++i) {
    const auto& nd = net.node(i);
    if (nd.name.empty())
      out.push_back({nd.name, "node-name", "empty node name"});
    if (!seen.insert(nd.name).second)
      out.push_back({nd.name, "unique-names", "duplicate node name"});
  }

  for (NodeIndex i = 0; i < n; ++i) {
    const auto& nd = net.node(i);
    const auto& ps = nd.cpt.parents;
    for (NodeIndex p : ps) {
      if (p >= n) {
        out.push_back({nd.name, "parent-range", "parent index out of range"});
      } else if (p == i) {
        out.push_back({nd.name, "self-edge", "node listed as its own parent"});
      } else if (p > i) {
        out.push_back({nd.name, "node-order",
                       "parent " + net.name(p) + " appears after its child"});
      }
    }
    if (!std::is_sorted(ps.begin(), ps.end()))
      out.push_back({nd.name, "parent-order", "parent list not in ascending index order"});
    if (std::adjacent_find(ps.begin(), ps.end()) != ps.end())
      out.push_back({nd.name, "parent-duplicate", "repeated parent"});

    const std::uint32_t q = nd.cpt.parent_count();
    if (q > 25) {
      out.push_back({nd.name, "parent-limit", "more than 25 parents"});
    } else {
      const std::size_t want = std::size_t{1} << q;
      if (nd.cpt.rows.size() != want)
        out.push_back({nd.name, "row-count",
                       "expected " + std::to_string(want) + " rows, found " +
                           std::to_string(nd.cpt.rows.size())});
      for (const auto& [mask, k] : nd.cpt.rows) {
        if (mask >= want)
          out.push_back({nd.name, "row-mask", "row pattern out of range"});
        if (!(k >= 0.0 && k <= 1.0))
          out.push_back({nd.name, "probability-range",
                         "probability " + std::to_string(k) + " outside [0, 1]"});
      }
    }
  }

  try {
    topological_order(net);
  } catch (const Error& e) {
    out.push_back({"", "acyclic", e.what()});
  }
  return out;
}

inline void require_valid(const BayesNet& net) {
  auto vs = validate(net);
  if (vs.empty()) return;
  std::string msg = "invalid network:";
  for (const auto& v : vs)
    msg += "\n  [" + v.rule + "] " + (v.node.empty() ? std::string("<net>") : v.node) +
           ": " + v.detail;
  throw Error(msg);
}

/// True iff every two parents of any node are directly connected (in either
/// direction). Zero- and one-parent nodes are trivially fine, so forests are
/// always moral.
inline bool is_moral(const BayesNet& net) {
  for (NodeIndex i = 0; i < net.node_count(); ++i) {
    const auto& ps = net.node(i).cpt.parents;
    for (std::size_t a = 0; a < ps.size(); ++a)
      for (std::size_t b = a + 1; b < ps.size(); ++b)
        if (!net.has_edge(ps[a], ps[b]) && !net.has_edge(ps[b], ps[a])) return false;
  }
  return true;
}

namespace detail {

// Insert `parent` into node i's parent list, doubling the CPT so the encoded
// distribution is unchanged: the node is independent of the new parent, so
// each old row is replicated for both polarities of the inserted bit.
inline void add_independent_parent(BayesNet& net, NodeIndex i, NodeIndex parent) {
  Cpt cpt = net.node(i).cpt;
  std::size_t pos = 0;
  while (pos < cpt.parents.size() && cpt.parents[pos] < parent) ++pos;
  cpt.parents.insert(cpt.parents.begin() + static_cast<std::ptrdiff_t>(pos), parent);

  std::map<RowMask, double> rows;
  const RowMask low = (RowMask{1} << pos) - 1;
  for (const auto& [mask, k] : cpt.rows) {
    RowMask lo = mask & low;
    RowMask hi = mask >> pos;
    rows[lo | (hi << (pos + 1))] = k;
    rows[lo | (RowMask{1} << pos) | (hi << (pos + 1))] = k;
  }
  net.set_cpt(i, std::move(cpt.parents), std::move(rows));
}

}  // namespace detail

/// Connect every unmarried parent pair, orienting each added edge from the
/// lower to the higher node index so the existing topological labeling stays
/// valid. Added edges give their target node new parents, which can expose
/// new unmarried pairs, so the scan repeats until a fixed point. CPTs of
/// nodes that gain parents are expanded without changing the distribution.
inline BayesNet moralize(const BayesNet& net) {
  require_valid(net);
  BayesNet out = net;
  for (;;) {
    std::set<std::pair<NodeIndex, NodeIndex>> missing;
    for (NodeIndex i = 0; i < out.node_count(); ++i) {
      const auto& ps = out.node(i).cpt.parents;
      for (std::size_t a = 0; a < ps.size(); ++a)
        for (std::size_t b = a + 1; b < ps.size(); ++b) {
          NodeIndex u = std::min(ps[a], ps[b]);
          NodeIndex v = std::max(ps[a], ps[b]);
          if (!out.has_edge(u, v) && !out.has_edge(v, u)) missing.insert({u, v});
        }
    }
    if (missing.empty()) return out;
    for (const auto& [u, v] : missing) {
      if (out.node(v).cpt.parents.size() >= 24)
        throw Error("moralization pushed node '" + out.name(v) + "' past 24 parents");
      detail::add_independent_parent(out, v, u);
    }
  }
}

}  // namespace probmarket
