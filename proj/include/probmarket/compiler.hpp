#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "probmarket/config.hpp"
#include "probmarket/economy.hpp"
#include "probmarket/network.hpp"

namespace probmarket {

// Network-to-market translation. Per node: claims for every polarity
// pattern of the node with its parents (plus the parents alone), one
// consumer per CPT row and polarity of the node, and — where the parent
// pattern claims are coarser than the goods already priced — arbitrageurs
// tying each parent claim to its refinements.

/// CPT rows are clamped into [kAlphaClamp, 1 - kAlphaClamp] when they become
/// consumer coefficients; deterministic rows would pin a price to 0, where
/// demand is singular.
inline constexpr double kAlphaClamp = 1e-6;

namespace detail {

/// Conjunction over `nodes` with polarities drawn from `mask`
/// (bit j = polarity of nodes[j]).
inline Proposition pattern_conjunction(const std::vector<NodeIndex>& nodes, RowMask mask) {
  std::vector<Literal> lits;
  lits.reserve(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j)
    lits.push_back(Literal{nodes[j], ((mask >> j) & 1u) != 0});
  return Proposition(std::move(lits));
}

inline std::vector<Proposition> candidate_goods(const BayesNet& net, NodeIndex i) {
  const auto& ps = net.node(i).cpt.parents;
  const std::uint32_t q = static_cast<std::uint32_t>(ps.size());
  std::vector<NodeIndex> with_child = ps;
  with_child.push_back(i);

  std::vector<Proposition> out;
  for (RowMask m = 0; m < (RowMask{1} << (q + 1)); ++m)
    out.push_back(pattern_conjunction(with_child, m));
  for (RowMask m = 0; m < (RowMask{1} << q); ++m)
    out.push_back(pattern_conjunction(ps, m));
  return out;
}

}  // namespace detail

/// The goods a node introduces: all child-with-parents conjunctions plus the
/// parents-only conjunctions, minus anything an earlier node (or the
/// numeraire) already contributes. Sorted canonically.
inline std::vector<Proposition> goods_for_node(const BayesNet& net, NodeIndex node) {
  std::set<Proposition> existing;
  existing.insert(Proposition::truth());
  for (NodeIndex i = 0; i < node; ++i)
    for (const Proposition& p : detail::candidate_goods(net, i)) existing.insert(p);

  std::set<Proposition> fresh;
  for (const Proposition& p : detail::candidate_goods(net, node))
    if (!existing.count(p)) fresh.insert(p);
  return {fresh.begin(), fresh.end()};
}

/// Consumer blueprint: propositions rather than good ids, so generation is
/// independent of economy assembly.
struct ConsumerSpec {
  Proposition hi;
  Proposition lo;
  double alpha = 0.5;
  Provenance src;
  bool clamped = false;
};

/// Two consumers per CPT row: one pricing the node-true conjunction at
/// alpha = k times the parent claim, one pricing the node-false conjunction
/// at 1 - k. Roots condition on TRUE.
inline std::vector<ConsumerSpec> consumers_for_node(const BayesNet& net, NodeIndex node) {
  const Cpt& cpt = net.node(node).cpt;
  const std::uint32_t q = cpt.parent_count();
  std::vector<ConsumerSpec> out;
  for (RowMask m = 0; m < (RowMask{1} << q); ++m) {
    auto it = cpt.rows.find(m);
    if (it == cpt.rows.end())
      throw Error("node '" + net.name(node) + "' missing CPT row");
    const double k = it->second;
    const Proposition parents = detail::pattern_conjunction(cpt.parents, m);

    auto clamp_alpha = [](double a, bool& flag) {
      if (a < kAlphaClamp) { flag = true; return kAlphaClamp; }
      if (a > 1.0 - kAlphaClamp) { flag = true; return 1.0 - kAlphaClamp; }
      return a;
    };

    ConsumerSpec direct;
    direct.hi = parents.conjoin(Proposition::single(node, true));
    direct.lo = parents;
    direct.alpha = clamp_alpha(k, direct.clamped);
    direct.src = {Provenance::Kind::ConditionalDirect, node, m};
    out.push_back(std::move(direct));

    ConsumerSpec complement;
    complement.hi = parents.conjoin(Proposition::single(node, false));
    complement.lo = parents;
    complement.alpha = clamp_alpha(1.0 - k, complement.clamped);
    complement.src = {Provenance::Kind::ConditionalComplement, node, m};
    out.push_back(std::move(complement));
  }
  return out;
}

/// Nodes needed to refine this node's parent claims down to claims that are
/// already priced: the parents of the highest-indexed parent that are not
/// parents of the node itself. Empty for roots and whenever the parent set
/// is already self-contained.
inline std::vector<NodeIndex> w_set(const BayesNet& net, NodeIndex node) {
  const auto& ps = net.node(node).cpt.parents;
  if (ps.empty()) return {};
  const NodeIndex highest = ps.back();
  const auto& gps = net.node(highest).cpt.parents;
  std::vector<NodeIndex> out;
  for (NodeIndex g : gps)
    if (std::find(ps.begin(), ps.end(), g) == ps.end()) out.push_back(g);
  return out;
}

struct ProducerSpec {
  Proposition lhs;
  std::vector<Proposition> rhs;
  Provenance src;
};

/// One arbitrageur per parent pattern when the W set is non-empty: the
/// parent claim equals the sum of its refinements over all W assignments.
/// In a moral network every refinement is a claim introduced by the
/// highest parent, so the right-hand goods always exist.
inline std::vector<ProducerSpec> producers_for_node(const BayesNet& net, NodeIndex node) {
  const auto& ps = net.node(node).cpt.parents;
  const std::vector<NodeIndex> w = w_set(net, node);
  if (w.empty()) return {};
  const std::uint32_t q = static_cast<std::uint32_t>(ps.size());
  std::vector<ProducerSpec> out;
  for (RowMask m = 0; m < (RowMask{1} << q); ++m) {
    ProducerSpec spec;
    spec.lhs = detail::pattern_conjunction(ps, m);
    for (RowMask wm = 0; wm < (RowMask{1} << w.size()); ++wm)
      spec.rhs.push_back(spec.lhs.conjoin(detail::pattern_conjunction(w, wm)));
    spec.src = {Provenance::Kind::Identity, node, m};
    out.push_back(std::move(spec));
  }
  return out;
}

struct CompileResult {
  Economy economy;
  BayesNet network;  // the network actually compiled (moralized if needed)
  bool moralized = false;
};

/// Full translation. Non-moral inputs are moralized first (with a notice)
/// unless auto_moralize is off, in which case they are rejected.
inline CompileResult compile(const BayesNet& input, const SolverConfig& config = {}) {
  config.validate();
  require_valid(input);

  CompileResult result;
  result.network = input;
  if (!is_moral(input)) {
    if (!config.auto_moralize)
      throw Error("network is not moral and auto-moralization is disabled");
    result.network = moralize(input);
    result.moralized = true;
  }
  const BayesNet& net = result.network;

  if (net.node_count() > config.max_nodes)
    throw Error("network has " + std::to_string(net.node_count()) +
                " nodes, above the configured cap of " + std::to_string(config.max_nodes));
  for (NodeIndex i = 0; i < net.node_count(); ++i)
    if (net.node(i).cpt.parent_count() > config.max_parents)
      throw Error("node '" + net.name(i) + "' has " +
                  std::to_string(net.node(i).cpt.parent_count()) +
                  " parents after moralization, above the configured cap of " +
                  std::to_string(config.max_parents));

  Economy& econ = result.economy;
  std::vector<std::string> names;
  for (const Node& nd : net.nodes()) names.push_back(nd.name);
  econ.set_node_names(std::move(names));
  if (result.moralized) econ.add_notice("moralization: input network was moralized");

  econ.add_good(Proposition::truth(), /*numeraire=*/true);
  std::set<Proposition> known{Proposition::truth()};
  for (NodeIndex i = 0; i < net.node_count(); ++i) {
    std::set<Proposition> fresh;
    for (const Proposition& p : detail::candidate_goods(net, i))
      if (!known.count(p)) fresh.insert(p);
    for (const Proposition& p : fresh) {
      econ.add_good(p);
      known.insert(p);
    }
  }

  auto good_id = [&](const Proposition& p, const char* what) {
    auto id = econ.find_good(p);
    if (!id)
      throw Error(std::string("compile bug: missing good for ") + what + " " +
                  to_string(p, econ.node_names()));
    return *id;
  };

  for (NodeIndex i = 0; i < net.node_count(); ++i) {
    for (const ConsumerSpec& spec : consumers_for_node(net, i)) {
      CesConsumer c;
      c.good_hi = good_id(spec.hi, "consumer claim");
      c.good_lo = good_id(spec.lo, "conditioning claim");
      c.alpha = spec.alpha;
      c.sigma = config.sigma;
      c.endowment = config.endowment;
      econ.add_consumer(c, spec.src);
      if (spec.clamped)
        econ.add_notice("clamp: CPT row " + std::to_string(spec.src.row) + " of node '" +
                        net.name(i) + "' clamped into [" + std::to_string(kAlphaClamp) + ", 1 - " +
                        std::to_string(kAlphaClamp) + "]");
    }
    for (const ProducerSpec& spec : producers_for_node(net, i)) {
      ArbitrageProducer p;
      p.lhs = good_id(spec.lhs, "identity left side");
      for (const Proposition& r : spec.rhs) {
        auto id = econ.find_good(r);
        if (!id)
          throw Error("identity for node '" + net.name(i) + "' references missing good " +
                      to_string(r, econ.node_names()) + "; is the network moral?");
        p.rhs.push_back(*id);
      }
      p.activity_cap = config.y_max;
      p.responsiveness = config.beta;
      econ.add_producer(std::move(p), spec.src);
    }
  }
  return result;
}

}  // namespace probmarket
