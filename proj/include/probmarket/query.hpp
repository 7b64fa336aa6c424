#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "probmarket/economy.hpp"
#include "probmarket/network.hpp"
#include "probmarket/oracle.hpp"

namespace probmarket {

/// Conditioning claims priced below this cannot be divided by.
inline constexpr double kDegeneratePrice = 1e-9;

/// Price of the exact good for a proposition, if one was compiled.
inline std::optional<double> price_of(const Economy& econ, const PriceVector& prices,
                                      const Proposition& prop) {
  auto id = econ.find_good(prop);
  if (!id) return std::nullopt;
  return prices[*id];
}

/// Rebuild the joint distribution from prices: each node's conditionals are
/// ratios of the node-with-parents claim over the parents claim, chained
/// per assignment. The network must be the one the economy was compiled
/// from (after moralization), so every ratio is a quotient of listed goods.
inline JointTable recover_joint(const Economy& econ, const PriceVector& prices,
                                const BayesNet& net) {
  const std::uint32_t n = net.node_count();
  if (n > 25) throw Error("network too large for joint reconstruction");

  auto good_price = [&](const Proposition& prop) {
    auto p = price_of(econ, prices, prop);
    if (!p)
      throw Error("economy has no good for " + to_string(prop, econ.node_names()) +
                  "; was it compiled from this network?");
    return *p;
  };

  std::vector<double> values(std::size_t{1} << n, 1.0);
  for (std::uint32_t bits = 0; bits < values.size(); ++bits) {
    const Assignment omega(n, bits);
    double p = 1.0;
    for (NodeIndex i = 0; i < n; ++i) {
      const Cpt& cpt = net.node(i).cpt;
      std::vector<Literal> parent_lits;
      for (NodeIndex par : cpt.parents)
        parent_lits.push_back(Literal{par, omega.value(par)});
      const Proposition parents{std::vector<Literal>(parent_lits)};
      parent_lits.push_back(Literal{i, omega.value(i)});
      const Proposition with_child{std::move(parent_lits)};

      const double denom = parents.is_true() ? 1.0 : good_price(parents);
      if (denom < kDegeneratePrice)
        throw Error("cannot recover conditionals: good " +
                    to_string(parents, econ.node_names()) + " is priced near zero");
      p *= good_price(with_child) / denom;
    }
    values[bits] = p;
  }
  return JointTable(n, std::move(values));
}

/// Market probability of a conjunction: the good's own price when it is
/// listed, otherwise the sum of recovered joint entries consistent with it.
inline double conjunction_query(const Economy& econ, const PriceVector& prices,
                                const BayesNet& net, const Proposition& prop) {
  if (prop.is_true()) return 1.0;
  if (auto p = price_of(econ, prices, prop)) return *p;
  return recover_joint(econ, prices, net).sum_matching(prop);
}

/// Pr(target | given) from prices, computed off-line by division.
inline double conditional_query(const Economy& econ, const PriceVector& prices,
                                const BayesNet& net, const Proposition& target,
                                const Proposition& given) {
  const double denom = conjunction_query(econ, prices, net, given);
  if (denom <= kDegeneratePrice)
    throw Error("conditioning claim " + to_string(given, econ.node_names()) +
                " has near-zero market probability");
  const double joint = conjunction_query(econ, prices, net, target.conjoin(given));
  return joint / denom;
}

/// New economy with an explicit good for `prop` and an arbitrageur turning
/// it into `parts`. The parts must be listed goods, pairwise exclusive, and
/// jointly equivalent to prop (verified by enumeration over the mentioned
/// nodes). Re-solving prices the new good at the sum of its parts.
inline Economy add_query_arbitrageur(const Economy& econ, const Proposition& prop,
                                     const std::vector<Proposition>& parts,
                                     double responsiveness = 100.0, double activity_cap = 1e4) {
  if (parts.empty()) throw Error("query arbitrageur needs at least one part");
  for (const Proposition& part : parts)
    if (!econ.find_good(part))
      throw Error("part " + to_string(part, econ.node_names()) + " is not a listed good");

  // Enumerate polarity patterns of every mentioned node; within each, prop
  // must hold exactly when exactly one part holds, and never two parts.
  std::vector<NodeIndex> mentioned;
  auto note = [&](const Proposition& p) {
    for (const Literal& lit : p.literals())
      if (std::find(mentioned.begin(), mentioned.end(), lit.node) == mentioned.end())
        mentioned.push_back(lit.node);
  };
  note(prop);
  for (const Proposition& part : parts) note(part);
  if (mentioned.size() > 25) throw Error("too many nodes mentioned to verify the identity");

  auto holds = [&](const Proposition& p, std::uint32_t pattern) {
    for (const Literal& lit : p.literals()) {
      const auto at = std::find(mentioned.begin(), mentioned.end(), lit.node);
      const auto bit = static_cast<std::uint32_t>(at - mentioned.begin());
      if ((((pattern >> bit) & 1u) != 0) != lit.positive) return false;
    }
    return true;
  };
  for (std::uint32_t pattern = 0; pattern < (1u << mentioned.size()); ++pattern) {
    int live = 0;
    for (const Proposition& part : parts)
      if (holds(part, pattern)) ++live;
    if (live > 1) throw Error("parts are not mutually exclusive");
    if ((live == 1) != holds(prop, pattern))
      throw Error("parts are not jointly equivalent to the target proposition");
  }

  Economy out = econ;
  GoodId lhs;
  if (auto existing = out.find_good(prop)) {
    lhs = *existing;
  } else {
    lhs = out.add_good(prop);
    out.add_notice("query: added good " + out.good_name(lhs));
  }
  ArbitrageProducer producer;
  producer.lhs = lhs;
  for (const Proposition& part : parts) producer.rhs.push_back(*out.find_good(part));
  producer.responsiveness = responsiveness;
  producer.activity_cap = activity_cap;
  out.add_producer(std::move(producer), Provenance{Provenance::Kind::Query, 0, 0});
  return out;
}

// ---------------------------------------------------------------------------
// Query expression grammar: literals `a1` / `!a1`, conjunction `&`, and one
// top-level `|` for conditioning. Whitespace is insignificant. The bare word
// `true` denotes the TRUE proposition unless a node carries that name.

struct ParsedQuery {
  Proposition target;
  std::optional<Proposition> given;
};

namespace detail {

inline Proposition parse_conjunction(std::string_view text, const BayesNet& net) {
  std::vector<Literal> lits;
  bool want_true = false;
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  bool expect_literal = true;
  while (true) {
    skip_ws();
    if (pos == text.size()) break;
    if (!expect_literal) {
      if (text[pos] != '&') throw Error("query syntax: expected '&' before '" +
                                        std::string(text.substr(pos)) + "'");
      ++pos;
      expect_literal = true;
      continue;
    }
    bool positive = true;
    if (text[pos] == '!') {
      positive = false;
      ++pos;
      skip_ws();
    }
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    if (start == pos) throw Error("query syntax: expected a node name at '" +
                                  std::string(text.substr(start)) + "'");
    const std::string name(text.substr(start, pos - start));
    if (auto node = net.find(name)) {
      lits.push_back(Literal{*node, positive});
    } else if (name == "true" && positive) {
      want_true = true;
    } else {
      throw Error("query: unknown node '" + name + "'");
    }
    expect_literal = false;
  }
  if (expect_literal) {
    if (lits.empty() && !want_true) throw Error("query syntax: empty conjunction");
    throw Error("query syntax: dangling operator");
  }
  return Proposition(std::move(lits));  // throws on a & !a
}

}  // namespace detail

inline ParsedQuery parse_query(std::string_view text, const BayesNet& net) {
  std::size_t bar = text.find('|');
  if (bar != std::string_view::npos && text.find('|', bar + 1) != std::string_view::npos)
    throw Error("query syntax: at most one '|' is allowed");
  ParsedQuery q;
  if (bar == std::string_view::npos) {
    q.target = detail::parse_conjunction(text, net);
  } else {
    q.target = detail::parse_conjunction(text.substr(0, bar), net);
    q.given = detail::parse_conjunction(text.substr(bar + 1), net);
  }
  return q;
}

/// Evaluate a parsed query against converged prices.
inline double evaluate_query(const Economy& econ, const PriceVector& prices, const BayesNet& net,
                             const ParsedQuery& q) {
  if (q.given) return conditional_query(econ, prices, net, q.target, *q.given);
  return conjunction_query(econ, prices, net, q.target);
}

}  // namespace probmarket
