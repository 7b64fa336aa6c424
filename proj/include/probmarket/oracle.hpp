#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "probmarket/economy.hpp"
#include "probmarket/network.hpp"

namespace probmarket {

// Exact inference by brute-force enumeration. Deliberately the simplest
// possible implementation: this is the reference every market price is
// judged against, so it must be beyond suspicion, not fast.

namespace detail {

inline RowMask row_mask_for(const Cpt& cpt, const Assignment& omega) {
  RowMask m = 0;
  for (std::size_t j = 0; j < cpt.parents.size(); ++j)
    if (omega.value(cpt.parents[j])) m |= RowMask{1} << j;
  return m;
}

}  // namespace detail

/// Chain-rule product of the CPT entries selected by a total assignment.
inline double joint_probability(const BayesNet& net, const Assignment& omega) {
  if (omega.node_count() != net.node_count())
    throw Error("assignment covers " + std::to_string(omega.node_count()) +
                " nodes, network has " + std::to_string(net.node_count()));
  double p = 1.0;
  for (NodeIndex i = 0; i < net.node_count(); ++i) {
    const Cpt& cpt = net.node(i).cpt;
    auto it = cpt.rows.find(detail::row_mask_for(cpt, omega));
    if (it == cpt.rows.end())
      throw Error("node '" + net.name(i) + "' has no CPT row for the parent pattern");
    p *= omega.value(i) ? it->second : 1.0 - it->second;
  }
  return p;
}

/// Probability of a conjunction: sum of the joint over all assignments
/// consistent with it. The TRUE proposition yields 1 without enumeration.
inline double conjunction_probability(const BayesNet& net, const Proposition& prop) {
  if (prop.is_true()) return 1.0;
  for (const Literal& lit : prop.literals())
    if (lit.node >= net.node_count())
      throw Error("proposition mentions a node outside the network");
  const std::uint32_t n = net.node_count();
  if (n > 25) throw Error("network too large for enumeration");
  double sum = 0.0;
  for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
    Assignment omega(n, bits);
    if (prop.matches(omega)) sum += joint_probability(net, omega);
  }
  return sum;
}

/// All 2^n joint values, indexed by assignment bits.
class JointTable {
 public:
  JointTable(std::uint32_t node_count, std::vector<double> values)
      : node_count_(node_count), values_(std::move(values)) {}

  std::uint32_t node_count() const { return node_count_; }
  std::size_t size() const { return values_.size(); }
  double at(const Assignment& omega) const { return values_.at(omega.bits()); }
  double at_bits(std::uint32_t bits) const { return values_.at(bits); }

  double total() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s;
  }

  /// Sum of entries whose assignments satisfy the proposition.
  double sum_matching(const Proposition& prop) const {
    double s = 0.0;
    for (std::uint32_t bits = 0; bits < values_.size(); ++bits)
      if (prop.matches(Assignment(node_count_, bits))) s += values_[bits];
    return s;
  }

 private:
  std::uint32_t node_count_;
  std::vector<double> values_;
};

inline JointTable full_joint_table(const BayesNet& net, std::uint32_t max_nodes = 20) {
  const std::uint32_t n = net.node_count();
  if (n > max_nodes)
    throw Error("network has " + std::to_string(n) + " nodes, above the enumeration cap of " +
                std::to_string(max_nodes) + "; raise max_nodes to override");
  std::vector<double> values;
  values.resize(std::size_t{1} << n);
  for (std::uint32_t bits = 0; bits < values.size(); ++bits)
    values[bits] = joint_probability(net, Assignment(n, bits));
  return JointTable(n, std::move(values));
}

}  // namespace probmarket
