#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "probmarket/network.hpp"
#include "probmarket/oracle.hpp"
#include "test_support.hpp"

using namespace probmarket;
using testsupport::four_node_example;
using testsupport::random_dag;

TEST_CASE("validate accepts the four-node example") {
  CHECK(validate(four_node_example()).empty());
}

TEST_CASE("validate reports a two-cycle") {
  BayesNet net;
  net.add_node("a1");
  net.add_node("a2");
  net.set_cpt(0, {1}, {{0, 0.5}, {1, 0.5}});
  net.set_cpt(1, {0}, {{0, 0.5}, {1, 0.5}});
  auto vs = validate(net);
  REQUIRE_FALSE(vs.empty());
  bool cycle = false;
  for (const auto& v : vs) cycle = cycle || v.rule == "acyclic";
  CHECK(cycle);
}

TEST_CASE("validate reports a wrong row count") {
  BayesNet net;
  net.add_node("a1", {}, {0.4});
  net.add_node("a2", {}, {0.3});
  net.add_node("a3");
  net.set_cpt(2, {0, 1}, {{0, 0.1}, {1, 0.2}, {2, 0.3}});  // 3 rows for 2 parents
  auto vs = validate(net);
  REQUIRE(vs.size() == 1);
  CHECK(vs[0].node == "a3");
  CHECK(vs[0].rule == "row-count");
}

TEST_CASE("validate reports out-of-range probabilities") {
  BayesNet net;
  net.add_node("a", {}, {1.5});
  auto vs = validate(net);
  REQUIRE(vs.size() == 1);
  CHECK(vs[0].rule == "probability-range");
}

TEST_CASE("validate reports duplicate names") {
  BayesNet net;
  net.add_node("a", {}, {0.4});
  net.add_node("a", {}, {0.5});
  auto vs = validate(net);
  REQUIRE(vs.size() == 1);
  CHECK(vs[0].rule == "unique-names");
}

TEST_CASE("topological order of the example is a1..a4") {
  auto order = topological_order(four_node_example());
  CHECK(order == std::vector<NodeIndex>{0, 1, 2, 3});
}

TEST_CASE("topological order of a single node") {
  BayesNet net;
  net.add_node("only", {}, {0.5});
  CHECK(topological_order(net) == std::vector<NodeIndex>{0});
}

TEST_CASE("topological order breaks ties by name") {
  // Diamond with nodes inserted so that b and c are both ready after a;
  // the name tie-break must order b before c.
  BayesNet net;
  net.add_node("a", {}, {0.5});
  net.add_node("c", {"a"}, {0.5, 0.5});
  net.add_node("b", {"a"}, {0.5, 0.5});
  net.add_node("d", {"c", "b"}, {0.5, 0.5, 0.5, 0.5});
  auto order = topological_order(net);
  REQUIRE(order.size() == 4);
  CHECK(net.name(order[0]) == "a");
  CHECK(net.name(order[1]) == "b");
  CHECK(net.name(order[2]) == "c");
  CHECK(net.name(order[3]) == "d");
}

TEST_CASE("topological order names a back edge on cycles") {
  BayesNet net;
  net.add_node("x");
  net.add_node("y");
  net.set_cpt(0, {1}, {{0, 0.5}, {1, 0.5}});
  net.set_cpt(1, {0}, {{0, 0.5}, {1, 0.5}});
  CHECK_THROWS_WITH(topological_order(net), Catch::Matchers::ContainsSubstring("cycle"));
}

TEST_CASE("the example network is moral") {
  CHECK(is_moral(four_node_example()));
}

TEST_CASE("the diamond is not moral") {
  std::mt19937 rng(1);
  CHECK_FALSE(is_moral(testsupport::diamond(rng)));
}

TEST_CASE("forests are moral") {
  std::mt19937 rng(7);
  for (int t = 0; t < 20; ++t) {
    // Random forest: every node has at most one parent.
    std::uniform_real_distribution<double> k(0.05, 0.95);
    const std::uint32_t n = 1 + rng() % 8;
    BayesNet net;
    for (std::uint32_t i = 0; i < n; ++i) {
      std::vector<std::string> parents;
      if (i > 0 && rng() % 3 != 0) parents.push_back("n" + std::to_string(rng() % i));
      std::vector<double> rows(parents.empty() ? 1 : 2);
      for (double& r : rows) r = k(rng);
      net.add_node("n" + std::to_string(i), parents, rows);
    }
    CHECK(is_moral(net));
  }
}

TEST_CASE("moralize leaves the example unchanged") {
  const BayesNet net = four_node_example();
  const BayesNet out = moralize(net);
  REQUIRE(out.node_count() == net.node_count());
  for (NodeIndex i = 0; i < net.node_count(); ++i) {
    CHECK(out.node(i).cpt.parents == net.node(i).cpt.parents);
    CHECK(out.node(i).cpt.rows == net.node(i).cpt.rows);
  }
}

TEST_CASE("moralize marries the diamond and doubles the CPT") {
  std::mt19937 rng(3);
  const BayesNet net = testsupport::diamond(rng);
  const BayesNet out = moralize(net);
  // b -> c added (lower index to higher), so c now conditions on {a, b}.
  REQUIRE(out.node(2).cpt.parents == std::vector<NodeIndex>{0, 1});
  REQUIRE(out.node(2).cpt.rows.size() == 4);
  // Rows replicate the old values across the new parent's polarity: the new
  // parent b occupies bit 1, the old parent a stays at bit 0.
  const auto& old_rows = net.node(2).cpt.rows;
  const auto& new_rows = out.node(2).cpt.rows;
  CHECK(new_rows.at(0) == old_rows.at(0));
  CHECK(new_rows.at(2) == old_rows.at(0));
  CHECK(new_rows.at(1) == old_rows.at(1));
  CHECK(new_rows.at(3) == old_rows.at(1));
  CHECK(is_moral(out));
  CHECK(validate(out).empty());
}

TEST_CASE("moralize is idempotent on random DAGs") {
  std::mt19937 rng(11);
  for (int t = 0; t < 30; ++t) {
    const BayesNet net = random_dag(rng);
    const BayesNet once = moralize(net);
    const BayesNet twice = moralize(once);
    REQUIRE(once.node_count() == twice.node_count());
    for (NodeIndex i = 0; i < once.node_count(); ++i) {
      CHECK(once.node(i).cpt.parents == twice.node(i).cpt.parents);
      CHECK(once.node(i).cpt.rows == twice.node(i).cpt.rows);
    }
  }
}

TEST_CASE("moralize yields moral, valid networks on 100 random DAGs") {
  std::mt19937 rng(17);
  for (int t = 0; t < 100; ++t) {
    const BayesNet out = moralize(random_dag(rng));
    CHECK(is_moral(out));
    CHECK(validate(out).empty());
  }
}

TEST_CASE("moralize preserves the joint distribution") {
  std::mt19937 rng(23);
  for (int t = 0; t < 30; ++t) {
    const BayesNet net = random_dag(rng);
    const BayesNet out = moralize(net);
    const std::uint32_t n = net.node_count();
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
      const Assignment omega(n, bits);
      CHECK(joint_probability(net, omega) ==
            Catch::Approx(joint_probability(out, omega)).margin(1e-12));
    }
  }
}

TEST_CASE("topological order is a permutation respecting every edge") {
  std::mt19937 rng(29);
  for (int t = 0; t < 50; ++t) {
    const BayesNet net = random_dag(rng);
    const auto order = topological_order(net);
    REQUIRE(order.size() == net.node_count());
    std::vector<std::uint32_t> pos(net.node_count());
    std::vector<bool> seen(net.node_count(), false);
    for (std::uint32_t p = 0; p < order.size(); ++p) {
      REQUIRE_FALSE(seen[order[p]]);
      seen[order[p]] = true;
      pos[order[p]] = p;
    }
    for (const auto& [from, to] : net.edges()) CHECK(pos[from] < pos[to]);
  }
}
