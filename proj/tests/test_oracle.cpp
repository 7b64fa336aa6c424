#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "probmarket/oracle.hpp"
#include "test_support.hpp"

using namespace probmarket;
using testsupport::four_node_example;
using testsupport::random_moral_net;

namespace {

Proposition lits(std::initializer_list<Literal> ls) { return Proposition(std::vector<Literal>(ls)); }

}  // namespace

TEST_CASE("joint probability is the chain-rule product") {
  const BayesNet net = four_node_example();
  // All four true: 0.4 * 0.2 * 0.11 * 0.25.
  CHECK(joint_probability(net, Assignment(4, 0b1111)) == Catch::Approx(0.0022).epsilon(1e-12));
  // a4 false flips the last factor to 0.75.
  CHECK(joint_probability(net, Assignment(4, 0b0111)) == Catch::Approx(0.0066).epsilon(1e-12));
}

TEST_CASE("joint probabilities sum to one") {
  const BayesNet net = four_node_example();
  double sum = 0.0;
  for (std::uint32_t bits = 0; bits < 16; ++bits) sum += joint_probability(net, Assignment(4, bits));
  CHECK(sum == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("joint probability rejects partial assignments") {
  const BayesNet net = four_node_example();
  CHECK_THROWS_AS(joint_probability(net, Assignment(3, 0)), Error);
}

TEST_CASE("conjunction probabilities of the example") {
  const BayesNet net = four_node_example();
  // Independent arithmetic route: Pr(a3) as the CPT-weighted sum over the
  // four parent patterns, Pr(a4) via Pr(a3), and the pair via two patterns.
  const double pa1a2 = 0.4 * 0.2, pn1a2 = 0.6 * 0.3, pa1n2 = 0.4 * 0.8, pn1n2 = 0.6 * 0.7;
  const double pa3 = pa1a2 * 0.11 + pn1a2 * 0.22 + pa1n2 * 0.33 + pn1n2 * 0.44;
  const double pa4 = pa3 * 0.25 + (1.0 - pa3) * 0.85;
  const double pn1a3 = pn1a2 * 0.22 + pn1n2 * 0.44;
  CHECK(pa3 == Catch::Approx(0.3388).margin(1e-12));
  CHECK(pa4 == Catch::Approx(0.64672).margin(1e-12));
  CHECK(pn1a3 == Catch::Approx(0.2244).margin(1e-12));

  CHECK(conjunction_probability(net, Proposition::single(2, true)) ==
        Catch::Approx(0.3388).margin(1e-12));
  CHECK(conjunction_probability(net, Proposition::single(3, true)) ==
        Catch::Approx(0.64672).margin(1e-12));
  CHECK(conjunction_probability(net, lits({{0, false}, {2, true}})) ==
        Catch::Approx(0.2244).margin(1e-12));
  CHECK(conjunction_probability(net, Proposition::truth()) == 1.0);
}

TEST_CASE("contradictions cannot form propositions") {
  CHECK_THROWS_AS(lits({{0, true}, {0, false}}), Error);
}

TEST_CASE("full joint table of a single root") {
  BayesNet net;
  net.add_node("a1", {}, {0.4});
  const JointTable t = full_joint_table(net);
  REQUIRE(t.size() == 2);
  CHECK(t.at(Assignment(1, 1)) == Catch::Approx(0.4));
  CHECK(t.at(Assignment(1, 0)) == Catch::Approx(0.6));
}

TEST_CASE("full joint table of the example has 16 entries summing to one") {
  const JointTable t = full_joint_table(four_node_example());
  REQUIRE(t.size() == 16);
  CHECK(t.total() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("independent half-half pair is uniform") {
  BayesNet net;
  net.add_node("x", {}, {0.5});
  net.add_node("y", {}, {0.5});
  const JointTable t = full_joint_table(net);
  REQUIRE(t.size() == 4);
  for (std::uint32_t bits = 0; bits < 4; ++bits) CHECK(t.at_bits(bits) == Catch::Approx(0.25));
}

TEST_CASE("full joint table enforces the enumeration cap") {
  BayesNet net;
  for (int i = 0; i < 5; ++i) net.add_node("n" + std::to_string(i), {}, {0.5});
  CHECK_THROWS_WITH(full_joint_table(net, 4), Catch::Matchers::ContainsSubstring("cap"));
  CHECK_NOTHROW(full_joint_table(net, 5));
}

TEST_CASE("normalization holds on random networks") {
  std::mt19937 rng(41);
  for (int t = 0; t < 25; ++t) {
    const BayesNet net = testsupport::random_dag(rng, 10);
    CHECK(full_joint_table(net).total() == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("marginals of a node and its complement sum to one") {
  std::mt19937 rng(43);
  for (int t = 0; t < 25; ++t) {
    const BayesNet net = random_moral_net(rng);
    for (NodeIndex i = 0; i < net.node_count(); ++i) {
      const double yes = conjunction_probability(net, Proposition::single(i, true));
      const double no = conjunction_probability(net, Proposition::single(i, false));
      CHECK(yes + no == Catch::Approx(1.0).margin(1e-12));
    }
  }
}

TEST_CASE("conjunctions decompose over a refining node") {
  std::mt19937 rng(47);
  for (int t = 0; t < 25; ++t) {
    const BayesNet net = random_moral_net(rng);
    if (net.node_count() < 2) continue;
    const double whole = conjunction_probability(net, Proposition::single(0, true));
    const double with_minor = conjunction_probability(net, lits({{0, true}, {1, true}}));
    const double with_minor_neg = conjunction_probability(net, lits({{0, true}, {1, false}}));
    CHECK(whole == Catch::Approx(with_minor + with_minor_neg).margin(1e-12));
  }
}
