#pragma once

#include <cstdint>
#include <string>

#include "probmarket/network.hpp"

namespace probmarket {

/// Price search interval for market clearing. Target prices are
/// probabilities, so [1e-6, 1] covers every well-formed economy.
struct Bracket {
  double lo = 1e-6;
  double hi = 1.0;
};

enum class SweepMode {
  Sequential,        // Gauss-Seidel: each clearing sees the latest prices
  SnapshotParallel,  // all clearings see the round-start snapshot
};

inline std::string to_string(SweepMode m) {
  return m == SweepMode::Sequential ? "sequential" : "snapshot-parallel";
}

struct SolverConfig {
  // Agent instantiation.
  double sigma = 50.0;
  double endowment = 10.0;
  double beta = 100.0;  // producer responsiveness
  double y_max = 1e4;   // producer activity cap

  // Auction.
  double tol = 1e-3;  // convergence tolerance on max per-round price change
  int max_rounds = 10000;
  double init_price = 0.5;
  Bracket bracket{};
  SweepMode mode = SweepMode::Sequential;
  double snapshot_damping = 0.5;  // commit step toward the clearing price in snapshot mode

  // Compilation guards; the good count grows with nodes * 2^parents.
  std::uint32_t max_nodes = 20;
  std::uint32_t max_parents = 10;
  bool auto_moralize = true;

  void validate() const {
    if (!(sigma > 1.0)) throw Error("config: sigma must exceed 1");
    if (!(endowment > 0.0)) throw Error("config: endowment must be positive");
    if (!(beta > 0.0)) throw Error("config: beta must be positive");
    if (!(y_max > 0.0)) throw Error("config: y_max must be positive");
    if (!(tol > 0.0)) throw Error("config: tol must be positive");
    if (max_rounds < 1) throw Error("config: max_rounds must be at least 1");
    if (!(bracket.lo > 0.0) || !(bracket.hi > bracket.lo))
      throw Error("config: bracket must satisfy 0 < lo < hi");
    if (!(init_price >= bracket.lo && init_price <= bracket.hi))
      throw Error("config: init_price must lie within the bracket");
    if (!(snapshot_damping > 0.0 && snapshot_damping <= 1.0))
      throw Error("config: snapshot_damping must be in (0, 1]");
  }
};

}  // namespace probmarket
