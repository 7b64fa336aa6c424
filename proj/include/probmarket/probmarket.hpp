#pragma once

// Umbrella header: compile a binary-node belief network into an economy of
// contingent claims, solve for competitive-equilibrium prices by iterative
// auction, and read probabilities back off the price system.

#include "probmarket/network.hpp"
#include "probmarket/oracle.hpp"
#include "probmarket/economy.hpp"
#include "probmarket/config.hpp"
#include "probmarket/compiler.hpp"
#include "probmarket/solver.hpp"
#include "probmarket/query.hpp"
#include "probmarket/io.hpp"
