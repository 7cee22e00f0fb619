#pragma once

#include <random>
#include <vector>

#include "oobnlab/network.hpp"
#include "oobnlab/oobn.hpp"
#include "oobnlab/sensitivity.hpp"

namespace testsupport {

using oobnlab::Network;

std::vector<std::vector<double>> random_table(std::mt19937_64& rng, std::size_t rows, std::size_t k);

// Source: P -> O.  Filter: In -> Q -> Out, In -> Out.  Mid: src:Source feeding
// f:Filter, plus local M <- f.Out.  Top: mid:Mid feeding g:Filter, plus H <- (mid.M, g.Out).
// Eight variables once flattened, with random state counts and tables.
struct Composed {
  oobnlab::TemplateLibrary library;
  Network hand_built;
};

Composed random_composed(std::mt19937_64& rng);

// A -> B, A -> C, (B, C) -> D, D -> E with fixed tables.
Network five_node();

// The network with one CPT cell set to t and the rest of its row rescaled,
// written out from the original tables.
Network set_parameter(const Network& net, const oobnlab::ParameterRef& ref, double t);

}  // namespace testsupport
