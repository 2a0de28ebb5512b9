#pragma once

#include <utility>

#include "fibra/network.hpp"
#include "fibra/tensor.hpp"

namespace fibra {

// Implicit Newton solver on the static truss equations; the verification
// counterpart to dynamic relaxation. Only applicable where the assembled
// tangent stays nonsingular (stabilized networks, small strains).
struct ImplicitConfig {
  double tolerance = 1e-10;  // relative, same eps_eff rule as relax
  int max_iterations = 60;
};

struct ImplicitReport {
  int iterations = 0;
  double residual = 0;
  double eps_eff = 0;
  bool converged = false;
};

std::pair<RveState, ImplicitReport> implicit_solve(const FiberNetwork& net,
                                                   const FiberLaw& law, const Def3& f,
                                                   const ImplicitConfig& cfg = {});

}  // namespace fibra
