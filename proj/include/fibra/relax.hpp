#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fibra/network.hpp"
#include "fibra/tensor.hpp"

namespace fibra {

// Damped explicit dynamic relaxation. Pseudo-time, mass, and damping are
// fictitious; only the converged static state matters. The residual
// tolerance is relative: eps_eff = tolerance * max(||f_react||_2, EA*1e-12).
struct RelaxConfig {
  double damping = 2.0;  // c, mass-weighted viscous
  double tolerance = 1e-6;
  std::int64_t max_iterations = 500000;
  double dt_safety = 0.8;  // s in (0, 1]
  double density_scale = 1.0;
  bool energy_check = false;
  // when energy_check is set, per-iteration KE+SE+dissipated totals land here
  std::vector<double>* energy_trace = nullptr;

  void validate() const;
};

struct RelaxReport {
  std::int64_t iterations = 0;
  double residual = 0;   // final free-DOF L2 force norm
  double eps_eff = 0;    // threshold in force units actually applied
  double kinetic_fraction = 0;  // KE/(KE+SE) at exit
  double dt = 0;         // last stable step used
  bool converged = false;
  double energy_drift = 0;  // max |E_n - E_0| when energy_check is on
};

// CFL step at stretch 1: s * min over fibers of sqrt(m_red * l0 / k),
// m_red the reduced endpoint-pair mass, k the law tangent at stretch 1.
double stable_dt(const FiberNetwork& net, const FiberLaw& law,
                 std::span<const double> mass, double dt_safety);

enum class WarmStart { zero_interior, reuse };

// Drives the RVE to static equilibrium under the affine boundary
// condition of F. State vectors are updated in place; mass is
// (re)normalized so the heaviest node carries density_scale.
RelaxReport relax_solve(const FiberNetwork& net, const FiberLaw& law, const Def3& f,
                        const RelaxConfig& cfg, RveStateView state,
                        WarmStart warm = WarmStart::reuse);

std::pair<RveState, RelaxReport> relax_solve(const FiberNetwork& net,
                                             const FiberLaw& law, const Def3& f,
                                             const RelaxConfig& cfg);

}  // namespace fibra
