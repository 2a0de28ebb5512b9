#pragma once

#include <cstdint>
#include <functional>

#include "fibra/network.hpp"
#include "fibra/relax.hpp"
#include "fibra/tensor.hpp"

namespace fibra {

struct StiffnessConfig {
  double fd_rel_step = 1e-5;  // h scaled by ||U||_F
  bool reuse_warm = true;     // probes warm-start from the base state

  void validate() const;
};

struct ResponseStats {
  int solves = 0;  // relaxation solves performed (base + probes)
  std::int64_t relax_iterations = 0;
  int failed_probe = -1;
};

struct Response {
  SymTensor3 sigma;   // Cauchy, current configuration of F
  Mandel66 spatial_c; // pushed-forward tangent
  SymTensor3 pk2;     // second Piola-Kirchhoff at the base state
  Mandel66 material_a;
  double stress_asymmetry = 0;
  RelaxReport base_report;
  ResponseStats stats;
};

// Probing core of the tangent computation: given Pi at the base stretch
// and at the six probes U + h T_q, assemble [P] and solve
// ([M][T])^T [A]^T = [P]^T. Independent of how Pi was produced.
Mandel66 material_stiffness_from_probes(const SymTensor3& stretch,
                                        const SymTensor3& base_pk2,
                                        const std::array<SymTensor3, 6>& probe_pk2,
                                        double h);

// Same probing pipeline against an arbitrary stress function Pi(U);
// used with analytic materials and in verification.
Mandel66 material_stiffness_fd(
    const std::function<SymTensor3(const SymTensor3&)>& pk2_of_stretch,
    const SymTensor3& stretch, double h);

// Pi at the converged base state. The rotation of F is dropped before
// solving (Pi is rotation invariant); one relaxation solve.
SymTensor3 second_pk_stress(const FiberNetwork& net, const FiberLaw& law,
                            const Def3& f, const RelaxConfig& relax_cfg);

// A = dPi/dE by six probe solves around an already-converged base state.
Mandel66 material_stiffness_A(const FiberNetwork& net, const FiberLaw& law,
                              const Def3& f, const RelaxConfig& relax_cfg,
                              const StiffnessConfig& cfg);

// Full constitutive response at F: exactly 1 base + 6 probe solves.
// The state carries warm data across calls and ends at the base solution.
Response constitutive_response(const FiberNetwork& net, const FiberLaw& law,
                               const Def3& f, const RelaxConfig& relax_cfg,
                               const StiffnessConfig& cfg, RveStateView state);

Response constitutive_response(const FiberNetwork& net, const FiberLaw& law,
                               const Def3& f, const RelaxConfig& relax_cfg,
                               const StiffnessConfig& cfg);

}  // namespace fibra
