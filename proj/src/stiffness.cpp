#include "fibra/stiffness.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "fibra/error.hpp"

namespace fibra {

void StiffnessConfig::validate() const {
  if (!(fd_rel_step > 0) || fd_rel_step >= 1e-2)
    throw ConfigError("stiffness fd_rel_step must be in (0, 1e-2)");
}

Mandel66 material_stiffness_from_probes(const SymTensor3& stretch,
                                        const SymTensor3& base_pk2,
                                        const std::array<SymTensor3, 6>& probe_pk2,
                                        double h) {
  const Mandel6 base = mandel(base_pk2);
  Mandel66 p;
  for (int q = 0; q < 6; ++q) {
    const Mandel6 col = mandel(probe_pk2[q]);
    for (int i = 0; i < 6; ++i) p(i, q) = (col[i] - base[i]) / h;
  }
  const Mandel66 mt = mandel_M_of_U(stretch).matmul(probing_matrix());
  Eigen::Matrix<double, 6, 6> mte, pe;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      mte(i, j) = mt(i, j);
      pe(i, j) = p(i, j);
    }
  Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(mte.transpose());
  if (!lu.isInvertible())
    throw SolverError("probing system [M][T] is singular (degenerate stretch)");
  // ([M][T])^T [A]^T = [P]^T
  const Eigen::Matrix<double, 6, 6> at = lu.solve(pe.transpose());
  Mandel66 a;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) a(i, j) = at(j, i);
  return a;
}

Mandel66 material_stiffness_fd(
    const std::function<SymTensor3(const SymTensor3&)>& pk2_of_stretch,
    const SymTensor3& stretch, double h) {
  const SymTensor3 base = pk2_of_stretch(stretch);
  const std::array<SymTensor3, 6> dirs = probing_directions();
  std::array<SymTensor3, 6> probes;
  for (int q = 0; q < 6; ++q) probes[q] = pk2_of_stretch(stretch + dirs[q] * h);
  return material_stiffness_from_probes(stretch, base, probes, h);
}

namespace {

Def3 sym_to_def(const SymTensor3& s) { return s.full(); }

struct BaseSolve {
  SymTensor3 stretch;
  Def3 rotation;
  SymTensor3 sigma_u;  // Cauchy stress in the unrotated configuration
  SymTensor3 pk2;
  double asymmetry = 0;
  RelaxReport report;
};

BaseSolve solve_base(const FiberNetwork& net, const FiberLaw& law, const Def3& f,
                     const RelaxConfig& relax_cfg, RveStateView state,
                     WarmStart warm) {
  BaseSolve b;
  const PolarDecomposition pd = polar_decompose(f);
  b.stretch = pd.stretch;
  b.rotation = pd.rotation;
  const Def3 fu = sym_to_def(b.stretch);
  b.report = relax_solve(net, law, fu, relax_cfg, state, warm);
  if (!b.report.converged)
    throw SolverError("base relaxation did not converge (residual " +
                      std::to_string(b.report.residual) + ")");
  const HomogenizedStress hs = homogenized_stress(net, state, fu, net.box());
  b.sigma_u = hs.sigma;
  b.asymmetry = hs.asymmetry;
  b.pk2 = pull_back_stress(b.sigma_u, fu);
  return b;
}

// six probe solves around the base state; the state is restored afterwards
std::array<SymTensor3, 6> probe_pk2s(const FiberNetwork& net, const FiberLaw& law,
                                     const BaseSolve& base, const RelaxConfig& relax_cfg,
                                     const StiffnessConfig& cfg, RveStateView state,
                                     double h, ResponseStats* stats) {
  const std::array<SymTensor3, 6> dirs = probing_directions();
  std::array<SymTensor3, 6> out;
  RveState scratch_owner(net);
  RveStateView scratch = scratch_owner.view();
  for (int q = 0; q < 6; ++q) {
    const SymTensor3 u_probe = base.stretch + dirs[q] * h;
    const Def3 fq = sym_to_def(u_probe);
    if (!(fq.det() > 0))
      throw SolverError("probe " + std::to_string(q) + " leaves det(U + hT) <= 0");
    if (cfg.reuse_warm)
      std::copy(state.u.begin(), state.u.end(), scratch.u.begin());
    RelaxReport rep;
    try {
      rep = relax_solve(net, law, fq, relax_cfg, scratch,
                        cfg.reuse_warm ? WarmStart::reuse : WarmStart::zero_interior);
    } catch (const SolverError& e) {
      if (stats) stats->failed_probe = q;
      throw SolverError("probe solve " + std::to_string(q) + " failed: " + e.what());
    }
    if (stats) {
      ++stats->solves;
      stats->relax_iterations += rep.iterations;
    }
    if (!rep.converged) {
      if (stats) stats->failed_probe = q;
      throw SolverError("probe solve " + std::to_string(q) +
                        " did not converge (residual " +
                        std::to_string(rep.residual) + ")");
    }
    const HomogenizedStress hs = homogenized_stress(net, scratch, fq, net.box());
    out[q] = pull_back_stress(hs.sigma, fq);
  }
  return out;
}

double probe_step(const StiffnessConfig& cfg, const SymTensor3& stretch) {
  return cfg.fd_rel_step * stretch.frobenius();
}

}  // namespace

SymTensor3 second_pk_stress(const FiberNetwork& net, const FiberLaw& law,
                            const Def3& f, const RelaxConfig& relax_cfg) {
  RveState state(net);
  const BaseSolve b = solve_base(net, law, f, relax_cfg, state.view(),
                                 WarmStart::zero_interior);
  return b.pk2;
}

Mandel66 material_stiffness_A(const FiberNetwork& net, const FiberLaw& law,
                              const Def3& f, const RelaxConfig& relax_cfg,
                              const StiffnessConfig& cfg) {
  cfg.validate();
  RveState state(net);
  const BaseSolve b = solve_base(net, law, f, relax_cfg, state.view(),
                                 WarmStart::zero_interior);
  const double h = probe_step(cfg, b.stretch);
  ResponseStats stats;
  const std::array<SymTensor3, 6> probes =
      probe_pk2s(net, law, b, relax_cfg, cfg, state.view(), h, &stats);
  return material_stiffness_from_probes(b.stretch, b.pk2, probes, h);
}

Response constitutive_response(const FiberNetwork& net, const FiberLaw& law,
                               const Def3& f, const RelaxConfig& relax_cfg,
                               const StiffnessConfig& cfg, RveStateView state) {
  cfg.validate();
  Response r;
  const BaseSolve b = solve_base(net, law, f, relax_cfg, state, WarmStart::reuse);
  r.stats.solves = 1;
  r.stats.relax_iterations = b.report.iterations;
  r.base_report = b.report;
  r.pk2 = b.pk2;
  r.stress_asymmetry = b.asymmetry;

  const double h = probe_step(cfg, b.stretch);
  const std::array<SymTensor3, 6> probes =
      probe_pk2s(net, law, b, relax_cfg, cfg, state, h, &r.stats);
  r.material_a = material_stiffness_from_probes(b.stretch, b.pk2, probes, h);
  r.spatial_c = push_forward_stiffness(r.material_a, f);

  // rotate the unrotated-configuration Cauchy stress into the frame of F
  const Def3 rt = b.rotation.transpose();
  r.sigma = SymTensor3::from_full(matmul(matmul(b.rotation, b.sigma_u.full()), rt));
  return r;
}

Response constitutive_response(const FiberNetwork& net, const FiberLaw& law,
                               const Def3& f, const RelaxConfig& relax_cfg,
                               const StiffnessConfig& cfg) {
  RveState state(net);
  return constitutive_response(net, law, f, relax_cfg, cfg, state.view());
}

}  // namespace fibra
