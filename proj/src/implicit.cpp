#include "fibra/implicit.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "fibra/error.hpp"
#include "fibra/kernels.hpp"

namespace fibra {

namespace {

// large-displacement truss tangent on free DOFs:
// k = (dN/dl) d (x) d + (N/l)(I - d (x) d) per fiber, assembled with signs
Eigen::MatrixXd assemble_tangent(const FiberNetwork& net, const FiberLaw& law,
                                 std::span<const double> u) {
  const int nf = net.n_free();
  Eigen::MatrixXd kmat = Eigen::MatrixXd::Zero(nf, nf);
  const std::vector<double>& ref = net.packed_ref_coords();
  const std::vector<std::int32_t>& fd = net.fiber_packed_dofs();
  for (int f = 0; f < net.n_fibers(); ++f) {
    const std::int32_t* p = &fd[6 * f];
    double d[3];
    for (int k = 0; k < 3; ++k)
      d[k] = (ref[p[3 + k]] + u[p[3 + k]]) - (ref[p[k]] + u[p[k]]);
    const double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    const double l0 = net.rest_length(f);
    const double stretch = len / l0;
    const double ea = net.fiber_ea(f);
    const double kax = law.tangent(ea, stretch) / l0;
    const double geo = law.force(ea, stretch) / len;
    double ke[3][3];
    for (int i = 0; i < 3; ++i) {
      const double di = d[i] / len;
      for (int j = 0; j < 3; ++j) {
        const double dj = d[j] / len;
        ke[i][j] = (kax - geo) * di * dj + (i == j ? geo : 0.0);
      }
    }
    // blocks (a,a) (b,b) +ke, (a,b) (b,a) -ke, free rows/cols only
    for (int i = 0; i < 3; ++i) {
      const int pa_i = p[i], pb_i = p[3 + i];
      for (int j = 0; j < 3; ++j) {
        const int pa_j = p[j], pb_j = p[3 + j];
        if (pa_i < nf && pa_j < nf) kmat(pa_i, pa_j) += ke[i][j];
        if (pb_i < nf && pb_j < nf) kmat(pb_i, pb_j) += ke[i][j];
        if (pa_i < nf && pb_j < nf) kmat(pa_i, pb_j) -= ke[i][j];
        if (pb_i < nf && pa_j < nf) kmat(pb_i, pa_j) -= ke[i][j];
      }
    }
  }
  return kmat;
}

}  // namespace

std::pair<RveState, ImplicitReport> implicit_solve(const FiberNetwork& net,
                                                   const FiberLaw& law, const Def3& f,
                                                   const ImplicitConfig& cfg) {
  law.validate();
  RveState state(net);
  RveStateView s = state.view();
  apply_affine_bc(net, f, s);
  const int nf = net.n_free();
  const kernels::Kernels& k = kernels::active();
  const double force_floor = law.ea_scale * net.max_ea() * 1e-12;

  ImplicitReport rep;
  internal_forces(net, law, s.u, s.f_int);
  double residual = std::sqrt(k.norm2_sq(nf, s.f_int.data()));
  double react = std::sqrt(k.norm2_sq(s.f_int.size() - nf, s.f_int.data() + nf));
  rep.eps_eff = cfg.tolerance * std::max(react, force_floor);
  rep.residual = residual;
  if (residual <= rep.eps_eff || nf == 0) {
    rep.converged = true;
    if (s.converged) *s.converged = 1;
    return {std::move(state), rep};
  }

  Eigen::VectorXd du(nf);
  std::vector<double> u_trial(s.u.begin(), s.u.end());
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    const Eigen::MatrixXd kmat = assemble_tangent(net, law, s.u);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(kmat);
    const Eigen::VectorXd diag = ldlt.vectorD();
    const double dmax = diag.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !(dmax > 0) ||
        diag.cwiseAbs().minCoeff() < 1e-14 * dmax)
      throw SolverError(
          "implicit oracle: singular tangent stiffness (sub-isostatic network)");
    Eigen::Map<const Eigen::VectorXd> fv(s.f_int.data(), nf);
    du = ldlt.solve(fv);
    if (!du.allFinite())
      throw SolverError("implicit oracle: linear solve failed");

    // backtracking on the residual norm
    double alpha = 1.0;
    double new_res = 0;
    for (int ls = 0; ls < 8; ++ls) {
      for (int i = 0; i < nf; ++i) u_trial[i] = s.u[i] - alpha * du[i];
      std::copy(s.u.begin() + nf, s.u.end(), u_trial.begin() + nf);
      internal_forces(net, law, u_trial, s.f_int);
      new_res = std::sqrt(k.norm2_sq(nf, s.f_int.data()));
      if (new_res < residual || alpha < 1.0 / 64) break;
      alpha *= 0.5;
    }
    std::copy(u_trial.begin(), u_trial.begin() + nf, s.u.begin());
    residual = new_res;
    react = std::sqrt(k.norm2_sq(s.f_int.size() - nf, s.f_int.data() + nf));
    rep.eps_eff = cfg.tolerance * std::max(react, force_floor);
    rep.iterations = it;
    rep.residual = residual;
    if (residual <= rep.eps_eff) {
      rep.converged = true;
      break;
    }
  }
  if (!rep.converged)
    throw SolverError("implicit oracle did not converge in " +
                      std::to_string(cfg.max_iterations) + " iterations");
  if (s.converged) *s.converged = 1;
  return {std::move(state), rep};
}

}  // namespace fibra
