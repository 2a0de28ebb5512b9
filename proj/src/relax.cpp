#include "fibra/relax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fibra/error.hpp"
#include "fibra/kernels.hpp"

namespace fibra {

void RelaxConfig::validate() const {
  if (!(damping >= 0)) throw ConfigError("relax damping must be >= 0");
  if (!(tolerance > 0)) throw ConfigError("relax tolerance must be > 0");
  if (max_iterations < 1) throw ConfigError("relax max_iterations must be >= 1");
  if (!(dt_safety > 0) || dt_safety > 1)
    throw ConfigError("relax dt_safety must be in (0, 1]");
  if (!(density_scale > 0)) throw ConfigError("relax density_scale must be > 0");
}

namespace {

// fictitious mass: lumped, then normalized so the heaviest node carries
// density_scale
void setup_mass(const FiberNetwork& net, double density_scale, RveStateView& s) {
  const std::vector<double>& lump = net.node_lumping();
  double max_lump = 0;
  for (int i = 0; i < net.n_nodes(); ++i) {
    if (!(lump[i] > 0))
      throw ConfigError("node " + std::to_string(i) +
                        " has no incident fibers (singular mass)");
    max_lump = std::max(max_lump, lump[i]);
  }
  const DofMap& map = net.dof_map();
  const double scale = density_scale / max_lump;
  for (int i = 0; i < net.n_nodes(); ++i) {
    const double m = lump[i] * scale;
    for (int k = 0; k < 3; ++k) {
      const std::int32_t p = map.packed_of_dof[3 * i + k];
      s.mass[p] = m;
      s.inv_mass[p] = 1.0 / m;
    }
  }
}

std::vector<double> reduced_mass_l0(const FiberNetwork& net, const RveStateView& s) {
  std::vector<double> mred(net.n_fibers());
  const std::vector<std::int32_t>& fd = net.fiber_packed_dofs();
  for (int f = 0; f < net.n_fibers(); ++f) {
    const double ma = s.mass[fd[6 * f]];
    const double mb = s.mass[fd[6 * f + 3]];
    mred[f] = ma * mb / (ma + mb) * net.rest_length(f);
  }
  return mred;
}

double strain_energy(const FiberNetwork& net, const FiberLaw& law,
                     std::span<const double> u) {
  const std::vector<double>& ref = net.packed_ref_coords();
  const std::vector<std::int32_t>& fd = net.fiber_packed_dofs();
  double e = 0;
  for (int f = 0; f < net.n_fibers(); ++f) {
    const std::int32_t* p = &fd[6 * f];
    const double dx = (ref[p[3]] + u[p[3]]) - (ref[p[0]] + u[p[0]]);
    const double dy = (ref[p[4]] + u[p[4]]) - (ref[p[1]] + u[p[1]]);
    const double dz = (ref[p[5]] + u[p[5]]) - (ref[p[2]] + u[p[2]]);
    const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
    const double l0 = net.rest_length(f);
    e += law.energy(net.fiber_ea(f), len / l0, l0);
  }
  return e;
}

}  // namespace

double stable_dt(const FiberNetwork& net, const FiberLaw& law,
                 std::span<const double> mass, double dt_safety) {
  if (!(dt_safety > 0)) throw ConfigError("dt_safety must be > 0");
  const std::vector<std::int32_t>& fd = net.fiber_packed_dofs();
  double dtsq = std::numeric_limits<double>::infinity();
  for (int f = 0; f < net.n_fibers(); ++f) {
    const double l0 = net.rest_length(f);
    if (!(l0 > 0)) throw SolverError("zero-length fiber in stable_dt");
    const double ma = mass[fd[6 * f]];
    const double mb = mass[fd[6 * f + 3]];
    if (!(ma > 0) || !(mb > 0)) throw ConfigError("stable_dt requires positive mass");
    const double k = law.tangent(net.fiber_ea(f), 1.0);
    dtsq = std::min(dtsq, ma * mb / (ma + mb) * l0 / k);
  }
  return dt_safety * std::sqrt(dtsq);
}

RelaxReport relax_solve(const FiberNetwork& net, const FiberLaw& law, const Def3& f,
                        const RelaxConfig& cfg, RveStateView state, WarmStart warm) {
  cfg.validate();
  law.validate();
  const kernels::Kernels& k = kernels::active();
  const int n_dof = state.n_dof();
  const int n_free = state.n_free;
  if (n_dof != net.n_dof() || n_free != net.n_free())
    throw ConfigError("state layout does not match the network");

  setup_mass(net, cfg.density_scale, state);
  if (warm == WarmStart::zero_interior)
    k.fill(static_cast<std::size_t>(n_free), 0.0, state.u.data());
  k.fill(state.v.size(), 0.0, state.v.data());
  k.fill(state.a.size(), 0.0, state.a.data());
  k.fill(state.f_damp.size(), 0.0, state.f_damp.data());
  apply_affine_bc(net, f, state);

  const std::vector<double> mred_l0 = reduced_mass_l0(net, state);
  const double force_floor = law.ea_scale * net.max_ea() * 1e-12;

  double* u = state.u.data();
  double* v = state.v.data();
  double* a = state.a.data();
  double* fi = state.f_int.data();
  double* fdmp = state.f_damp.data();
  const std::size_t nf = static_cast<std::size_t>(n_free);
  const std::size_t nfix = static_cast<std::size_t>(n_dof - n_free);

  double min_dtsq = 0;
  internal_forces_cfl(net, law, state.u, state.f_int, mred_l0.data(), &min_dtsq);
  double residual = std::sqrt(k.norm2_sq(nf, fi));
  double react = std::sqrt(k.norm2_sq(nfix, fi + n_free));
  double eps_eff = cfg.tolerance * std::max(react, force_floor);

  RelaxReport rep;
  rep.eps_eff = eps_eff;
  rep.residual = residual;

  double e0 = 0, dissipated = 0, drift = 0;
  if (cfg.energy_check) {
    e0 = strain_energy(net, law, state.u);
    if (cfg.energy_trace) cfg.energy_trace->push_back(e0);
  }

  if (residual <= eps_eff) {
    rep.converged = true;
    if (state.converged) *state.converged = 1;
    rep.kinetic_fraction = 0.0;
    return rep;
  }

  k.accel(nf, fi, state.mass.data(), state.inv_mass.data(), cfg.damping, v, fdmp, a);

  std::int64_t n = 0;
  while (n < cfg.max_iterations) {
    ++n;
    const double dt = cfg.dt_safety * std::sqrt(min_dtsq);
    if (!std::isfinite(dt) || !(dt > 0))
      throw SolverError("dynamic relaxation produced a bad time step at iteration " +
                        std::to_string(n));
    if (state.t) *state.t += dt;
    k.axpy(nf, 0.5 * dt, a, v);  // first partial velocity update
    k.axpy(nf, dt, v, u);        // displacement update
    internal_forces_cfl(net, law, state.u, state.f_int, mred_l0.data(), &min_dtsq);
    residual = std::sqrt(k.norm2_sq(nf, fi));
    if (!std::isfinite(residual))
      throw SolverError("dynamic relaxation diverged at iteration " +
                        std::to_string(n));
    react = std::sqrt(k.norm2_sq(nfix, fi + n_free));
    eps_eff = cfg.tolerance * std::max(react, force_floor);
    k.accel(nf, fi, state.mass.data(), state.inv_mass.data(), cfg.damping, v, fdmp, a);
    if (cfg.energy_check) dissipated += dt * k.dot(nf, fdmp, v);
    k.axpy(nf, 0.5 * dt, a, v);  // second partial velocity update
    if (cfg.energy_check) {
      const double ke = 0.5 * k.weighted_sq(nf, state.mass.data(), v);
      const double se = strain_energy(net, law, state.u);
      const double total = ke + se + dissipated;
      drift = std::max(drift, std::abs(total - e0));
      if (cfg.energy_trace) cfg.energy_trace->push_back(total);
    }
    rep.dt = dt;
    if (residual <= eps_eff) {
      rep.converged = true;
      break;
    }
  }

  rep.iterations = n;
  rep.residual = residual;
  rep.eps_eff = eps_eff;
  rep.energy_drift = drift;
  const double ke = 0.5 * k.weighted_sq(nf, state.mass.data(), v);
  const double se = strain_energy(net, law, state.u);
  rep.kinetic_fraction = (ke + se) > 0 ? ke / (ke + se) : 0.0;
  if (state.iters) *state.iters += n;
  if (state.converged) *state.converged = rep.converged ? 1 : 0;
  return rep;
}

std::pair<RveState, RelaxReport> relax_solve(const FiberNetwork& net,
                                             const FiberLaw& law, const Def3& f,
                                             const RelaxConfig& cfg) {
  RveState state(net);
  RelaxReport rep = relax_solve(net, law, f, cfg, state.view(), WarmStart::zero_interior);
  return {std::move(state), rep};
}

}  // namespace fibra
