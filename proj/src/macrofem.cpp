#include "fibra/macrofem.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "fibra/error.hpp"

namespace fibra {

void NewtonConfig::validate() const {
  if (!(rel_tol > 0)) throw ConfigError("newton rel_tol must be > 0");
  if (max_iterations < 1) throw ConfigError("newton max_iterations must be >= 1");
  if (increments < 1) throw ConfigError("newton increments must be >= 1");
  if (max_bisections < 0) throw ConfigError("newton max_bisections must be >= 0");
  if (!(linear_tol > 0)) throw ConfigError("newton linear_tol must be > 0");
}

DofNumbering build_numbering(const MacroMesh& mesh,
                             const std::vector<DirichletBc>& dirichlet) {
  DofNumbering num;
  num.constrained.assign(mesh.n_dof(), 0);
  for (const DirichletBc& bc : dirichlet) {
    const auto& set = mesh.node_set(bc.node_set);
    for (std::int32_t node : set)
      for (int k = 0; k < 3; ++k)
        if (bc.affine || bc.value[k]) num.constrained[3 * node + k] = 1;
  }
  num.free_of_dof.assign(mesh.n_dof(), -1);
  int slot = 0;
  for (int d = 0; d < mesh.n_dof(); ++d)
    if (!num.constrained[d]) num.free_of_dof[d] = slot++;
  num.n_free = slot;
  return num;
}

TetGeom b_matrix(const MacroMesh::Tet& tet, const std::vector<Vec3>& coords) {
  const Vec3& x0 = coords[tet.n[0]];
  Eigen::Matrix3d jac;  // columns are edge vectors
  for (int c = 0; c < 3; ++c) {
    const Vec3& xc = coords[tet.n[c + 1]];
    for (int r = 0; r < 3; ++r) jac(r, c) = xc[r] - x0[r];
  }
  const double det = jac.determinant();
  if (!(det > 0))
    throw KinematicsError("inverted tetrahedron (volume " +
                          std::to_string(det / 6.0) + ")");
  const Eigen::Matrix3d jinv = jac.inverse();
  TetGeom g;
  g.volume = det / 6.0;
  // rows of J^-1 are gradients of the three vertex coordinates functions
  for (int a = 0; a < 3; ++a)
    g.grad[a + 1] = {jinv(a, 0), jinv(a, 1), jinv(a, 2)};
  g.grad[0] = {-g.grad[1][0] - g.grad[2][0] - g.grad[3][0],
               -g.grad[1][1] - g.grad[2][1] - g.grad[3][1],
               -g.grad[1][2] - g.grad[2][2] - g.grad[3][2]};
  return g;
}

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

// 6x12 Mandel strain-displacement matrix of a linear tet
void mandel_b(const TetGeom& g, double b[6][12]) {
  for (int p = 0; p < 6; ++p)
    for (int c = 0; c < 12; ++c) b[p][c] = 0;
  for (int node = 0; node < 4; ++node) {
    const Vec3& gn = g.grad[node];
    for (int ax = 0; ax < 3; ++ax) {
      const int col = 3 * node + ax;
      b[ax][col] += gn[ax];
      // shear rows (23, 13, 12) carry the sqrt(2) Mandel weight
      static const int pair[3][2] = {{1, 2}, {0, 2}, {0, 1}};
      for (int sh = 0; sh < 3; ++sh) {
        const int i = pair[sh][0], j = pair[sh][1];
        double v = 0;
        if (ax == i) v += 0.5 * gn[j];
        if (ax == j) v += 0.5 * gn[i];
        b[3 + sh][col] += kSqrt2 * v;
      }
    }
  }
}

Def3 element_deformation(const MacroMesh& mesh, const MacroMesh::Tet& tet,
                         const TetGeom& ref_geom) {
  Def3 f;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int a = 0; a < 4; ++a)
        s += mesh.coords[tet.n[a]][i] * ref_geom.grad[a][j];
      f(i, j) = s;
    }
  return f;
}

}  // namespace

Assembly assemble(const MacroMesh& mesh, const DofNumbering& numbering,
                  std::span<const PointResponse> responses,
                  const Eigen::VectorXd& f_ext_free) {
  if (static_cast<int>(responses.size()) != mesh.n_elements())
    throw ConfigError("one response per element is required");
  Assembly out;
  out.residual = Eigen::VectorXd::Zero(numbering.n_free);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(mesh.n_elements()) * 78);

  double b[6][12];
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const MacroMesh::Tet& tet = mesh.tets[e];
    const PointResponse& resp = responses[e];
    const Mandel6 sig = mandel(resp.sigma);
    for (int i = 0; i < 6; ++i)
      if (!std::isfinite(sig[i]))
        throw SolverError("non-finite stress response at element " +
                          std::to_string(e));
    TetGeom g;
    try {
      g = b_matrix(tet, mesh.coords);
    } catch (const KinematicsError& err) {
      throw KinematicsError("element " + std::to_string(e) + ": " + err.what());
    }
    mandel_b(g, b);
    const double vol = g.volume;

    // internal force: V * B^T sigma
    double fe[12];
    for (int c = 0; c < 12; ++c) {
      double s = 0;
      for (int p = 0; p < 6; ++p) s += b[p][c] * sig[p];
      fe[c] = vol * s;
    }

    // material part V * B^T C B
    double cb[6][12];
    for (int p = 0; p < 6; ++p)
      for (int c = 0; c < 12; ++c) {
        double s = 0;
        for (int q = 0; q < 6; ++q) s += resp.spatial_c(p, q) * b[q][c];
        cb[p][c] = s;
      }
    double ke[12][12];
    for (int r = 0; r < 12; ++r)
      for (int c = 0; c < 12; ++c) {
        double s = 0;
        for (int p = 0; p < 6; ++p) s += b[p][r] * cb[p][c];
        ke[r][c] = vol * s;
      }

    // geometric part: delta_ij * V * gradI . sigma . gradJ
    const Def3 sf = resp.sigma.full();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double gsg = 0;
        for (int p = 0; p < 3; ++p)
          for (int q = 0; q < 3; ++q) gsg += g.grad[i][p] * sf(p, q) * g.grad[j][q];
        gsg *= vol;
        for (int ax = 0; ax < 3; ++ax) ke[3 * i + ax][3 * j + ax] += gsg;
      }

    for (int a = 0; a < 4; ++a)
      for (int ax = 0; ax < 3; ++ax) {
        const int row_dof = 3 * tet.n[a] + ax;
        const std::int32_t rf = numbering.free_of_dof[row_dof];
        if (rf < 0) continue;
        out.residual[rf] += fe[3 * a + ax];
        for (int bnode = 0; bnode < 4; ++bnode)
          for (int bx = 0; bx < 3; ++bx) {
            const std::int32_t cf = numbering.free_of_dof[3 * tet.n[bnode] + bx];
            if (cf < 0) continue;
            trips.emplace_back(rf, cf, ke[3 * a + ax][3 * bnode + bx]);
          }
      }
  }
  out.residual -= f_ext_free;
  out.stiffness.resize(numbering.n_free, numbering.n_free);
  out.stiffness.setFromTriplets(trips.begin(), trips.end());
  if (!out.residual.allFinite())
    throw SolverError("non-finite assembled residual");
  return out;
}

Eigen::VectorXd assemble_tractions(const MacroMesh& mesh, const DofNumbering& numbering,
                                   const std::vector<NeumannBc>& neumann, double ramp) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(numbering.n_free);
  for (const NeumannBc& bc : neumann) {
    auto it = mesh.face_sets.find(bc.face_set);
    if (it == mesh.face_sets.end())
      throw ConfigError("unknown face set '" + bc.face_set + "'");
    for (const auto& face : it->second) {
      const Vec3& a = mesh.ref_coords[face[0]];
      const Vec3& b = mesh.ref_coords[face[1]];
      const Vec3& c = mesh.ref_coords[face[2]];
      const Vec3 ab{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
      const Vec3 ac{c[0] - a[0], c[1] - a[1], c[2] - a[2]};
      const Vec3 cr{ab[1] * ac[2] - ab[2] * ac[1], ab[2] * ac[0] - ab[0] * ac[2],
                    ab[0] * ac[1] - ab[1] * ac[0]};
      const double area = 0.5 * norm3(cr);
      for (int n = 0; n < 3; ++n)
        for (int ax = 0; ax < 3; ++ax) {
          const std::int32_t fd = numbering.free_of_dof[3 * face[n] + ax];
          if (fd >= 0) f[fd] += ramp * bc.traction[ax] * area / 3.0;
        }
    }
  }
  return f;
}

Eigen::VectorXd linear_solve(const Eigen::SparseMatrix<double>& stiffness,
                             const Eigen::VectorXd& rhs, const NewtonConfig& cfg) {
  const int n = static_cast<int>(stiffness.rows());
  if (n == 0) return Eigen::VectorXd();
  auto check_singular_dense = [&](const Eigen::LDLT<Eigen::MatrixXd>& ldlt) {
    const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
    const double dmax = d.maxCoeff();
    if (ldlt.info() != Eigen::Success || !(dmax > 0) ||
        d.minCoeff() < 1e-13 * dmax)
      throw SolverError("linear solve failed: singular or indefinite stiffness");
  };
  if (n < cfg.dense_threshold) {
    const Eigen::MatrixXd dense(stiffness);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(dense);
    check_singular_dense(ldlt);
    return ldlt.solve(rhs);
  }
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(cfg.linear_tol);
  cg.setMaxIterations(20L * n);
  cg.compute(stiffness);
  Eigen::VectorXd x = cg.solve(rhs);
  if (cg.info() == Eigen::Success && x.allFinite()) return x;
  // direct fallback
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(stiffness);
  if (ldlt.info() != Eigen::Success)
    throw SolverError("linear solve failed: singular or indefinite stiffness");
  x = ldlt.solve(rhs);
  if (!x.allFinite())
    throw SolverError("linear solve failed: singular or indefinite stiffness");
  return x;
}

namespace {

void apply_dirichlet(MacroMesh& mesh, const std::vector<DirichletBc>& dirichlet,
                     double ramp) {
  for (const DirichletBc& bc : dirichlet) {
    const auto& set = mesh.node_set(bc.node_set);
    for (std::int32_t node : set) {
      const Vec3& x0 = mesh.ref_coords[node];
      if (bc.affine) {
        const Vec3 fx = bc.affine->apply(x0);
        for (int k = 0; k < 3; ++k)
          mesh.coords[node][k] = x0[k] + ramp * (fx[k] - x0[k]);
      } else {
        for (int k = 0; k < 3; ++k)
          if (bc.value[k]) mesh.coords[node][k] = x0[k] + ramp * *bc.value[k];
      }
    }
  }
}

std::map<std::string, Vec3> set_reactions(const MacroMesh& mesh,
                                          const std::vector<DirichletBc>& dirichlet,
                                          const DofNumbering& numbering,
                                          std::span<const PointResponse> responses) {
  // reactions = assembled internal forces at constrained DOFs
  std::vector<double> f_int(mesh.n_dof(), 0.0);
  double b[6][12];
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const MacroMesh::Tet& tet = mesh.tets[e];
    const TetGeom g = b_matrix(tet, mesh.coords);
    mandel_b(g, b);
    const Mandel6 sig = mandel(responses[e].sigma);
    for (int a = 0; a < 4; ++a)
      for (int ax = 0; ax < 3; ++ax) {
        double s = 0;
        for (int p = 0; p < 6; ++p) s += b[p][3 * a + ax] * sig[p];
        f_int[3 * tet.n[a] + ax] += g.volume * s;
      }
  }
  std::map<std::string, Vec3> out;
  for (const DirichletBc& bc : dirichlet) {
    Vec3 r{};
    for (std::int32_t node : mesh.node_set(bc.node_set))
      for (int k = 0; k < 3; ++k)
        if (numbering.constrained[3 * node + k]) r[k] += f_int[3 * node + k];
    out[bc.node_set] = r;
  }
  return out;
}

struct IterationOutcome {
  bool converged = false;
  int iterations = 0;
  std::vector<double> residual_history;
  std::vector<Def3> deformation;
  std::vector<PointResponse> responses;
};

}  // namespace

SolveHistory newton_solve(MacroMesh& mesh, const BcSet& bcs,
                          ConstitutiveProvider& provider, const NewtonConfig& cfg,
                          const Vec3& p2_axis) {
  cfg.validate();
  mesh.validate();
  const DofNumbering numbering = build_numbering(mesh, bcs.dirichlet);
  if (numbering.n_free == mesh.n_dof() && bcs.dirichlet.empty() &&
      bcs.neumann.empty())
    throw ConfigError("no boundary conditions given");

  // reference gradients, fixed for the whole solve
  std::vector<TetGeom> ref_geom(mesh.n_elements());
  {
    MacroMesh tmp = mesh;
    tmp.coords = tmp.ref_coords;
    for (int e = 0; e < mesh.n_elements(); ++e)
      ref_geom[e] = b_matrix(mesh.tets[e], tmp.ref_coords);
  }

  SolveHistory history;
  std::vector<Vec3> last_converged = mesh.coords;
  double ramp = 0;
  double step = 1.0 / cfg.increments;
  const double min_step = step / std::pow(2.0, cfg.max_bisections);
  const double full_step = step;

  auto run_increment = [&](double target) -> IterationOutcome {
    IterationOutcome out;
    apply_dirichlet(mesh, bcs.dirichlet, target);
    const Eigen::VectorXd f_ext =
        assemble_tractions(mesh, numbering, bcs.neumann, target);
    double ref_norm = -1;
    for (int it = 1; it <= cfg.max_iterations; ++it) {
      out.iterations = it;
      out.deformation.resize(mesh.n_elements());
      for (int e = 0; e < mesh.n_elements(); ++e)
        out.deformation[e] = element_deformation(mesh, mesh.tets[e], ref_geom[e]);
      ProviderResult pr = provider.respond(out.deformation);
      if (!pr.failed_points.empty())
        throw SolverError("microscale failed at " +
                          std::to_string(pr.failed_points.size()) +
                          " integration points (first: point " +
                          std::to_string(pr.failed_points.front()) + ")");
      const Assembly asmbl = assemble(mesh, numbering, pr.responses, f_ext);
      const double rnorm = asmbl.residual.norm();
      out.residual_history.push_back(rnorm);
      out.responses = std::move(pr.responses);
      if (ref_norm < 0)
        ref_norm = std::max({rnorm, f_ext.norm(),
                             std::numeric_limits<double>::min()});
      if (rnorm <= cfg.rel_tol * ref_norm) {
        out.converged = true;
        return out;
      }
      const Eigen::VectorXd du = linear_solve(asmbl.stiffness, -asmbl.residual, cfg);
      for (int node = 0; node < mesh.n_nodes(); ++node)
        for (int k = 0; k < 3; ++k) {
          const std::int32_t fd = numbering.free_of_dof[3 * node + k];
          if (fd >= 0) mesh.coords[node][k] += du[fd];
        }
    }
    return out;
  };

  while (ramp < 1.0 - 1e-12) {
    const double target = std::min(1.0, ramp + step);
    bool ok = false;
    IterationOutcome out;
    try {
      out = run_increment(target);
      ok = out.converged;
    } catch (const SolverError&) {
      ok = false;
    } catch (const KinematicsError&) {
      ok = false;
    }
    if (!ok) {
      mesh.coords = last_converged;
      step *= 0.5;
      ++history.total_bisections;
      if (step < min_step)
        throw SolverError("macro Newton failed to converge at ramp " +
                          std::to_string(target) +
                          " after the bisection floor was reached");
      continue;
    }
    ramp = target;
    last_converged = mesh.coords;
    step = std::min(full_step, 2.0 * step);

    IncrementRecord rec;
    rec.ramp = ramp;
    rec.iterations = out.iterations;
    rec.residual_history = std::move(out.residual_history);
    rec.deformation = std::move(out.deformation);
    rec.stress.resize(mesh.n_elements());
    rec.orientation.resize(mesh.n_elements(),
                           std::numeric_limits<double>::quiet_NaN());
    for (int e = 0; e < mesh.n_elements(); ++e) {
      rec.stress[e] = out.responses[e].sigma;
      if (auto p2 = provider.orientation(e, p2_axis)) rec.orientation[e] = *p2;
    }
    rec.reactions = set_reactions(mesh, bcs.dirichlet, numbering, out.responses);
    history.increments.push_back(std::move(rec));
  }

  history.displacement.resize(mesh.n_nodes());
  for (int n = 0; n < mesh.n_nodes(); ++n)
    for (int k = 0; k < 3; ++k)
      history.displacement[n][k] = mesh.coords[n][k] - mesh.ref_coords[n][k];
  return history;
}

}  // namespace fibra
