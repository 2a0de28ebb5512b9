#pragma once

#include <Eigen/Sparse>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fibra/macro_mesh.hpp"
#include "fibra/stiffness.hpp"
#include "fibra/tensor.hpp"

namespace fibra {

struct NewtonConfig {
  double rel_tol = 1e-9;
  int max_iterations = 25;
  int increments = 10;
  int max_bisections = 12;
  double linear_tol = 1e-10;
  int dense_threshold = 500;  // dofs below this use a direct solve

  void validate() const;
};

// free-first DOF numbering induced by the Dirichlet constraints
struct DofNumbering {
  int n_free = 0;
  std::vector<std::int32_t> free_of_dof;  // -1 where constrained
  std::vector<std::uint8_t> constrained;
};

DofNumbering build_numbering(const MacroMesh& mesh,
                             const std::vector<DirichletBc>& dirichlet);

// constant shape-function gradients and volume of a linear tet
struct TetGeom {
  std::array<Vec3, 4> grad;
  double volume = 0;
};

// Gradients in the configuration given by coords; throws KinematicsError
// on inverted elements.
TetGeom b_matrix(const MacroMesh::Tet& tet, const std::vector<Vec3>& coords);

struct PointResponse {
  SymTensor3 sigma;
  Mandel66 spatial_c;
};

struct ProviderResult {
  std::vector<PointResponse> responses;
  std::vector<int> failed_points;
  std::int64_t microscale_iterations = 0;
  int solves_per_point = 0;
};

// Constitutive source for one response per integration point (one point
// per linear tet). Receives the total deformation gradient.
class ConstitutiveProvider {
 public:
  virtual ~ConstitutiveProvider() = default;
  virtual ProviderResult respond(std::span<const Def3> deformation) = 0;
  // microstructure diagnostics, when the material has any
  virtual std::optional<double> orientation(int point, const Vec3& ref_dir) const {
    return std::nullopt;
  }
};

struct Assembly {
  Eigen::SparseMatrix<double> stiffness;  // free x free, material + geometric
  Eigen::VectorXd residual;               // f_int - f_ext on free DOFs
};

Assembly assemble(const MacroMesh& mesh, const DofNumbering& numbering,
                  std::span<const PointResponse> responses,
                  const Eigen::VectorXd& f_ext_free);

// dead-load traction vector on free DOFs from reference face geometry
Eigen::VectorXd assemble_tractions(const MacroMesh& mesh, const DofNumbering& numbering,
                                   const std::vector<NeumannBc>& neumann, double ramp);

// K x = rhs with K SPD; direct below dense_threshold, diagonally
// preconditioned CG above, direct fallback on CG breakdown.
Eigen::VectorXd linear_solve(const Eigen::SparseMatrix<double>& stiffness,
                             const Eigen::VectorXd& rhs, const NewtonConfig& cfg);

struct IncrementRecord {
  double ramp = 0;
  int iterations = 0;
  std::vector<double> residual_history;  // per Newton iteration
  std::vector<Def3> deformation;         // per element at convergence
  std::vector<SymTensor3> stress;
  std::vector<double> orientation;  // per element P2, NaN when not provided
  std::map<std::string, Vec3> reactions;  // per Dirichlet node set
};

struct SolveHistory {
  std::vector<IncrementRecord> increments;
  std::vector<Vec3> displacement;  // final nodal u
  int total_bisections = 0;
};

// Incremental Newton with adaptive bisection on failure. Dirichlet data
// ramps linearly from 0 to its final value; mesh coordinates are updated
// in place (updated-Lagrangian).
SolveHistory newton_solve(MacroMesh& mesh, const BcSet& bcs,
                          ConstitutiveProvider& provider, const NewtonConfig& cfg,
                          const Vec3& p2_axis = {1, 0, 0});

}  // namespace fibra
