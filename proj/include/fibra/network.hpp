#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fibra/tensor.hpp"

namespace fibra {

// Axis-aligned RVE box centered at the origin, half extent per axis.
struct RveBox {
  double half = 0.5;  // unit cube default
  double volume() const { return 8.0 * half * half * half; }
};

struct Fiber {
  std::int32_t a = 0, b = 0;
  double area = 1.0;
  double modulus = 1.0;
};

// Axial force law of a single fiber as a function of stretch. Force is
// zero at stretch 1 and the tangent there is EA for every law.
struct FiberLaw {
  enum class Kind { linear, exponential };
  Kind kind = Kind::linear;
  double ea_scale = 1.0;      // global multiplier on per-fiber area*modulus
  double nonlinearity = 1.2;  // B, exponential law only
  bool buckling_off = false;  // zero force below stretch 1

  double force(double ea, double stretch) const;    // N(lambda)
  double tangent(double ea, double stretch) const;  // dN/dlambda
  double energy(double ea, double stretch, double rest_length) const;
  void validate() const;
};

FiberLaw::Kind parse_law_kind(const std::string& name);

// Free-first DOF reordering: free DOFs occupy [0, n_free), the fixed
// (boundary) block is the contiguous tail.
struct DofMap {
  int n_nodes = 0;
  int n_free = 0;
  std::vector<std::int32_t> packed_of_dof;  // node*3+axis -> packed slot
  std::vector<std::int32_t> dof_of_packed;
  int n_dof() const { return 3 * n_nodes; }
  int n_fixed() const { return n_dof() - n_free; }
};

// Immutable fiber-network RVE: geometry, connectivity, per-fiber section
// data, boundary classification, and the packed DOF layout derived from it.
class FiberNetwork {
 public:
  FiberNetwork(std::vector<Vec3> coords, std::vector<Fiber> fibers,
               RveBox box = {}, double tol_bnd = 1e-6);

  int n_nodes() const { return static_cast<int>(coords_.size()); }
  int n_fibers() const { return static_cast<int>(fibers_.size()); }
  int n_dof() const { return 3 * n_nodes(); }
  int n_free() const { return dof_map_.n_free; }

  const std::vector<Vec3>& coords() const { return coords_; }
  const std::vector<Fiber>& fibers() const { return fibers_; }
  const RveBox& box() const { return box_; }
  double boundary_tol() const { return tol_bnd_; }
  bool is_boundary(int node) const { return boundary_mask_[node] != 0; }
  const std::vector<std::int32_t>& boundary_nodes() const { return boundary_nodes_; }
  const DofMap& dof_map() const { return dof_map_; }

  // reference coordinates laid out in packed DOF order (3N)
  const std::vector<double>& packed_ref_coords() const { return packed_ref_; }
  // packed DOF slots of both endpoints per fiber (6 per fiber)
  const std::vector<std::int32_t>& fiber_packed_dofs() const { return fiber_dofs_; }
  double rest_length(int fiber) const { return rest_length_[fiber]; }
  const std::vector<double>& rest_lengths() const { return rest_length_; }
  double fiber_ea(int fiber) const;  // area*modulus, before law scaling
  double max_ea() const { return max_ea_; }
  // per-node sum of half rest length * area over incident fibers
  const std::vector<double>& node_lumping() const { return node_lump_; }

  static FiberNetwork read_file(const std::filesystem::path& path,
                                RveBox box = {}, double tol_bnd = 1e-6);
  void write_file(const std::filesystem::path& path) const;

 private:
  std::vector<Vec3> coords_;
  std::vector<Fiber> fibers_;
  RveBox box_;
  double tol_bnd_ = 1e-6;
  std::vector<std::uint8_t> boundary_mask_;
  std::vector<std::int32_t> boundary_nodes_;
  DofMap dof_map_;
  std::vector<double> packed_ref_;
  std::vector<std::int32_t> fiber_dofs_;
  std::vector<double> rest_length_;
  std::vector<double> node_lump_;
  double max_ea_ = 0;
};

// Non-owning view of one RVE's packed state vectors. All spans have
// length 3N in free-first order; t/iters/converged live with the owner.
struct RveStateView {
  std::span<double> u, v, a, f_int, f_damp, mass, inv_mass;
  double* t = nullptr;
  std::int64_t* iters = nullptr;
  std::uint8_t* converged = nullptr;
  int n_free = 0;

  int n_dof() const { return static_cast<int>(u.size()); }
  std::span<double> free(std::span<double> x) const { return x.subspan(0, n_free); }
  std::span<double> fixed(std::span<double> x) const { return x.subspan(n_free); }
};

// Owning single-RVE state.
class RveState {
 public:
  explicit RveState(const FiberNetwork& net);
  RveStateView view();
  double pseudo_time() const { return t_; }
  std::int64_t iterations() const { return iters_; }
  bool is_converged() const { return converged_ != 0; }

 private:
  std::vector<double> u_, v_, a_, f_int_, f_damp_, mass_, inv_mass_;
  double t_ = 0;
  std::int64_t iters_ = 0;
  std::uint8_t converged_ = 0;
  int n_free_ = 0;
};

// u = (F - I) X on every boundary node; zeroes fixed velocities and
// accelerations; interior untouched. Marks the state unconverged.
void apply_affine_bc(const FiberNetwork& net, const Def3& f, RveStateView state);

// Nodal internal forces for the packed displacement field (includes
// contributions onto fixed DOFs; those are the reactions). Overwrites f_int.
void internal_forces(const FiberNetwork& net, const FiberLaw& law,
                     std::span<const double> u, std::span<double> f_int);

// Same force loop, fused with the per-iteration CFL bound: writes the
// minimum over fibers of mred_l0[f] / k_t(f) where k_t is the current
// tangent stiffness floored at its stretch-1 value.
void internal_forces_cfl(const FiberNetwork& net, const FiberLaw& law,
                         std::span<const double> u, std::span<double> f_int,
                         const double* mred_l0, double* min_dtsq);

// density_scale * (sum of half rest length * area of incident fibers)
// per node, replicated to 3 DOFs, packed order. Throws on isolated nodes.
std::vector<double> lumped_mass(const FiberNetwork& net, double density_scale);

struct HomogenizedStress {
  SymTensor3 sigma;
  double asymmetry = 0;  // ||sigma - sigma^T|| / ||sigma|| before symmetrizing
};

// Boundary-traction moment form: sigma_ij = (1/(J V)) sum_bnd r_i x_j.
// Requires a converged state.
HomogenizedStress homogenized_stress(const FiberNetwork& net, const RveStateView& state,
                                     const Def3& f, const RveBox& box);

// Fiber volume-sum form of the same average: (1/(J V)) sum_f N l d(x)d.
SymTensor3 homogenized_stress_fiber_sum(const FiberNetwork& net, const FiberLaw& law,
                                        const RveStateView& state, const Def3& f,
                                        const RveBox& box);

// Length-weighted second Legendre polynomial of the current fiber
// directions against ref_dir. In [-1/2, 1].
double orientation_p2(const FiberNetwork& net, std::span<const double> u,
                      const Vec3& ref_dir);

}  // namespace fibra
