#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fibra/macrofem.hpp"
#include "fibra/network.hpp"
#include "fibra/pool.hpp"
#include "fibra/relax.hpp"
#include "fibra/stiffness.hpp"

namespace fibra {

// CRS-style packed storage of many RVE states: one row offset per point
// into shared value arrays, views never alias.
struct PackedStates {
  std::vector<std::int64_t> offsets;  // n_points + 1
  std::vector<double> u, v, a, f_int, f_damp, mass, inv_mass;
  std::vector<double> t;
  std::vector<std::int64_t> iters;
  std::vector<std::uint8_t> converged;
  std::vector<std::int32_t> n_free;

  int n_points() const { return static_cast<int>(t.size()); }
  std::int64_t total_dofs() const { return offsets.empty() ? 0 : offsets.back(); }
  RveStateView view(int point);
};

struct RveLibrary {
  enum class Policy { random, per_region, explicit_list };

  std::vector<FiberNetwork> entries;
  std::vector<std::string> paths;  // one per entry when file-backed
  Policy policy = Policy::random;
  std::map<std::int32_t, std::int32_t> region_map;       // per_region
  std::vector<std::int32_t> explicit_assignment;         // explicit_list

  void validate() const;
  // Manifest: one network path per line; optional lines
  // "region <tag> <entry-index>" switch the policy to per_region.
  static RveLibrary load_manifest(const std::filesystem::path& path,
                                  RveBox box = {}, double tol_bnd = 1e-6);
};

RveLibrary::Policy parse_policy(const std::string& name);

struct BatchAssignment {
  std::vector<std::int32_t> entry_of_point;
};

// One RVE instance per integration point; deterministic under
// (policy, seed). Packed arrays sized from per-network DOF counts.
std::pair<PackedStates, BatchAssignment> init_batch(
    std::span<const std::int32_t> region_of_point, const RveLibrary& library,
    std::uint64_t seed);
std::pair<PackedStates, BatchAssignment> init_batch(const MacroMesh& mesh,
                                                    const RveLibrary& library,
                                                    std::uint64_t seed);

struct BatchResult {
  std::vector<PointResponse> responses;
  std::vector<ResponseStats> stats;
  std::vector<RelaxReport> base_reports;
  std::vector<int> failed;  // point ids, ascending
};

// Solves every point, one worker per RVE. Results and updated warm
// states are identical to sequential per-point execution.
BatchResult batch_response(const RveLibrary& library, const BatchAssignment& assignment,
                           PackedStates& states, const FiberLaw& law,
                           std::span<const Def3> deformation,
                           const RelaxConfig& relax_cfg, const StiffnessConfig& stiff_cfg,
                           WorkerPool& pool);

// compressible neo-Hookean closed form for solver isolation tests and
// Newton bootstrapping
struct SubstituteParams {
  double mu = 1.0;
  double lambda = 1.0;

  void validate() const;
};

PointResponse substitute_response(const Def3& f, const SubstituteParams& p);
SymTensor3 substitute_pk2(const SymTensor3& stretch, const SubstituteParams& p);
Mandel66 substitute_material_tangent(const Def3& f, const SubstituteParams& p);

class SubstituteProvider final : public ConstitutiveProvider {
 public:
  explicit SubstituteProvider(SubstituteParams params) : params_(params) {
    params_.validate();
  }
  ProviderResult respond(std::span<const Def3> deformation) override;

 private:
  SubstituteParams params_;
};

class NetworkBatchProvider final : public ConstitutiveProvider {
 public:
  NetworkBatchProvider(std::span<const std::int32_t> region_of_point,
                       RveLibrary library, std::uint64_t seed, FiberLaw law,
                       RelaxConfig relax_cfg, StiffnessConfig stiff_cfg, int workers);
  NetworkBatchProvider(const MacroMesh& mesh, RveLibrary library, std::uint64_t seed,
                       FiberLaw law, RelaxConfig relax_cfg, StiffnessConfig stiff_cfg,
                       int workers);

  ProviderResult respond(std::span<const Def3> deformation) override;
  std::optional<double> orientation(int point, const Vec3& ref_dir) const override;

  const BatchAssignment& assignment() const { return assignment_; }
  const RveLibrary& library() const { return library_; }
  PackedStates& states() { return states_; }
  std::int64_t total_solves() const { return total_solves_; }

 private:
  RveLibrary library_;
  PackedStates states_;
  BatchAssignment assignment_;
  FiberLaw law_;
  RelaxConfig relax_cfg_;
  StiffnessConfig stiff_cfg_;
  WorkerPool pool_;
  std::int64_t total_solves_ = 0;
};

}  // namespace fibra
