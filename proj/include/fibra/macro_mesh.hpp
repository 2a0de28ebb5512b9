#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fibra/tensor.hpp"

namespace fibra {

// Linear tetrahedral macroscale mesh. Reference coordinates are fixed at
// load; current coordinates evolve in the updated-Lagrangian solve.
struct MacroMesh {
  struct Tet {
    std::array<std::int32_t, 4> n;
    std::int32_t region = 0;
  };

  std::vector<Vec3> ref_coords;
  std::vector<Vec3> coords;  // current
  std::vector<Tet> tets;
  std::map<std::string, std::vector<std::int32_t>> node_sets;
  std::map<std::string, std::vector<std::array<std::int32_t, 3>>> face_sets;

  int n_nodes() const { return static_cast<int>(ref_coords.size()); }
  int n_elements() const { return static_cast<int>(tets.size()); }
  int n_dof() const { return 3 * n_nodes(); }

  const std::vector<std::int32_t>& node_set(const std::string& name) const;
  void validate() const;  // index ranges + positive Jacobians
  void reset_current();   // current = reference
};

MacroMesh read_mesh(const std::filesystem::path& path);
void write_mesh(const MacroMesh& mesh, const std::filesystem::path& path);

// Structured box [0,lx]x[0,ly]x[0,lz], 6 tets per cell. Node sets
// xmin/xmax/ymin/ymax/zmin/zmax plus "origin" (the min corner); face
// sets on xmin and xmax.
MacroMesh make_box_mesh(int nx, int ny, int nz, double lx, double ly, double lz);

struct DirichletBc {
  std::string node_set;
  // per-axis prescribed final displacement; unset axes stay free
  std::array<std::optional<double>, 3> value;
  // alternatively pin the whole set to u = (G - I) X (all axes); used
  // for affine patch and objectivity data
  std::optional<Def3> affine;
};

struct NeumannBc {
  std::string face_set;
  Vec3 traction{};  // dead load per reference area
};

struct BcSet {
  std::vector<DirichletBc> dirichlet;
  std::vector<NeumannBc> neumann;
};

}  // namespace fibra
