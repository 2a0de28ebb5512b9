#include "fibra/batch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "fibra/error.hpp"

namespace fibra {

RveStateView PackedStates::view(int point) {
  const std::int64_t lo = offsets[point];
  const std::int64_t len = offsets[point + 1] - lo;
  RveStateView v;
  v.u = std::span<double>(u).subspan(lo, len);
  v.v = std::span<double>(this->v).subspan(lo, len);
  v.a = std::span<double>(a).subspan(lo, len);
  v.f_int = std::span<double>(f_int).subspan(lo, len);
  v.f_damp = std::span<double>(f_damp).subspan(lo, len);
  v.mass = std::span<double>(mass).subspan(lo, len);
  v.inv_mass = std::span<double>(inv_mass).subspan(lo, len);
  v.t = &t[point];
  v.iters = &iters[point];
  v.converged = &converged[point];
  v.n_free = n_free[point];
  return v;
}

void RveLibrary::validate() const {
  if (entries.empty()) throw ConfigError("RVE library is empty");
  const int n = static_cast<int>(entries.size());
  if (policy == Policy::per_region) {
    if (region_map.empty())
      throw ConfigError("per-region policy needs a region map");
    for (const auto& [tag, entry] : region_map)
      if (entry < 0 || entry >= n)
        throw ConfigError("region map entry for tag " + std::to_string(tag) +
                          " is out of range");
  }
  if (policy == Policy::explicit_list)
    for (std::int32_t e : explicit_assignment)
      if (e < 0 || e >= n) throw ConfigError("explicit assignment out of range");
}

RveLibrary::Policy parse_policy(const std::string& name) {
  if (name == "random") return RveLibrary::Policy::random;
  if (name == "per_region") return RveLibrary::Policy::per_region;
  if (name == "explicit") return RveLibrary::Policy::explicit_list;
  throw ConfigError("unknown assignment policy '" + name + "'");
}

RveLibrary RveLibrary::load_manifest(const std::filesystem::path& path, RveBox box,
                                     double tol_bnd) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open RVE library manifest " + path.string());
  RveLibrary lib;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) continue;
    if (line[first] == '#') continue;
    std::istringstream s(line);
    std::string word;
    s >> word;
    if (word == "region") {
      std::int32_t tag, entry;
      if (!(s >> tag >> entry))
        throw IoError("manifest " + path.string() + " line " +
                      std::to_string(lineno) + ": expected 'region tag entry'");
      lib.region_map[tag] = entry;
      lib.policy = Policy::per_region;
    } else {
      const std::filesystem::path net_path =
          std::filesystem::path(word).is_absolute()
              ? std::filesystem::path(word)
              : path.parent_path() / word;
      try {
        lib.entries.push_back(FiberNetwork::read_file(net_path, box, tol_bnd));
      } catch (const IoError& e) {
        throw IoError("manifest " + path.string() + " line " +
                      std::to_string(lineno) + ": " + e.what());
      }
      lib.paths.push_back(net_path.string());
    }
  }
  lib.validate();
  return lib;
}

std::pair<PackedStates, BatchAssignment> init_batch(
    std::span<const std::int32_t> region_of_point, const RveLibrary& library,
    std::uint64_t seed) {
  library.validate();
  const int n_points = static_cast<int>(region_of_point.size());
  BatchAssignment assign;
  assign.entry_of_point.resize(n_points);
  std::mt19937_64 rng(seed);
  for (int p = 0; p < n_points; ++p) {
    switch (library.policy) {
      case RveLibrary::Policy::random:
        assign.entry_of_point[p] =
            static_cast<std::int32_t>(rng() % library.entries.size());
        break;
      case RveLibrary::Policy::per_region: {
        auto it = library.region_map.find(region_of_point[p]);
        if (it == library.region_map.end())
          throw ConfigError("no library entry mapped for region " +
                            std::to_string(region_of_point[p]));
        assign.entry_of_point[p] = it->second;
        break;
      }
      case RveLibrary::Policy::explicit_list:
        if (p >= static_cast<int>(library.explicit_assignment.size()))
          throw ConfigError("explicit assignment list shorter than point count");
        assign.entry_of_point[p] = library.explicit_assignment[p];
        break;
    }
  }

  PackedStates st;
  st.offsets.resize(n_points + 1);
  st.offsets[0] = 0;
  st.n_free.resize(n_points);
  for (int p = 0; p < n_points; ++p) {
    const FiberNetwork& net = library.entries[assign.entry_of_point[p]];
    st.offsets[p + 1] = st.offsets[p] + net.n_dof();
    st.n_free[p] = net.n_free();
  }
  const std::int64_t total = st.offsets.back();
  st.u.assign(total, 0.0);
  st.v.assign(total, 0.0);
  st.a.assign(total, 0.0);
  st.f_int.assign(total, 0.0);
  st.f_damp.assign(total, 0.0);
  st.mass.assign(total, 0.0);
  st.inv_mass.assign(total, 0.0);
  st.t.assign(n_points, 0.0);
  st.iters.assign(n_points, 0);
  st.converged.assign(n_points, 0);
  return {std::move(st), std::move(assign)};
}

std::pair<PackedStates, BatchAssignment> init_batch(const MacroMesh& mesh,
                                                    const RveLibrary& library,
                                                    std::uint64_t seed) {
  std::vector<std::int32_t> regions(mesh.n_elements());
  for (int e = 0; e < mesh.n_elements(); ++e) regions[e] = mesh.tets[e].region;
  return init_batch(regions, library, seed);
}

BatchResult batch_response(const RveLibrary& library, const BatchAssignment& assignment,
                           PackedStates& states, const FiberLaw& law,
                           std::span<const Def3> deformation,
                           const RelaxConfig& relax_cfg, const StiffnessConfig& stiff_cfg,
                           WorkerPool& pool) {
  const int n = states.n_points();
  if (static_cast<int>(deformation.size()) != n)
    throw ConfigError("one deformation gradient per point is required");
  BatchResult out;
  out.responses.resize(n);
  out.stats.resize(n);
  out.base_reports.resize(n);
  std::vector<std::uint8_t> failed(n, 0);

  pool.run(n, [&](int p) {
    const FiberNetwork& net = library.entries[assignment.entry_of_point[p]];
    try {
      Response r = constitutive_response(net, law, deformation[p], relax_cfg,
                                         stiff_cfg, states.view(p));
      out.responses[p] = {r.sigma, r.spatial_c};
      out.stats[p] = r.stats;
      out.base_reports[p] = r.base_report;
    } catch (const SolverError&) {
      failed[p] = 1;
    } catch (const KinematicsError&) {
      failed[p] = 1;
    }
  });

  for (int p = 0; p < n; ++p)
    if (failed[p]) out.failed.push_back(p);
  return out;
}

void SubstituteParams::validate() const {
  if (!(mu > 0) || !(lambda > 0))
    throw ConfigError("substitute material parameters must be > 0");
}

SymTensor3 substitute_pk2(const SymTensor3& stretch, const SubstituteParams& p) {
  const Def3 u = stretch.full();
  const Def3 c = matmul(u, u);
  const double j = u.det();
  if (!(j > 0)) throw KinematicsError("substitute stress requires det(U) > 0");
  const Def3 cinv = c.inverse();
  SymTensor3 pk2;
  const double lnj = std::log(j);
  for (int i = 0; i < 3; ++i)
    for (int k = i; k < 3; ++k) {
      const double id = (i == k) ? 1.0 : 0.0;
      pk2.set(i, k, p.mu * (id - cinv(i, k)) + p.lambda * lnj * cinv(i, k));
    }
  return pk2;
}

Mandel66 substitute_material_tangent(const Def3& f, const SubstituteParams& p) {
  const double j = f.det();
  if (!(j > 0)) throw KinematicsError("substitute tangent requires det(F) > 0");
  const Def3 c = matmul(f.transpose(), f);
  const Def3 cinv = c.inverse();
  const SymTensor3 ci = SymTensor3::from_full(cinv);
  const Mandel6 vci = mandel(ci);
  const double lnj = std::log(j);
  const double g = 2.0 * (p.mu - p.lambda * lnj);
  Mandel66 a;
  for (int q = 0; q < 6; ++q) {
    const int i = kMandelI[q], k = kMandelJ[q];
    const double wq = q < 3 ? 1.0 : 1.4142135623730951;
    for (int r = 0; r < 6; ++r) {
      const int m = kMandelI[r], n = kMandelJ[r];
      const double wr = r < 3 ? 1.0 : 1.4142135623730951;
      const double sym = 0.5 * (ci(i, m) * ci(k, n) + ci(i, n) * ci(k, m));
      a(q, r) = p.lambda * vci[q] * vci[r] + g * wq * wr * sym;
    }
  }
  return a;
}

PointResponse substitute_response(const Def3& f, const SubstituteParams& p) {
  p.validate();
  const double j = f.det();
  if (!(j > 0)) throw KinematicsError("substitute response requires det(F) > 0");
  const Def3 b = matmul(f, f.transpose());
  const double lnj = std::log(j);
  SymTensor3 sigma;
  for (int i = 0; i < 3; ++i)
    for (int k = i; k < 3; ++k) {
      const double id = (i == k) ? 1.0 : 0.0;
      sigma.set(i, k, (p.mu * (b(i, k) - id) + p.lambda * lnj * id) / j);
    }
  PointResponse out;
  out.sigma = sigma;
  out.spatial_c = push_forward_stiffness(substitute_material_tangent(f, p), f);
  return out;
}

ProviderResult SubstituteProvider::respond(std::span<const Def3> deformation) {
  ProviderResult out;
  out.responses.reserve(deformation.size());
  for (const Def3& f : deformation) out.responses.push_back(substitute_response(f, params_));
  out.solves_per_point = 0;
  return out;
}

NetworkBatchProvider::NetworkBatchProvider(std::span<const std::int32_t> region_of_point,
                                           RveLibrary library, std::uint64_t seed,
                                           FiberLaw law, RelaxConfig relax_cfg,
                                           StiffnessConfig stiff_cfg, int workers)
    : library_(std::move(library)), law_(law), relax_cfg_(relax_cfg),
      stiff_cfg_(stiff_cfg), pool_(workers) {
  auto [states, assignment] = init_batch(region_of_point, library_, seed);
  states_ = std::move(states);
  assignment_ = std::move(assignment);
}

NetworkBatchProvider::NetworkBatchProvider(const MacroMesh& mesh, RveLibrary library,
                                           std::uint64_t seed, FiberLaw law,
                                           RelaxConfig relax_cfg, StiffnessConfig stiff_cfg,
                                           int workers)
    : library_(std::move(library)), law_(law), relax_cfg_(relax_cfg),
      stiff_cfg_(stiff_cfg), pool_(workers) {
  auto [states, assignment] = init_batch(mesh, library_, seed);
  states_ = std::move(states);
  assignment_ = std::move(assignment);
}

ProviderResult NetworkBatchProvider::respond(std::span<const Def3> deformation) {
  BatchResult br = batch_response(library_, assignment_, states_, law_, deformation,
                                  relax_cfg_, stiff_cfg_, pool_);
  ProviderResult out;
  out.responses = std::move(br.responses);
  out.failed_points = std::move(br.failed);
  for (const ResponseStats& s : br.stats) {
    out.microscale_iterations += s.relax_iterations;
    total_solves_ += s.solves;
  }
  out.solves_per_point = br.stats.empty() ? 0 : br.stats.front().solves;
  return out;
}

std::optional<double> NetworkBatchProvider::orientation(int point,
                                                        const Vec3& ref_dir) const {
  if (point < 0 || point >= states_.n_points()) return std::nullopt;
  const FiberNetwork& net = library_.entries[assignment_.entry_of_point[point]];
  auto& self = const_cast<NetworkBatchProvider&>(*this);
  RveStateView v = self.states_.view(point);
  return orientation_p2(net, v.u, ref_dir);
}

}  // namespace fibra
