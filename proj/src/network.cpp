#include "fibra/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "fibra/error.hpp"
#include "fibra/kernels.hpp"

namespace fibra {

double FiberLaw::force(double ea, double stretch) const {
  const double s = ea_scale * ea;
  if (buckling_off && stretch < 1.0) return 0.0;
  switch (kind) {
    case Kind::linear:
      return s * (stretch - 1.0);
    case Kind::exponential:
      return s / nonlinearity * std::expm1(nonlinearity * (stretch - 1.0));
  }
  return 0.0;
}

double FiberLaw::tangent(double ea, double stretch) const {
  const double s = ea_scale * ea;
  if (buckling_off && stretch < 1.0) return 0.0;
  switch (kind) {
    case Kind::linear:
      return s;
    case Kind::exponential:
      return s * std::exp(nonlinearity * (stretch - 1.0));
  }
  return 0.0;
}

double FiberLaw::energy(double ea, double stretch, double rest_length) const {
  const double s = ea_scale * ea;
  if (buckling_off && stretch < 1.0) return 0.0;
  const double e = stretch - 1.0;
  switch (kind) {
    case Kind::linear:
      return 0.5 * s * rest_length * e * e;
    case Kind::exponential: {
      const double b = nonlinearity;
      return rest_length * s / b * (std::expm1(b * e) / b - e);
    }
  }
  return 0.0;
}

void FiberLaw::validate() const {
  if (!(ea_scale > 0)) throw ConfigError("fiber law requires ea_scale > 0");
  if (kind == Kind::exponential && !(nonlinearity > 0))
    throw ConfigError("exponential fiber law requires nonlinearity > 0");
}

FiberLaw::Kind parse_law_kind(const std::string& name) {
  if (name == "linear") return FiberLaw::Kind::linear;
  if (name == "exponential") return FiberLaw::Kind::exponential;
  throw ConfigError("unknown fiber law '" + name + "'");
}

FiberNetwork::FiberNetwork(std::vector<Vec3> coords, std::vector<Fiber> fibers,
                           RveBox box, double tol_bnd)
    : coords_(std::move(coords)), fibers_(std::move(fibers)), box_(box),
      tol_bnd_(tol_bnd) {
  const int nn = n_nodes();
  if (nn == 0) throw ConfigError("network has no nodes");
  if (!(box_.half > 0)) throw ConfigError("RVE box half extent must be > 0");

  const double h = box_.half;
  for (int i = 0; i < nn; ++i) {
    for (int k = 0; k < 3; ++k) {
      const double c = coords_[i][k];
      if (!std::isfinite(c))
        throw ConfigError("non-finite coordinate at node " + std::to_string(i));
      if (std::abs(c) > h + tol_bnd_)
        throw ConfigError("node " + std::to_string(i) + " lies outside the RVE box");
    }
  }

  std::set<std::pair<std::int32_t, std::int32_t>> seen;
  rest_length_.reserve(fibers_.size());
  for (std::size_t f = 0; f < fibers_.size(); ++f) {
    const Fiber& fb = fibers_[f];
    if (fb.a < 0 || fb.b < 0 || fb.a >= nn || fb.b >= nn)
      throw ConfigError("fiber " + std::to_string(f) + " references a bad node index");
    if (fb.a == fb.b)
      throw ConfigError("fiber " + std::to_string(f) + " connects a node to itself");
    if (!(fb.area > 0) || !(fb.modulus > 0))
      throw ConfigError("fiber " + std::to_string(f) + " needs positive area and modulus");
    auto key = std::minmax(fb.a, fb.b);
    if (!seen.insert({key.first, key.second}).second)
      throw ConfigError("duplicate fiber between nodes " + std::to_string(fb.a) +
                        " and " + std::to_string(fb.b));
    const Vec3& xa = coords_[fb.a];
    const Vec3& xb = coords_[fb.b];
    const Vec3 d{xb[0] - xa[0], xb[1] - xa[1], xb[2] - xa[2]};
    const double l0 = norm3(d);
    if (!(l0 > 0))
      throw ConfigError("fiber " + std::to_string(f) + " has zero rest length");
    rest_length_.push_back(l0);
    max_ea_ = std::max(max_ea_, fb.area * fb.modulus);
  }

  boundary_mask_.assign(nn, 0);
  for (int i = 0; i < nn; ++i) {
    for (int k = 0; k < 3; ++k)
      if (std::abs(std::abs(coords_[i][k]) - h) <= tol_bnd_) boundary_mask_[i] = 1;
    if (boundary_mask_[i]) boundary_nodes_.push_back(i);
  }
  if (boundary_nodes_.empty())
    throw ConfigError("network has no boundary nodes; the RVE cannot carry load");

  // free-first packing
  dof_map_.n_nodes = nn;
  dof_map_.packed_of_dof.assign(3 * nn, -1);
  dof_map_.dof_of_packed.assign(3 * nn, -1);
  int slot = 0;
  for (int i = 0; i < nn; ++i)
    if (!boundary_mask_[i])
      for (int k = 0; k < 3; ++k) {
        dof_map_.packed_of_dof[3 * i + k] = slot;
        dof_map_.dof_of_packed[slot] = 3 * i + k;
        ++slot;
      }
  dof_map_.n_free = slot;
  for (int i = 0; i < nn; ++i)
    if (boundary_mask_[i])
      for (int k = 0; k < 3; ++k) {
        dof_map_.packed_of_dof[3 * i + k] = slot;
        dof_map_.dof_of_packed[slot] = 3 * i + k;
        ++slot;
      }

  packed_ref_.assign(3 * nn, 0.0);
  for (int i = 0; i < nn; ++i)
    for (int k = 0; k < 3; ++k)
      packed_ref_[dof_map_.packed_of_dof[3 * i + k]] = coords_[i][k];

  fiber_dofs_.reserve(6 * fibers_.size());
  for (const Fiber& fb : fibers_) {
    for (int k = 0; k < 3; ++k) fiber_dofs_.push_back(dof_map_.packed_of_dof[3 * fb.a + k]);
    for (int k = 0; k < 3; ++k) fiber_dofs_.push_back(dof_map_.packed_of_dof[3 * fb.b + k]);
  }

  node_lump_.assign(nn, 0.0);
  for (std::size_t f = 0; f < fibers_.size(); ++f) {
    const double half_seg = 0.5 * rest_length_[f] * fibers_[f].area;
    node_lump_[fibers_[f].a] += half_seg;
    node_lump_[fibers_[f].b] += half_seg;
  }
}

double FiberNetwork::fiber_ea(int fiber) const {
  const Fiber& f = fibers_[fiber];
  return f.area * f.modulus;
}

FiberNetwork FiberNetwork::read_file(const std::filesystem::path& path, RveBox box,
                                     double tol_bnd) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open network file " + path.string());
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> std::istringstream {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r\n") != std::string::npos)
        return std::istringstream(line);
    }
    throw IoError("unexpected end of network file " + path.string() + " at line " +
                  std::to_string(lineno));
  };
  auto fail = [&](const std::string& what) -> IoError {
    return IoError("network file " + path.string() + " line " +
                   std::to_string(lineno) + ": " + what);
  };

  long n = 0, m = 0;
  {
    auto s = next_line();
    if (!(s >> n >> m) || n <= 0 || m < 0) throw fail("expected 'N M' header");
  }
  std::vector<Vec3> coords(n);
  for (long i = 0; i < n; ++i) {
    auto s = next_line();
    if (!(s >> coords[i][0] >> coords[i][1] >> coords[i][2]))
      throw fail("expected 'x y z'");
    for (double c : coords[i])
      if (!std::isfinite(c)) throw fail("non-finite coordinate");
  }
  std::vector<Fiber> fibers(m);
  for (long f = 0; f < m; ++f) {
    auto s = next_line();
    long a, b;
    if (!(s >> a >> b >> fibers[f].area >> fibers[f].modulus))
      throw fail("expected 'i j area modulus'");
    if (a < 0 || b < 0 || a >= n || b >= n) throw fail("node index out of range");
    if (!std::isfinite(fibers[f].area) || !std::isfinite(fibers[f].modulus))
      throw fail("non-finite fiber data");
    fibers[f].a = static_cast<std::int32_t>(a);
    fibers[f].b = static_cast<std::int32_t>(b);
  }
  try {
    return FiberNetwork(std::move(coords), std::move(fibers), box, tol_bnd);
  } catch (const ConfigError& e) {
    throw IoError("network file " + path.string() + ": " + e.what());
  }
}

void FiberNetwork::write_file(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write network file " + path.string());
  char buf[96];
  out << n_nodes() << ' ' << n_fibers() << '\n';
  for (const Vec3& x : coords_) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", x[0], x[1], x[2]);
    out << buf;
  }
  for (const Fiber& f : fibers_) {
    std::snprintf(buf, sizeof buf, "%d %d %.17g %.17g\n", f.a, f.b, f.area, f.modulus);
    out << buf;
  }
  if (!out) throw IoError("failed writing network file " + path.string());
}

RveState::RveState(const FiberNetwork& net)
    : u_(net.n_dof(), 0.0), v_(net.n_dof(), 0.0), a_(net.n_dof(), 0.0),
      f_int_(net.n_dof(), 0.0), f_damp_(net.n_dof(), 0.0),
      mass_(net.n_dof(), 0.0), inv_mass_(net.n_dof(), 0.0),
      n_free_(net.n_free()) {}

RveStateView RveState::view() {
  RveStateView v;
  v.u = u_;
  v.v = v_;
  v.a = a_;
  v.f_int = f_int_;
  v.f_damp = f_damp_;
  v.mass = mass_;
  v.inv_mass = inv_mass_;
  v.t = &t_;
  v.iters = &iters_;
  v.converged = &converged_;
  v.n_free = n_free_;
  return v;
}

void apply_affine_bc(const FiberNetwork& net, const Def3& f, RveStateView state) {
  const double j = f.det();
  if (!(j > 0)) throw KinematicsError("affine BC requires det(F) > 0");
  const DofMap& map = net.dof_map();
  for (std::int32_t node : net.boundary_nodes()) {
    const Vec3& x = net.coords()[node];
    const Vec3 fx = f.apply(x);
    for (int k = 0; k < 3; ++k) {
      const std::int32_t p = map.packed_of_dof[3 * node + k];
      state.u[p] = fx[k] - x[k];
      state.v[p] = 0.0;
      state.a[p] = 0.0;
    }
  }
  if (state.converged) *state.converged = 0;
}

namespace {

// single force loop shared by the plain and CFL-tracking entry points;
// deterministic fiber order so scatter accumulation is reproducible
template <bool WithCfl>
void force_loop(const FiberNetwork& net, const FiberLaw& law,
                std::span<const double> u, std::span<double> f_int,
                const double* mred_l0, double* min_dtsq_out) {
  kernels::active().fill(f_int.size(), 0.0, f_int.data());
  const std::vector<double>& ref = net.packed_ref_coords();
  const std::vector<std::int32_t>& fd = net.fiber_packed_dofs();
  const int nf = net.n_fibers();
  double min_dtsq = std::numeric_limits<double>::infinity();
  for (int f = 0; f < nf; ++f) {
    const std::int32_t* p = &fd[6 * f];
    const double dx = (ref[p[3]] + u[p[3]]) - (ref[p[0]] + u[p[0]]);
    const double dy = (ref[p[4]] + u[p[4]]) - (ref[p[1]] + u[p[1]]);
    const double dz = (ref[p[5]] + u[p[5]]) - (ref[p[2]] + u[p[2]]);
    const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
    const double l0 = net.rest_length(f);
    if (len <= 1e-8 * l0)
      throw SolverError("fiber " + std::to_string(f) +
                        " collapsed to zero length (network collapse)");
    const double stretch = len / l0;
    const double ea = net.fiber_ea(f);
    const double n_ax = law.force(ea, stretch);
    const double g = n_ax / len;
    f_int[p[0]] -= g * dx;
    f_int[p[1]] -= g * dy;
    f_int[p[2]] -= g * dz;
    f_int[p[3]] += g * dx;
    f_int[p[4]] += g * dy;
    f_int[p[5]] += g * dz;
    if constexpr (WithCfl) {
      const double kt = std::max(std::abs(law.tangent(ea, stretch)),
                                 law.ea_scale * ea);
      min_dtsq = std::min(min_dtsq, mred_l0[f] / kt);
    }
  }
  if constexpr (WithCfl) *min_dtsq_out = min_dtsq;
}

}  // namespace

void internal_forces(const FiberNetwork& net, const FiberLaw& law,
                     std::span<const double> u, std::span<double> f_int) {
  force_loop<false>(net, law, u, f_int, nullptr, nullptr);
}

void internal_forces_cfl(const FiberNetwork& net, const FiberLaw& law,
                         std::span<const double> u, std::span<double> f_int,
                         const double* mred_l0, double* min_dtsq) {
  force_loop<true>(net, law, u, f_int, mred_l0, min_dtsq);
}

std::vector<double> lumped_mass(const FiberNetwork& net, double density_scale) {
  if (!(density_scale > 0)) throw ConfigError("density_scale must be > 0");
  const std::vector<double>& lump = net.node_lumping();
  std::vector<double> m(net.n_dof(), 0.0);
  const DofMap& map = net.dof_map();
  for (int i = 0; i < net.n_nodes(); ++i) {
    if (!(lump[i] > 0))
      throw ConfigError("node " + std::to_string(i) +
                        " has no incident fibers (singular mass)");
    for (int k = 0; k < 3; ++k)
      m[map.packed_of_dof[3 * i + k]] = density_scale * lump[i];
  }
  return m;
}

HomogenizedStress homogenized_stress(const FiberNetwork& net, const RveStateView& state,
                                     const Def3& f, const RveBox& box) {
  if (!state.converged || !*state.converged)
    throw SolverError("homogenized stress requires a converged state");
  const double vol = f.det() * box.volume();
  const DofMap& map = net.dof_map();
  const std::vector<double>& ref = net.packed_ref_coords();
  double s[3][3] = {};
  for (std::int32_t node : net.boundary_nodes()) {
    double r[3], x[3];
    for (int k = 0; k < 3; ++k) {
      const std::int32_t p = map.packed_of_dof[3 * node + k];
      r[k] = state.f_int[p];
      x[k] = ref[p] + state.u[p];
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s[i][j] += r[i] * x[j];
  }
  Def3 raw;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) raw(i, j) = s[i][j] / vol;
  double asym = 0, mag = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      asym += (raw(i, j) - raw(j, i)) * (raw(i, j) - raw(j, i));
      mag += raw(i, j) * raw(i, j);
    }
  HomogenizedStress out;
  out.sigma = SymTensor3::from_full(raw);
  out.asymmetry = mag > 0 ? std::sqrt(asym / mag) : 0.0;
  return out;
}

SymTensor3 homogenized_stress_fiber_sum(const FiberNetwork& net, const FiberLaw& law,
                                        const RveStateView& state, const Def3& f,
                                        const RveBox& box) {
  const double vol = f.det() * box.volume();
  const std::vector<double>& ref = net.packed_ref_coords();
  const std::vector<std::int32_t>& fd = net.fiber_packed_dofs();
  double s[3][3] = {};
  for (int fb = 0; fb < net.n_fibers(); ++fb) {
    const std::int32_t* p = &fd[6 * fb];
    const double d[3] = {(ref[p[3]] + state.u[p[3]]) - (ref[p[0]] + state.u[p[0]]),
                         (ref[p[4]] + state.u[p[4]]) - (ref[p[1]] + state.u[p[1]]),
                         (ref[p[5]] + state.u[p[5]]) - (ref[p[2]] + state.u[p[2]])};
    const double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    const double n_ax = law.force(net.fiber_ea(fb), len / net.rest_length(fb));
    const double g = n_ax / len;  // N l (d x d) / l^2
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s[i][j] += g * d[i] * d[j];
  }
  Def3 raw;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) raw(i, j) = s[i][j] / vol;
  return SymTensor3::from_full(raw);
}

double orientation_p2(const FiberNetwork& net, std::span<const double> u,
                      const Vec3& ref_dir) {
  const std::vector<double>& ref = net.packed_ref_coords();
  const std::vector<std::int32_t>& fd = net.fiber_packed_dofs();
  double wsum = 0, acc = 0;
  for (int fb = 0; fb < net.n_fibers(); ++fb) {
    const std::int32_t* p = &fd[6 * fb];
    const double d[3] = {(ref[p[3]] + u[p[3]]) - (ref[p[0]] + u[p[0]]),
                         (ref[p[4]] + u[p[4]]) - (ref[p[1]] + u[p[1]]),
                         (ref[p[5]] + u[p[5]]) - (ref[p[2]] + u[p[2]])};
    const double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    if (!(len > 0)) continue;
    const double c = (d[0] * ref_dir[0] + d[1] * ref_dir[1] + d[2] * ref_dir[2]) / len;
    acc += len * 0.5 * (3.0 * c * c - 1.0);
    wsum += len;
  }
  return wsum > 0 ? acc / wsum : 0.0;
}

}  // namespace fibra
