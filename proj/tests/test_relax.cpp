#include <doctest.h>

#include <cmath>

#include "fibra/error.hpp"
#include "fibra/implicit.hpp"
#include "fibra/kernels.hpp"
#include "fibra/netgen.hpp"
#include "fibra/relax.hpp"
#include "oracles.hpp"

using namespace fibra;

namespace {

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

FiberNetwork stable_test_net(int nodes, int fibers, std::uint64_t seed) {
  NetGenSpec spec;
  spec.style = NetGenSpec::Style::knn;
  spec.nodes = nodes;
  spec.fibers = fibers;
  spec.neighbors = 10;
  return generate_network(spec, seed);
}

}  // namespace

TEST_CASE("stable_dt") {
  const auto net = oracle::single_fiber();
  const auto mass = lumped_mass(net, 1.0);  // 1/2 per node
  SUBCASE("hand fixture: all parameters one") {
    // m_red = 1/4, k = EA = 1, l0 = 1 -> dt = s * sqrt(1/4) = s/2
    CHECK(stable_dt(net, FiberLaw{}, mass, 1.0) == doctest::Approx(0.5));
    CHECK(stable_dt(net, FiberLaw{}, mass, 0.5) == doctest::Approx(0.25));
  }
  SUBCASE("halving the fiber length halves dt") {
    std::vector<Vec3> coords{{-0.25, 0, 0.5}, {0.25, 0, 0.5}};
    std::vector<Fiber> fibers{{0, 1, 1.0, 1.0}};
    const FiberNetwork half(coords, fibers);
    const auto mass_half = lumped_mass(half, 1.0);
    CHECK(stable_dt(half, FiberLaw{}, mass_half, 1.0) == doctest::Approx(0.25));
  }
}

TEST_CASE("relax on trivial states") {
  SUBCASE("identity converges immediately") {
    const auto chain = oracle::two_segment_chain();
    RelaxConfig cfg;
    auto [st, rep] = relax_solve(chain.net, FiberLaw{}, Def3::identity(), cfg);
    CHECK(rep.converged);
    CHECK(rep.iterations == 0);
    CHECK(rep.residual == 0.0);
  }
  SUBCASE("iteration cap returns a non-converged report") {
    const auto chain = oracle::two_segment_chain();
    RelaxConfig cfg;
    cfg.max_iterations = 2;
    auto [st, rep] = relax_solve(chain.net, FiberLaw{}, Def3::diag(1.3, 1, 1), cfg);
    CHECK(!rep.converged);
    CHECK(rep.iterations == 2);
    CHECK(!st.is_converged());
  }
}

TEST_CASE("two-segment chain matches the closed form") {
  const auto chain = oracle::two_segment_chain();
  const double lam = 1.3;
  RelaxConfig cfg;
  cfg.tolerance = 1e-10;
  auto [st, rep] = relax_solve(chain.net, FiberLaw{}, Def3::diag(lam, 1, 1), cfg);
  REQUIRE(rep.converged);
  auto v = st.view();
  const auto& map = chain.net.dof_map();
  const double x_mid =
      chain.net.coords()[1][0] + v.u[map.packed_of_dof[3 * 1 + 0]];
  CHECK(x_mid == doctest::Approx(chain.interior_x(lam)).epsilon(1e-8));
  // reactions equal the common tension
  const double l1 = chain.mid_ref + 0.5;
  const double n1 = chain.ea1 * ((x_mid + lam / 2) / l1 - 1.0);
  const double r_left = v.f_int[map.packed_of_dof[3 * 0 + 0]];
  CHECK(std::abs(-r_left - n1) <= 1e-8 * std::max(1.0, n1));
}

TEST_CASE("relax matches the implicit oracle on stable networks") {
  for (std::uint64_t seed : {11u, 21u}) {
    const FiberNetwork net = stable_test_net(16, 44, seed);
    CAPTURE(seed);
    const Def3 f = Def3::diag(1.04, 0.99, 1.01);
    RelaxConfig cfg;
    cfg.tolerance = 1e-9;
    cfg.max_iterations = 2000000;
    auto [st, rep] = relax_solve(net, FiberLaw{}, f, cfg);
    REQUIRE(rep.converged);
    auto [ist, irep] = implicit_solve(net, FiberLaw{}, f);
    REQUIRE(irep.converged);
    CHECK(max_abs_diff(st.view().u, ist.view().u) <= 1e-6);
  }
}

TEST_CASE("implicit oracle basics") {
  SUBCASE("identity needs zero iterations") {
    const auto net = oracle::tripod();
    auto [st, rep] = implicit_solve(net, FiberLaw{}, Def3::identity());
    CHECK(rep.converged);
    CHECK(rep.iterations == 0);
  }
  SUBCASE("tripod under small stretch matches relax") {
    const auto net = oracle::tripod();
    const Def3 f = Def3::diag(1.05, 1.0, 0.98);
    auto [ist, irep] = implicit_solve(net, FiberLaw{}, f);
    REQUIRE(irep.converged);
    RelaxConfig cfg;
    cfg.tolerance = 1e-11;
    auto [st, rep] = relax_solve(net, FiberLaw{}, f, cfg);
    REQUIRE(rep.converged);
    CHECK(max_abs_diff(st.view().u, ist.view().u) <= 1e-8);
  }
  SUBCASE("sub-isostatic chain has a singular tangent") {
    // tip node C hangs on an unstrained fiber at the first iterate: its
    // transverse stiffness is exactly zero
    std::vector<Vec3> coords{{-0.5, 0, 0}, {-0.1, 0, 0}, {0.3, 0, 0}};
    std::vector<Fiber> fibers{{0, 1, 1, 1}, {1, 2, 1, 1}};
    const FiberNetwork net(coords, fibers);
    CHECK_THROWS_AS(implicit_solve(net, FiberLaw{}, Def3::diag(1.1, 1, 1)),
                    SolverError);
  }
}

TEST_CASE("relax properties") {
  const FiberNetwork net = stable_test_net(20, 56, 31);
  const Def3 f = Def3::diag(1.06, 1.0, 0.97);
  RelaxConfig cfg;

  SUBCASE("convergence certificate") {
    auto [st, rep] = relax_solve(net, FiberLaw{}, f, cfg);
    REQUIRE(rep.converged);
    auto v = st.view();
    std::vector<double> fcheck(net.n_dof());
    internal_forces(net, FiberLaw{}, v.u, fcheck);
    const auto& k = kernels::active();
    const double res = std::sqrt(k.norm2_sq(net.n_free(), fcheck.data()));
    CHECK(res <= rep.eps_eff);
    CHECK(res == rep.residual);  // report reflects the returned state
  }

  SUBCASE("fixed dofs never move") {
    RveState st(net);
    auto v = st.view();
    apply_affine_bc(net, f, v);
    std::vector<double> fixed_before(v.fixed(v.u).begin(), v.fixed(v.u).end());
    relax_solve(net, FiberLaw{}, f, cfg, v, WarmStart::reuse);
    auto fixed_after = v.fixed(v.u);
    for (std::size_t i = 0; i < fixed_before.size(); ++i)
      CHECK(fixed_after[i] == fixed_before[i]);
    for (double x : v.fixed(v.v)) CHECK(x == 0.0);
    for (double x : v.fixed(v.a)) CHECK(x == 0.0);
  }

  SUBCASE("warm start from the solution converges within two iterations") {
    RveState st(net);
    auto v = st.view();
    auto rep1 = relax_solve(net, FiberLaw{}, f, cfg, v, WarmStart::zero_interior);
    REQUIRE(rep1.converged);
    auto rep2 = relax_solve(net, FiberLaw{}, f, cfg, v, WarmStart::reuse);
    CHECK(rep2.converged);
    CHECK(rep2.iterations <= 2);
  }

  SUBCASE("determinism: identical inputs, bitwise identical outputs") {
    auto [s1, r1] = relax_solve(net, FiberLaw{}, f, cfg);
    auto [s2, r2] = relax_solve(net, FiberLaw{}, f, cfg);
    auto v1 = s1.view(), v2 = s2.view();
    for (std::size_t i = 0; i < v1.u.size(); ++i) {
      CHECK(v1.u[i] == v2.u[i]);
      CHECK(v1.v[i] == v2.v[i]);
    }
    CHECK(r1.iterations == r2.iterations);
    CHECK(r1.residual == r2.residual);
  }

  SUBCASE("kernel paths agree to roundoff") {
    if (!kernels::avx2_supported()) return;
    const auto before = kernels::active_isa();
    kernels::select(kernels::Isa::scalar);
    auto [s1, r1] = relax_solve(net, FiberLaw{}, f, cfg);
    kernels::select(kernels::Isa::avx2);
    auto [s2, r2] = relax_solve(net, FiberLaw{}, f, cfg);
    kernels::select(before);
    // reductions are order-pinned, elementwise ops contraction-free:
    // the two paths are bitwise identical
    CHECK(r1.iterations == r2.iterations);
    CHECK(max_abs_diff(s1.view().u, s2.view().u) == 0.0);
  }
}

TEST_CASE("undamped central difference conserves energy") {
  const auto net = oracle::tripod();
  RelaxConfig cfg;
  cfg.damping = 0.0;
  cfg.dt_safety = 0.5;
  cfg.tolerance = 1e-300;  // never converges; run the full 1000 steps
  cfg.max_iterations = 1000;
  cfg.energy_check = true;
  std::vector<double> trace;
  cfg.energy_trace = &trace;
  auto [st, rep] = relax_solve(net, FiberLaw{}, Def3::diag(1.05, 1, 1), cfg);
  CHECK(!rep.converged);
  REQUIRE(trace.size() >= 1000);
  double peak = 0;
  for (double e : trace) peak = std::max(peak, std::abs(e));
  // least-squares slope per step
  const std::size_t n = trace.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += i;
    sy += trace[i];
    sxx += double(i) * i;
    sxy += i * trace[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(std::abs(slope) <= 1e-6 * peak);
  CHECK(rep.energy_drift <= 0.2 * peak);  // bounded oscillation, no blowup
}

TEST_CASE("divergence is detected and named") {
  const auto chain = oracle::two_segment_chain();
  RelaxConfig cfg;
  cfg.damping = 1e9;  // explicit damping far beyond the stability limit
  cfg.max_iterations = 100000;
  CHECK_THROWS_WITH_AS(
      relax_solve(chain.net, FiberLaw{}, Def3::diag(1.2, 1, 1), cfg),
      doctest::Contains("iteration"), SolverError);
}

TEST_CASE("exponential law stiffening stays stable via adaptive dt") {
  const FiberNetwork net = stable_test_net(14, 40, 41);
  FiberLaw law;
  law.kind = FiberLaw::Kind::exponential;
  law.nonlinearity = 4.0;
  RelaxConfig cfg;
  cfg.max_iterations = 2000000;
  auto [st, rep] = relax_solve(net, law, Def3::diag(1.25, 1, 1), cfg);
  CHECK(rep.converged);
  CHECK(std::isfinite(rep.residual));
}
