#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fibra/error.hpp"
#include "fibra/netgen.hpp"
#include "fibra/network.hpp"
#include "fibra/relax.hpp"
#include "oracles.hpp"

using namespace fibra;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "fibra_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("fiber law") {
  FiberLaw lin;
  CHECK(lin.force(2.0, 1.0) == 0.0);
  CHECK(lin.force(2.0, 1.3) == doctest::Approx(0.6));
  CHECK(lin.tangent(2.0, 1.3) == doctest::Approx(2.0));

  FiberLaw expo;
  expo.kind = FiberLaw::Kind::exponential;
  expo.nonlinearity = 2.0;
  CHECK(expo.force(1.0, 1.0) == 0.0);
  CHECK(expo.tangent(1.0, 1.0) == doctest::Approx(1.0));  // same tangent at 1
  CHECK(expo.force(1.0, 1.5) == doctest::Approx(0.5 * std::expm1(1.0)));
  // force is the derivative of energy wrt length
  const double l0 = 0.7, ea = 1.3, lam = 1.2, d = 1e-6;
  const double fd =
      (expo.energy(ea, lam + d / l0, l0) - expo.energy(ea, lam - d / l0, l0)) / (2 * d);
  CHECK(fd == doctest::Approx(expo.force(ea, lam)).epsilon(1e-6));

  FiberLaw buck = lin;
  buck.buckling_off = true;
  CHECK(buck.force(1.0, 0.9) == 0.0);
  CHECK(buck.force(1.0, 1.1) == doctest::Approx(0.1));

  FiberLaw bad;
  bad.ea_scale = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("network invariants enforced at construction") {
  std::vector<Vec3> coords{{-0.5, 0, 0}, {0.5, 0, 0}};
  SUBCASE("self edge") {
    std::vector<Fiber> fibers{{0, 0, 1, 1}};
    CHECK_THROWS_AS(FiberNetwork(coords, fibers), ConfigError);
  }
  SUBCASE("duplicate edge") {
    std::vector<Fiber> fibers{{0, 1, 1, 1}, {1, 0, 1, 1}};
    CHECK_THROWS_AS(FiberNetwork(coords, fibers), ConfigError);
  }
  SUBCASE("outside box") {
    std::vector<Vec3> far{{-0.7, 0, 0}, {0.5, 0, 0}};
    std::vector<Fiber> fibers{{0, 1, 1, 1}};
    CHECK_THROWS_AS(FiberNetwork(far, fibers), ConfigError);
  }
  SUBCASE("no boundary node") {
    std::vector<Vec3> inner{{-0.2, 0, 0}, {0.2, 0, 0}};
    std::vector<Fiber> fibers{{0, 1, 1, 1}};
    CHECK_THROWS_AS(FiberNetwork(inner, fibers), ConfigError);
  }
  SUBCASE("bad index") {
    std::vector<Fiber> fibers{{0, 5, 1, 1}};
    CHECK_THROWS_AS(FiberNetwork(coords, fibers), ConfigError);
  }
}

TEST_CASE("boundary detection and packing") {
  std::vector<Vec3> coords{{-0.5, 0, 0}, {0.1, 0.2, 0}, {0.5, 0, 0}};
  std::vector<Fiber> fibers{{0, 1, 1, 1}, {1, 2, 1, 1}};
  const FiberNetwork net(coords, fibers);
  CHECK(net.is_boundary(0));
  CHECK(!net.is_boundary(1));
  CHECK(net.is_boundary(2));
  CHECK(net.n_free() == 3);
  const DofMap& map = net.dof_map();
  for (int k = 0; k < 3; ++k) CHECK(map.packed_of_dof[3 * 1 + k] == k);
  for (int d = 0; d < net.n_dof(); ++d)
    CHECK(map.dof_of_packed[map.packed_of_dof[d]] == d);
}

TEST_CASE("network file round trip and reader errors") {
  const auto chain = oracle::two_segment_chain();
  const auto path = temp_file("roundtrip.txt");
  chain.net.write_file(path);
  const FiberNetwork back = FiberNetwork::read_file(path);
  CHECK(back.n_nodes() == chain.net.n_nodes());
  CHECK(back.n_fibers() == chain.net.n_fibers());
  // canonical rewrite is byte-identical
  const auto path2 = temp_file("roundtrip2.txt");
  back.write_file(path2);
  CHECK(slurp(path) == slurp(path2));

  SUBCASE("index out of range") {
    std::ofstream out(temp_file("bad1.txt"));
    out << "2 1\n-0.5 0 0\n0.5 0 0\n0 7 1 1\n";
    out.close();
    CHECK_THROWS_AS(FiberNetwork::read_file(temp_file("bad1.txt")), IoError);
  }
  SUBCASE("non-finite value") {
    std::ofstream out(temp_file("bad2.txt"));
    out << "2 1\n-0.5 0 0\nnan 0 0\n0 1 1 1\n";
    out.close();
    CHECK_THROWS_AS(FiberNetwork::read_file(temp_file("bad2.txt")), IoError);
  }
  SUBCASE("truncated") {
    std::ofstream out(temp_file("bad3.txt"));
    out << "2 1\n-0.5 0 0\n";
    out.close();
    CHECK_THROWS_AS(FiberNetwork::read_file(temp_file("bad3.txt")), IoError);
  }
}

TEST_CASE("affine boundary condition") {
  const auto chain = oracle::two_segment_chain();
  RveState state(chain.net);
  auto v = state.view();

  SUBCASE("identity leaves boundary at zero") {
    apply_affine_bc(chain.net, Def3::identity(), v);
    for (double x : v.fixed(v.u)) CHECK(x == 0.0);
  }
  SUBCASE("uniaxial values are exact") {
    apply_affine_bc(chain.net, Def3::diag(1.5, 1, 1), v);
    const auto& map = chain.net.dof_map();
    CHECK(v.u[map.packed_of_dof[3 * 2 + 0]] == 0.25);  // node at (0.5,0,0)
    CHECK(v.u[map.packed_of_dof[3 * 2 + 1]] == 0.0);
    for (double x : v.free(v.u)) CHECK(x == 0.0);
  }
  SUBCASE("idempotent") {
    apply_affine_bc(chain.net, Def3::diag(1.5, 1, 1), v);
    std::vector<double> once(v.u.begin(), v.u.end());
    apply_affine_bc(chain.net, Def3::diag(1.5, 1, 1), v);
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(v.u[i] == once[i]);
  }
}

TEST_CASE("internal forces") {
  SUBCASE("stress free at rest") {
    const auto net = oracle::tripod();
    std::vector<double> u(net.n_dof(), 0.0), f(net.n_dof(), 0.0);
    internal_forces(net, FiberLaw{}, u, f);
    for (double x : f) CHECK(x == 0.0);
  }
  SUBCASE("single fiber axial force") {
    const auto net = oracle::single_fiber();
    RveState st(net);
    auto v = st.view();
    const double lam = 1.25;
    apply_affine_bc(net, Def3::diag(lam, 1, 1), v);
    internal_forces(net, FiberLaw{}, v.u, v.f_int);
    const auto& map = net.dof_map();
    const double fr = v.f_int[map.packed_of_dof[3 * 1 + 0]];
    CHECK(fr == doctest::Approx(lam - 1.0).epsilon(1e-14));  // EA(lambda-1), EA=1
    const double fl = v.f_int[map.packed_of_dof[3 * 0 + 0]];
    CHECK(fl == doctest::Approx(-(lam - 1.0)).epsilon(1e-14));
  }
  SUBCASE("global force balance on random displacements") {
    NetGenSpec spec;
    spec.style = NetGenSpec::Style::knn;
    spec.nodes = 40;
    spec.fibers = 110;
    const FiberNetwork net = generate_network(spec, 5);
    std::mt19937_64 rng(8);
    std::vector<double> u(net.n_dof()), f(net.n_dof());
    for (double& x : u) x = oracle::uniform(rng, -0.05, 0.05);
    internal_forces(net, FiberLaw{}, u, f);
    double maxf = 0;
    for (double x : f) maxf = std::max(maxf, std::abs(x));
    const auto& map = net.dof_map();
    for (int ax = 0; ax < 3; ++ax) {
      double sum = 0;
      for (int n = 0; n < net.n_nodes(); ++n) sum += f[map.packed_of_dof[3 * n + ax]];
      CHECK(std::abs(sum) <= 1e-10 * std::max(1.0, maxf) * net.n_nodes());
    }
  }
  SUBCASE("frame indifference: forces rotate with the configuration") {
    const auto net = oracle::tripod();
    std::mt19937_64 rng(12);
    const Def3 r = oracle::random_rotation(rng);
    std::vector<double> u(net.n_dof()), ur(net.n_dof()), f(net.n_dof()),
        frot(net.n_dof());
    for (double& x : u) x = oracle::uniform(rng, -0.03, 0.03);
    const auto& ref = net.packed_ref_coords();
    const auto& map = net.dof_map();
    for (int n = 0; n < net.n_nodes(); ++n) {
      Vec3 x{};
      for (int k = 0; k < 3; ++k) {
        const int p = map.packed_of_dof[3 * n + k];
        x[k] = ref[p] + u[p];
      }
      const Vec3 rx = r.apply(x);
      for (int k = 0; k < 3; ++k)
        ur[map.packed_of_dof[3 * n + k]] = rx[k] - net.coords()[n][k];
    }
    internal_forces(net, FiberLaw{}, u, f);
    internal_forces(net, FiberLaw{}, ur, frot);
    for (int n = 0; n < net.n_nodes(); ++n) {
      Vec3 fn{}, fnr{};
      for (int k = 0; k < 3; ++k) {
        fn[k] = f[map.packed_of_dof[3 * n + k]];
        fnr[k] = frot[map.packed_of_dof[3 * n + k]];
      }
      const Vec3 rfn = r.apply(fn);
      for (int k = 0; k < 3; ++k)
        CHECK(std::abs(fnr[k] - rfn[k]) <= 1e-10 * std::max(1.0, norm3(fn)));
    }
  }
  SUBCASE("collapse is an error") {
    const auto net = oracle::single_fiber();
    RveState st(net);
    auto v = st.view();
    apply_affine_bc(net, Def3::diag(1e-10, 1, 1), v);
    std::vector<double> f(net.n_dof());
    CHECK_THROWS_AS(internal_forces(net, FiberLaw{}, v.u, f), SolverError);
  }
}

TEST_CASE("lumped mass") {
  SUBCASE("single fiber halves") {
    const auto net = oracle::single_fiber();
    const auto m = lumped_mass(net, 1.0);
    for (double x : m) CHECK(x == doctest::Approx(0.5));
  }
  SUBCASE("two collinear half fibers") {
    std::vector<Vec3> coords{{-0.5, 0, 0}, {0.0, 0, 0}, {0.5, 0, 0}};
    std::vector<Fiber> fibers{{0, 1, 1, 1}, {1, 2, 1, 1}};
    const FiberNetwork net(coords, fibers);
    const auto m = lumped_mass(net, 1.0);
    const auto& map = net.dof_map();
    CHECK(m[map.packed_of_dof[3 * 0]] == doctest::Approx(0.25));
    CHECK(m[map.packed_of_dof[3 * 1]] == doctest::Approx(0.5));
    CHECK(m[map.packed_of_dof[3 * 2]] == doctest::Approx(0.25));
  }
  SUBCASE("total mass is conserved") {
    NetGenSpec spec;
    spec.style = NetGenSpec::Style::knn;
    spec.nodes = 30;
    spec.fibers = 80;
    const FiberNetwork net = generate_network(spec, 3);
    const double density = 1.7;
    const auto m = lumped_mass(net, density);
    double total = 0;
    for (double x : m) total += x;
    double want = 0;
    for (int f = 0; f < net.n_fibers(); ++f)
      want += net.rest_length(f) * net.fibers()[f].area;
    CHECK(total / 3.0 == doctest::Approx(density * want).epsilon(1e-12));
  }
  SUBCASE("isolated node is an error") {
    std::vector<Vec3> coords{{-0.5, 0, 0}, {0.5, 0, 0}, {0.1, 0.1, 0.1}};
    std::vector<Fiber> fibers{{0, 1, 1, 1}};
    const FiberNetwork net(coords, fibers);
    CHECK_THROWS_AS(lumped_mass(net, 1.0), ConfigError);
  }
}

TEST_CASE("homogenized stress") {
  SUBCASE("requires convergence") {
    const auto net = oracle::single_fiber();
    RveState st(net);
    auto v = st.view();
    CHECK_THROWS_AS(homogenized_stress(net, v, Def3::identity(), net.box()),
                    SolverError);
  }
  SUBCASE("single spanning fiber closed form") {
    const auto net = oracle::single_fiber();
    const double lam = 1.2;
    RelaxConfig cfg;
    auto [st, rep] = relax_solve(net, FiberLaw{}, Def3::diag(lam, 1, 1), cfg);
    REQUIRE(rep.converged);  // no free DOFs
    auto v = st.view();
    const auto hs = homogenized_stress(net, v, Def3::diag(lam, 1, 1), net.box());
    const double want = (lam - 1.0) * lam / (lam * 1.0);  // EA(l-1) l / (J V)
    CHECK(hs.sigma.xx == doctest::Approx(want).epsilon(1e-12));
    CHECK(std::abs(hs.sigma.yy) <= 1e-15);
    CHECK(std::abs(hs.sigma.xy) <= 1e-15);
    CHECK(hs.asymmetry <= 1e-12);
    const SymTensor3 fsum = homogenized_stress_fiber_sum(net, FiberLaw{}, v,
                                                         Def3::diag(lam, 1, 1), net.box());
    CHECK(fsum.xx == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("orientation P2") {
  SUBCASE("aligned fibers give exactly 1") {
    std::vector<Vec3> coords{{-0.5, 0, 0}, {0.5, 0, 0}, {-0.5, 0.2, 0}, {0.5, 0.2, 0}};
    std::vector<Fiber> fibers{{0, 1, 1, 1}, {2, 3, 1, 1}};
    const FiberNetwork net(coords, fibers);
    std::vector<double> zero(net.n_dof(), 0.0);
    CHECK(orientation_p2(net, zero, {1, 0, 0}) == 1.0);
  }
  SUBCASE("perpendicular fibers give exactly -1/2") {
    const auto net = oracle::single_fiber();
    std::vector<double> zero(net.n_dof(), 0.0);
    CHECK(orientation_p2(net, zero, {0, 1, 0}) == -0.5);
    CHECK(orientation_p2(net, zero, {0, 0, 1}) == -0.5);
  }
  SUBCASE("magic angle gives zero") {
    // corner diagonals along (1,1,1)/sqrt(3): cos^2 with e3 is 1/3
    std::vector<Vec3> coords{{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5},
                             {0.5, -0.5, -0.5}, {-0.5, 0.5, 0.5}};
    std::vector<Fiber> fibers{{0, 1, 1, 1}, {2, 3, 1, 1}};
    const FiberNetwork net(coords, fibers);
    std::vector<double> zero(net.n_dof(), 0.0);
    CHECK(std::abs(orientation_p2(net, zero, {0, 0, 1})) <= 1e-14);
  }
  SUBCASE("bounds hold for random states") {
    NetGenSpec spec;
    spec.style = NetGenSpec::Style::knn;
    spec.nodes = 30;
    spec.fibers = 80;
    const FiberNetwork net = generate_network(spec, 9);
    std::mt19937_64 rng(10);
    std::vector<double> u(net.n_dof());
    for (int it = 0; it < 10; ++it) {
      for (double& x : u) x = oracle::uniform(rng, -0.2, 0.2);
      const double p2 = orientation_p2(net, u, {0, 1, 0});
      CHECK(p2 >= -0.5);
      CHECK(p2 <= 1.0);
    }
  }
}

TEST_CASE("network generator") {
  SUBCASE("segments style is deterministic and hits the fiber count") {
    NetGenSpec spec;
    spec.fibers = 120;
    spec.half_length = 0.35;
    spec.merge_radius = 0.06;
    const FiberNetwork a = generate_network(spec, 77);
    const FiberNetwork b = generate_network(spec, 77);
    CHECK(a.n_fibers() == 120);
    CHECK(a.n_nodes() == b.n_nodes());
    const auto pa = temp_file("gen_a.txt"), pb = temp_file("gen_b.txt");
    a.write_file(pa);
    b.write_file(pb);
    CHECK(slurp(pa) == slurp(pb));
    CHECK(!a.boundary_nodes().empty());
  }
  SUBCASE("different seed differs") {
    NetGenSpec spec;
    spec.fibers = 60;
    const FiberNetwork a = generate_network(spec, 1);
    const FiberNetwork b = generate_network(spec, 2);
    bool same = a.n_nodes() == b.n_nodes();
    if (same)
      for (int i = 0; i < a.n_nodes() && same; ++i) same = a.coords()[i] == b.coords()[i];
    CHECK(!same);
  }
  SUBCASE("knn style hits exact node and fiber counts") {
    NetGenSpec spec;
    spec.style = NetGenSpec::Style::knn;
    spec.nodes = 50;
    spec.fibers = 140;
    const FiberNetwork net = generate_network(spec, 4);
    CHECK(net.n_nodes() == 50);
    CHECK(net.n_fibers() == 140);
  }
  SUBCASE("direction sampler is isotropic at zero bias") {
    std::mt19937_64 rng(2024);
    double acc = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const Vec3 d = sample_direction(rng, 0.0, {1, 0, 0});
      acc += 0.5 * (3.0 * d[0] * d[0] - 1.0);
    }
    CHECK(std::abs(acc / n) <= 0.05);
  }
  SUBCASE("alignment bias raises P2 toward the axis") {
    std::mt19937_64 rng(2025);
    double acc = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const Vec3 d = sample_direction(rng, 4.0, {0, 0, 1});
      acc += 0.5 * (3.0 * d[2] * d[2] - 1.0);
    }
    CHECK(acc / n > 0.3);
  }
}
