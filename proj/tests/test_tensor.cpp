#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fibra/error.hpp"
#include "fibra/tensor.hpp"
#include "oracles.hpp"

using namespace fibra;

namespace {
double rel(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}
}  // namespace

TEST_CASE("mandel inner product is preserved") {
  std::mt19937_64 rng(42);
  for (int it = 0; it < 100; ++it) {
    const SymTensor3 s = oracle::random_sym(rng);
    const SymTensor3 t = oracle::random_sym(rng);
    const Mandel6 vs = mandel(s), vt = mandel(t);
    double dot = 0;
    for (int i = 0; i < 6; ++i) dot += vs[i] * vt[i];
    const double dd = SymTensor3::ddot(s, t);
    CHECK(std::abs(dot - dd) <= 1e-12 * std::max(1.0, std::abs(dd)));
  }
}

TEST_CASE("mandel round trip and 4th order pack/unpack") {
  std::mt19937_64 rng(7);
  for (int it = 0; it < 20; ++it) {
    const SymTensor3 s = oracle::random_sym(rng);
    const SymTensor3 back = unmandel(mandel(s));
    CHECK(back.xx == s.xx);
    CHECK(back.yz == doctest::Approx(s.yz).epsilon(1e-15));

    const Mandel66 m = oracle::random_mandel(rng);
    const Mandel66 again = oracle::Tensor4::from_mandel(m).to_mandel();
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) CHECK(again(i, j) == doctest::Approx(m(i, j)));
  }
}

TEST_CASE("mandel66 apply equals brute-force contraction") {
  std::mt19937_64 rng(11);
  for (int it = 0; it < 50; ++it) {
    const Mandel66 m = oracle::random_mandel(rng);
    const SymTensor3 s = oracle::random_sym(rng);
    const SymTensor3 got = unmandel(m.apply(mandel(s)));
    const SymTensor3 want = oracle::Tensor4::from_mandel(m).contract(s);
    CHECK(std::abs(got.xx - want.xx) < 1e-12);
    CHECK(std::abs(got.yz - want.yz) < 1e-12);
    CHECK(std::abs(got.xy - want.xy) < 1e-12);
  }
}

TEST_CASE("polar decomposition basics") {
  SUBCASE("identity") {
    const auto pd = polar_decompose(Def3::identity());
    CHECK(pd.rotation(0, 0) == doctest::Approx(1.0));
    CHECK(pd.stretch.xx == doctest::Approx(1.0));
    CHECK(pd.stretch.xy == doctest::Approx(0.0));
  }
  SUBCASE("pure stretch") {
    const auto pd = polar_decompose(Def3::diag(2, 1, 1));
    CHECK(pd.rotation(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pd.rotation(0, 1) == doctest::Approx(0.0));
    CHECK(pd.stretch.xx == doctest::Approx(2.0));
    CHECK(pd.stretch.yy == doctest::Approx(1.0));
  }
  SUBCASE("pure rotation about e3") {
    Def3 r{};
    r(0, 1) = -1;
    r(1, 0) = 1;
    r(2, 2) = 1;
    const auto pd = polar_decompose(r);
    CHECK(pd.stretch.xx == doctest::Approx(1.0));
    CHECK(pd.stretch.yy == doctest::Approx(1.0));
    CHECK(pd.stretch.xy == doctest::Approx(0.0));
    CHECK(pd.rotation(0, 1) == doctest::Approx(-1.0));
  }
  SUBCASE("reflection rejected") {
    CHECK_THROWS_AS(polar_decompose(Def3::diag(-1, 1, 1)), KinematicsError);
  }
}

TEST_CASE("polar decomposition properties on random F") {
  std::mt19937_64 rng(3);
  for (int it = 0; it < 100; ++it) {
    const Def3 f = oracle::random_def(rng, 0.4);
    const auto pd = polar_decompose(f);
    const Def3 ru = matmul(pd.rotation, pd.stretch.full());
    double fnorm = 0, enorm = 0, rtr = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        fnorm += f(i, j) * f(i, j);
        enorm += (f(i, j) - ru(i, j)) * (f(i, j) - ru(i, j));
        double v = 0;
        for (int k = 0; k < 3; ++k) v += pd.rotation(k, i) * pd.rotation(k, j);
        rtr += (v - (i == j ? 1 : 0)) * (v - (i == j ? 1 : 0));
      }
    CHECK(std::sqrt(enorm) <= 1e-10 * std::sqrt(fnorm));
    CHECK(std::sqrt(rtr) <= 1e-12);
    // min eigenvalue of U > 0 via det of leading minors
    const Def3 u = pd.stretch.full();
    CHECK(u(0, 0) > 0);
    CHECK(u(0, 0) * u(1, 1) - u(0, 1) * u(1, 0) > 0);
    CHECK(u.det() > 0);
  }
}

TEST_CASE("green lagrange strain") {
  SUBCASE("identity gives zero") {
    const SymTensor3 e = green_lagrange(Def3::identity());
    CHECK(e.frobenius() == doctest::Approx(0.0));
  }
  SUBCASE("uniaxial 1.1 stretch") {
    const SymTensor3 e = green_lagrange(Def3::diag(1.1, 1, 1));
    CHECK(e.xx == doctest::Approx(0.105).epsilon(1e-14));
    CHECK(e.yy == doctest::Approx(0.0));
    CHECK(e.xy == doctest::Approx(0.0));
  }
  SUBCASE("rotations give zero") {
    std::mt19937_64 rng(5);
    for (int it = 0; it < 20; ++it) {
      const SymTensor3 e = green_lagrange(oracle::random_rotation(rng));
      CHECK(e.frobenius() <= 1e-14);
    }
  }
}

TEST_CASE("stretch_from_green_lagrange inverts green_lagrange") {
  std::mt19937_64 rng(17);
  for (int it = 0; it < 20; ++it) {
    const SymTensor3 u = oracle::random_spd(rng);
    const SymTensor3 e = green_lagrange(u.full());
    const SymTensor3 back = stretch_from_green_lagrange(e);
    CHECK((back - u).frobenius() <= 1e-12 * std::max(1.0, u.frobenius()));
  }
}

TEST_CASE("mandel M of U") {
  SUBCASE("identity U gives identity matrix") {
    const Mandel66 m = mandel_M_of_U(SymTensor3::identity());
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        CHECK(m(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));
  }
  SUBCASE("paper entries for U11=2") {
    SymTensor3 u = SymTensor3::identity();
    u.xx = 2.0;
    const Mandel66 m = mandel_M_of_U(u);
    CHECK(m(0, 0) == doctest::Approx(2.0));           // 2*U11/2
    CHECK(m(4, 4) == doctest::Approx(1.5));           // (U11+U33)/2
    CHECK(m(3, 3) == doctest::Approx(1.0));           // (U22+U33)/2
    CHECK(m(5, 5) == doctest::Approx(1.5));           // (U11+U22)/2
  }
  SUBCASE("matches 4-index definition on random SPD U") {
    std::mt19937_64 rng(23);
    for (int it = 0; it < 100; ++it) {
      const SymTensor3 u = oracle::random_spd(rng);
      const SymTensor3 s = oracle::random_sym(rng);
      const SymTensor3 got = unmandel(mandel_M_of_U(u).apply(mandel(s)));
      const SymTensor3 want = oracle::m_of_u_4index(u).contract(s);
      CHECK(std::abs(got.xx - want.xx) <= 1e-12);
      CHECK(std::abs(got.yy - want.yy) <= 1e-12);
      CHECK(std::abs(got.zz - want.zz) <= 1e-12);
      CHECK(std::abs(got.yz - want.yz) <= 1e-12);
      CHECK(std::abs(got.xz - want.xz) <= 1e-12);
      CHECK(std::abs(got.xy - want.xy) <= 1e-12);
    }
  }
  SUBCASE("packed matrix matches paper display on random U") {
    std::mt19937_64 rng(29);
    const SymTensor3 u = oracle::random_spd(rng);
    const Mandel66 m = mandel_M_of_U(u);
    const double s2 = std::sqrt(2.0);
    CHECK(m(0, 0) == doctest::Approx(u.xx));
    CHECK(m(0, 4) == doctest::Approx(0.5 * s2 * u.xz));
    CHECK(m(0, 5) == doctest::Approx(0.5 * s2 * u.xy));
    CHECK(m(1, 3) == doctest::Approx(0.5 * s2 * u.yz));
    CHECK(m(3, 3) == doctest::Approx(0.5 * (u.yy + u.zz)));
    CHECK(m(3, 4) == doctest::Approx(0.5 * u.xy));
    CHECK(m(3, 5) == doctest::Approx(0.5 * u.xz));
    CHECK(m(4, 4) == doctest::Approx(0.5 * (u.xx + u.zz)));
    CHECK(m(5, 5) == doctest::Approx(0.5 * (u.xx + u.yy)));
    // symmetric
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) CHECK(m(i, j) == doctest::Approx(m(j, i)));
  }
}

TEST_CASE("probing directions") {
  const auto dirs = probing_directions();
  SUBCASE("column 1 matches the fixed matrix") {
    const Mandel6 c0 = mandel(dirs[0]);
    CHECK(c0[0] == doctest::Approx(0.5));
    CHECK(c0[1] == doctest::Approx(0.0));
    CHECK(c0[2] == doctest::Approx(0.0));
    CHECK(c0[3] == doctest::Approx(0.0));
    CHECK(c0[4] == doctest::Approx(0.0));
    CHECK(c0[5] == doctest::Approx(0.0));
  }
  SUBCASE("all columns symmetric by construction and PSD") {
    // Numerical eigensolve shows the probes are only positive
    // SEMIdefinite, not definite: that still keeps U + hT SPD.
    // Frozen fixtures: cols 1-3 have {0, 0, 1/2}, cols 4-6 {0, 0, sqrt(2)}.
    for (int q = 0; q < 6; ++q) {
      Eigen::Matrix3d m;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = dirs[q](i, j);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
      const Eigen::Vector3d ev = es.eigenvalues();
      CHECK(ev.minCoeff() >= -1e-12);
      CHECK(std::abs(ev[0]) <= 1e-12);
      CHECK(std::abs(ev[1]) <= 1e-12);
      CHECK(ev[2] == doctest::Approx(q < 3 ? 0.5 : std::sqrt(2.0)));
    }
  }
  SUBCASE("probe matrix is invertible") {
    const Mandel66 t = probing_matrix();
    // upper triangular: determinant is the diagonal product
    double det = 1;
    for (int i = 0; i < 6; ++i) det *= t(i, i);
    CHECK(det == doctest::Approx(std::pow(0.5, 3)));
    for (int i = 1; i < 6; ++i)
      for (int j = 0; j < i; ++j) CHECK(t(i, j) == 0.0);
  }
}

TEST_CASE("push forward stiffness") {
  std::mt19937_64 rng(31);
  SUBCASE("identity F is a no-op") {
    const Mandel66 a = oracle::random_mandel(rng);
    const Mandel66 c = push_forward_stiffness(a, Def3::identity());
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) CHECK(c(i, j) == doctest::Approx(a(i, j)));
  }
  SUBCASE("isotropic doubling scales by 2") {
    const Mandel66 a = Mandel66::identity();
    const Mandel66 c = push_forward_stiffness(a, Def3::diag(2, 2, 2));
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        CHECK(c(i, j) == doctest::Approx(i == j ? 2.0 : 0.0));
  }
  SUBCASE("matches 8-index brute force") {
    for (int it = 0; it < 20; ++it) {
      // minor-symmetric random A
      const Mandel66 a = oracle::random_mandel(rng);
      const Def3 f = oracle::random_def(rng, 0.3);
      const Mandel66 got = push_forward_stiffness(a, f);
      const Mandel66 want =
          oracle::push_forward_8index(oracle::Tensor4::from_mandel(a), f).to_mandel();
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
          CHECK(rel(got(i, j), want(i, j)) <= 1e-12);
    }
  }
}

TEST_CASE("stress push forward and pull back") {
  SUBCASE("identity") {
    SymTensor3 p;
    p.xx = 3;
    p.xy = -1;
    const SymTensor3 s = push_forward_stress(p, Def3::identity());
    CHECK(s.xx == doctest::Approx(3.0));
    CHECK(s.xy == doctest::Approx(-1.0));
  }
  SUBCASE("zero stays zero") {
    const SymTensor3 s = push_forward_stress({}, Def3::diag(2, 1, 1));
    CHECK(s.frobenius() == 0.0);
  }
  SUBCASE("uniaxial example") {
    SymTensor3 p;
    p.xx = 0.7;
    const SymTensor3 s = push_forward_stress(p, Def3::diag(2, 1, 1));
    CHECK(s.xx == doctest::Approx(2 * 0.7));  // (1/2)*2*2*0.7
    CHECK(s.yy == doctest::Approx(0.0));
  }
  SUBCASE("pull back inverts push forward") {
    std::mt19937_64 rng(37);
    for (int it = 0; it < 30; ++it) {
      const Def3 f = oracle::random_def(rng, 0.4);
      const SymTensor3 p = oracle::random_sym(rng);
      const SymTensor3 back = pull_back_stress(push_forward_stress(p, f), f);
      CHECK((back - p).frobenius() <= 1e-12 * std::max(1.0, p.frobenius()));
    }
  }
}
