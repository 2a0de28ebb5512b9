#include <doctest.h>

#include <random>
#include <vector>

#include "fibra/error.hpp"
#include "fibra/kernels.hpp"
#include "oracles.hpp"

using fibra::kernels::Kernels;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo,
                               double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = oracle::uniform(rng, lo, hi);
  return v;
}

// sizes that exercise the vector body and every tail length
const std::size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 63, 64, 65, 1023, 4096};

}  // namespace

TEST_CASE("scalar and avx2 kernels agree bitwise") {
  if (!fibra::kernels::avx2_supported()) {
    MESSAGE("avx2 not available on this machine; equivalence not exercised");
    return;
  }
  const Kernels& s = fibra::kernels::scalar_kernels();
  const Kernels& a = fibra::kernels::avx2_kernels();
  std::mt19937_64 rng(1234);

  for (std::size_t n : kSizes) {
    CAPTURE(n);
    const std::vector<double> x = random_vec(rng, n, -3, 3);
    const std::vector<double> y0 = random_vec(rng, n, -3, 3);
    const std::vector<double> w = random_vec(rng, n, 0.5, 2.0);

    SUBCASE("") {}  // keep doctest happy about empty loop bodies

    {
      std::vector<double> ys = y0, ya = y0;
      s.axpy(n, 0.37, x.data(), ys.data());
      a.axpy(n, 0.37, x.data(), ya.data());
      CHECK(ys == ya);
    }
    {
      std::vector<double> fd_s(n, 0), fd_a(n, 0), ac_s(n, 0), ac_a(n, 0);
      std::vector<double> inv(n);
      for (std::size_t i = 0; i < n; ++i) inv[i] = 1.0 / w[i];
      s.accel(n, x.data(), w.data(), inv.data(), 1.7, y0.data(), fd_s.data(),
              ac_s.data());
      a.accel(n, x.data(), w.data(), inv.data(), 1.7, y0.data(), fd_a.data(),
              ac_a.data());
      CHECK(fd_s == fd_a);
      CHECK(ac_s == ac_a);
    }
    CHECK(s.norm2_sq(n, x.data()) == a.norm2_sq(n, x.data()));
    CHECK(s.weighted_sq(n, w.data(), x.data()) == a.weighted_sq(n, w.data(), x.data()));
    CHECK(s.dot(n, x.data(), y0.data()) == a.dot(n, x.data(), y0.data()));
    {
      std::vector<double> fs(n, 1), fa(n, 2);
      s.fill(n, -0.25, fs.data());
      a.fill(n, -0.25, fa.data());
      CHECK(fs == fa);
    }
  }
}

TEST_CASE("kernel results are correct") {
  const Kernels& k = fibra::kernels::active();
  std::mt19937_64 rng(99);
  const std::size_t n = 257;
  const std::vector<double> x = random_vec(rng, n, -2, 2);
  std::vector<double> y = random_vec(rng, n, -2, 2);
  const std::vector<double> y0 = y;

  k.axpy(n, 0.5, x.data(), y.data());
  for (std::size_t i = 0; i < n; ++i)
    CHECK(y[i] == doctest::Approx(y0[i] + 0.5 * x[i]).epsilon(1e-15));

  double want = 0;
  for (double v : x) want += v * v;
  CHECK(k.norm2_sq(n, x.data()) == doctest::Approx(want).epsilon(1e-13));

  double dotw = 0;
  for (std::size_t i = 0; i < n; ++i) dotw += x[i] * y0[i];
  CHECK(k.dot(n, x.data(), y0.data()) == doctest::Approx(dotw).epsilon(1e-13));
}

TEST_CASE("isa selection") {
  CHECK(fibra::kernels::parse_isa("scalar") == fibra::kernels::Isa::scalar);
  CHECK_THROWS_AS(fibra::kernels::parse_isa("sse9"), fibra::ConfigError);
  const auto before = fibra::kernels::active_isa();
  fibra::kernels::select(fibra::kernels::Isa::scalar);
  CHECK(fibra::kernels::active_isa() == fibra::kernels::Isa::scalar);
  fibra::kernels::select(before);
}
