#include "oracles.hpp"

#include <cmath>

namespace oracle {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

Tensor4 Tensor4::from_mandel(const Mandel66& m) {
  Tensor4 t;
  for (int p = 0; p < 6; ++p) {
    const int i = fibra::kMandelI[p], j = fibra::kMandelJ[p];
    const double wp = p < 3 ? 1.0 : kSqrt2;
    for (int q = 0; q < 6; ++q) {
      const int k = fibra::kMandelI[q], l = fibra::kMandelJ[q];
      const double wq = q < 3 ? 1.0 : kSqrt2;
      const double v = m(p, q) / (wp * wq);
      t.a[i][j][k][l] = v;
      t.a[j][i][k][l] = v;
      t.a[i][j][l][k] = v;
      t.a[j][i][l][k] = v;
    }
  }
  return t;
}

Mandel66 Tensor4::to_mandel() const {
  Mandel66 m;
  for (int p = 0; p < 6; ++p) {
    const int i = fibra::kMandelI[p], j = fibra::kMandelJ[p];
    const double wp = p < 3 ? 1.0 : kSqrt2;
    for (int q = 0; q < 6; ++q) {
      const int k = fibra::kMandelI[q], l = fibra::kMandelJ[q];
      const double wq = q < 3 ? 1.0 : kSqrt2;
      m(p, q) = wp * wq * a[i][j][k][l];
    }
  }
  return m;
}

SymTensor3 Tensor4::contract(const SymTensor3& s) const {
  Def3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double v = 0;
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) v += a[i][j][k][l] * s(k, l);
      out(i, j) = v;
    }
  return SymTensor3::from_full(out);
}

Tensor4 push_forward_8index(const Tensor4& a, const Def3& f) {
  const double j = f.det();
  Tensor4 c;
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 3; ++n)
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) {
          double v = 0;
          for (int i = 0; i < 3; ++i)
            for (int jj = 0; jj < 3; ++jj)
              for (int r = 0; r < 3; ++r)
                for (int s = 0; s < 3; ++s)
                  v += f(m, i) * f(n, jj) * a.a[i][jj][r][s] * f(p, r) * f(q, s);
          c.a[m][n][p][q] = v / j;
        }
  return c;
}

Tensor4 m_of_u_4index(const SymTensor3& u) {
  Tensor4 t;
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l)
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) {
          double v = 0;
          if (k == q) v += u(p, l);
          if (l == q) v += u(p, k);
          if (k == p) v += u(q, l);
          if (l == p) v += u(q, k);
          t.a[k][l][p][q] = 0.25 * v;
        }
  return t;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

SymTensor3 random_sym(std::mt19937_64& rng, double scale) {
  SymTensor3 s;
  s.xx = uniform(rng, -scale, scale);
  s.yy = uniform(rng, -scale, scale);
  s.zz = uniform(rng, -scale, scale);
  s.yz = uniform(rng, -scale, scale);
  s.xz = uniform(rng, -scale, scale);
  s.xy = uniform(rng, -scale, scale);
  return s;
}

SymTensor3 random_spd(std::mt19937_64& rng) {
  const Def3 r = random_rotation(rng);
  const Def3 d = Def3::diag(uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 2.0),
                            uniform(rng, 0.5, 2.0));
  return SymTensor3::from_full(fibra::matmul(fibra::matmul(r, d), r.transpose()));
}

Def3 random_rotation(std::mt19937_64& rng) {
  // uniform quaternion
  double q[4];
  double n = 0;
  do {
    n = 0;
    for (double& v : q) {
      v = uniform(rng, -1.0, 1.0);
      n += v * v;
    }
  } while (n < 1e-8 || n > 1.0);
  n = std::sqrt(n);
  for (double& v : q) v /= n;
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Def3 r;
  r(0, 0) = 1 - 2 * (y * y + z * z);
  r(0, 1) = 2 * (x * y - w * z);
  r(0, 2) = 2 * (x * z + w * y);
  r(1, 0) = 2 * (x * y + w * z);
  r(1, 1) = 1 - 2 * (x * x + z * z);
  r(1, 2) = 2 * (y * z - w * x);
  r(2, 0) = 2 * (x * z - w * y);
  r(2, 1) = 2 * (y * z + w * x);
  r(2, 2) = 1 - 2 * (x * x + y * y);
  return r;
}

Def3 random_def(std::mt19937_64& rng, double spread) {
  while (true) {
    Def3 f = Def3::identity();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) f(i, j) += uniform(rng, -spread, spread);
    if (f.det() > 0.2) return f;
  }
}

Mandel66 random_mandel(std::mt19937_64& rng, double scale) {
  Mandel66 m;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) m(i, j) = uniform(rng, -scale, scale);
  return m;
}

fibra::FiberNetwork single_fiber() {
  std::vector<Vec3> coords{{-0.5, 0, 0}, {0.5, 0, 0}};
  std::vector<fibra::Fiber> fibers{{0, 1, 1.0, 1.0}};
  return fibra::FiberNetwork(std::move(coords), std::move(fibers));
}

double ChainFixture::interior_x(double lambda) const {
  const double l1 = mid_ref + 0.5;
  const double l2 = 0.5 - mid_ref;
  const double k1 = ea1 / l1, k2 = ea2 / l2;
  return (0.5 * lambda * (k2 - k1) + ea1 - ea2) / (k1 + k2);
}

ChainFixture two_segment_chain() {
  const double mid = -0.1, ea1 = 2.0, ea2 = 1.0;  // left segment stiffer
  std::vector<Vec3> coords{{-0.5, 0, 0}, {mid, 0, 0}, {0.5, 0, 0}};
  std::vector<fibra::Fiber> fibers{{0, 1, 1.0, ea1}, {1, 2, 1.0, ea2}};
  return ChainFixture{fibra::FiberNetwork(std::move(coords), std::move(fibers)), mid,
                      ea1, ea2};
}

fibra::FiberNetwork tripod() {
  std::vector<Vec3> coords{{0.05, 0.02, 0.1},
                           {0.5, 0.0, 0.0},
                           {-0.5, 0.3, 0.0},
                           {0.0, -0.5, 0.3}};
  std::vector<fibra::Fiber> fibers{{0, 1, 1.0, 1.0}, {0, 2, 1.0, 1.0}, {0, 3, 1.0, 1.0}};
  return fibra::FiberNetwork(std::move(coords), std::move(fibers));
}

}  // namespace oracle
