#include "fibra/tensor.hpp"

#include <Eigen/Dense>

#include "fibra/error.hpp"

namespace fibra {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

Eigen::Matrix3d to_eigen(const Def3& a) {
  Eigen::Matrix3d e;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) e(i, j) = a(i, j);
  return e;
}

Def3 from_eigen(const Eigen::Matrix3d& e) {
  Def3 a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = e(i, j);
  return a;
}

}  // namespace

double Def3::det() const {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

Def3 Def3::inverse() const {
  const double d = det();
  if (d == 0.0) throw KinematicsError("singular 3x3 matrix");
  Def3 r;
  r.m[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d;
  r.m[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d;
  r.m[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
  r.m[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d;
  r.m[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d;
  r.m[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d;
  r.m[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d;
  r.m[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d;
  r.m[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d;
  return r;
}

Def3 Def3::transpose() const {
  Def3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
  return r;
}

Vec3 Def3::apply(const Vec3& x) const {
  return {m[0][0] * x[0] + m[0][1] * x[1] + m[0][2] * x[2],
          m[1][0] * x[0] + m[1][1] * x[1] + m[1][2] * x[2],
          m[2][0] * x[0] + m[2][1] * x[1] + m[2][2] * x[2]};
}

Def3 matmul(const Def3& a, const Def3& b) {
  Def3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
      r(i, j) = s;
    }
  return r;
}

double SymTensor3::operator()(int i, int j) const {
  if (i == j) return i == 0 ? xx : (i == 1 ? yy : zz);
  const int k = i + j;  // 1 -> xy, 2 -> xz, 3 -> yz
  return k == 1 ? xy : (k == 2 ? xz : yz);
}

void SymTensor3::set(int i, int j, double v) {
  if (i == j) {
    (i == 0 ? xx : (i == 1 ? yy : zz)) = v;
    return;
  }
  const int k = i + j;
  (k == 1 ? xy : (k == 2 ? xz : yz)) = v;
}

Def3 SymTensor3::full() const {
  Def3 a;
  a(0, 0) = xx;
  a(1, 1) = yy;
  a(2, 2) = zz;
  a(1, 2) = a(2, 1) = yz;
  a(0, 2) = a(2, 0) = xz;
  a(0, 1) = a(1, 0) = xy;
  return a;
}

SymTensor3 SymTensor3::from_full(const Def3& a) {
  SymTensor3 s;
  s.xx = a(0, 0);
  s.yy = a(1, 1);
  s.zz = a(2, 2);
  s.yz = 0.5 * (a(1, 2) + a(2, 1));
  s.xz = 0.5 * (a(0, 2) + a(2, 0));
  s.xy = 0.5 * (a(0, 1) + a(1, 0));
  return s;
}

double SymTensor3::ddot(const SymTensor3& a, const SymTensor3& b) {
  return a.xx * b.xx + a.yy * b.yy + a.zz * b.zz +
         2.0 * (a.yz * b.yz + a.xz * b.xz + a.xy * b.xy);
}

SymTensor3 SymTensor3::operator+(const SymTensor3& o) const {
  return {xx + o.xx, yy + o.yy, zz + o.zz, yz + o.yz, xz + o.xz, xy + o.xy};
}
SymTensor3 SymTensor3::operator-(const SymTensor3& o) const {
  return {xx - o.xx, yy - o.yy, zz - o.zz, yz - o.yz, xz - o.xz, xy - o.xy};
}
SymTensor3 SymTensor3::operator*(double s) const {
  return {xx * s, yy * s, zz * s, yz * s, xz * s, xy * s};
}

Mandel6 mandel(const SymTensor3& s) {
  Mandel6 v;
  v[0] = s.xx;
  v[1] = s.yy;
  v[2] = s.zz;
  v[3] = kSqrt2 * s.yz;
  v[4] = kSqrt2 * s.xz;
  v[5] = kSqrt2 * s.xy;
  return v;
}

SymTensor3 unmandel(const Mandel6& v) {
  SymTensor3 s;
  s.xx = v[0];
  s.yy = v[1];
  s.zz = v[2];
  s.yz = v[3] / kSqrt2;
  s.xz = v[4] / kSqrt2;
  s.xy = v[5] / kSqrt2;
  return s;
}

Mandel6 Mandel66::apply(const Mandel6& x) const {
  Mandel6 y;
  for (int i = 0; i < 6; ++i) {
    double s = 0;
    for (int j = 0; j < 6; ++j) s += m[i][j] * x[j];
    y[i] = s;
  }
  return y;
}

Mandel66 Mandel66::matmul(const Mandel66& o) const {
  Mandel66 r;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      double s = 0;
      for (int k = 0; k < 6; ++k) s += m[i][k] * o.m[k][j];
      r.m[i][j] = s;
    }
  return r;
}

Mandel66 Mandel66::transpose() const {
  Mandel66 r;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) r.m[i][j] = m[j][i];
  return r;
}

double Mandel66::frobenius() const {
  double s = 0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) s += m[i][j] * m[i][j];
  return std::sqrt(s);
}

Mandel66 Mandel66::operator+(const Mandel66& o) const {
  Mandel66 r;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) r.m[i][j] = m[i][j] + o.m[i][j];
  return r;
}
Mandel66 Mandel66::operator-(const Mandel66& o) const {
  Mandel66 r;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) r.m[i][j] = m[i][j] - o.m[i][j];
  return r;
}
Mandel66 Mandel66::operator*(double s) const {
  Mandel66 r;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) r.m[i][j] = m[i][j] * s;
  return r;
}

PolarDecomposition polar_decompose(const Def3& f) {
  const double j = f.det();
  if (!(j > 0.0))
    throw KinematicsError("polar decomposition requires det(F) > 0, got " +
                          std::to_string(j));
  const Eigen::Matrix3d fe = to_eigen(f);
  const Eigen::Matrix3d c = fe.transpose() * fe;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(c);
  if (es.info() != Eigen::Success)
    throw KinematicsError("eigendecomposition of F^T F failed");
  const Eigen::Vector3d lam = es.eigenvalues();
  if (lam.minCoeff() <= 0.0)
    throw KinematicsError("F^T F not positive definite");
  const Eigen::Vector3d sq = lam.array().sqrt();
  const Eigen::Matrix3d q = es.eigenvectors();
  const Eigen::Matrix3d u = q * sq.asDiagonal() * q.transpose();
  const Eigen::Matrix3d uinv = q * sq.cwiseInverse().asDiagonal() * q.transpose();
  PolarDecomposition pd;
  pd.rotation = from_eigen(fe * uinv);
  pd.stretch = SymTensor3::from_full(from_eigen(u));
  return pd;
}

SymTensor3 green_lagrange(const Def3& f) {
  const Def3 c = matmul(f.transpose(), f);
  SymTensor3 e = SymTensor3::from_full(c);
  e.xx = 0.5 * (e.xx - 1.0);
  e.yy = 0.5 * (e.yy - 1.0);
  e.zz = 0.5 * (e.zz - 1.0);
  e.yz *= 0.5;
  e.xz *= 0.5;
  e.xy *= 0.5;
  return e;
}

Mandel66 mandel_M_of_U(const SymTensor3& u) {
  // M_klpq = (d_kq U_pl + d_lq U_pk + d_kp U_ql + d_lp U_qk)/4, packed
  Mandel66 m;
  for (int p = 0; p < 6; ++p) {
    const int k = kMandelI[p], l = kMandelJ[p];
    const double wp = p < 3 ? 1.0 : kSqrt2;
    for (int q = 0; q < 6; ++q) {
      const int r = kMandelI[q], s = kMandelJ[q];
      const double wq = q < 3 ? 1.0 : kSqrt2;
      double v = 0.0;
      v += (k == s ? u(r, l) : 0.0);
      v += (l == s ? u(r, k) : 0.0);
      v += (k == r ? u(s, l) : 0.0);
      v += (l == r ? u(s, k) : 0.0);
      m(p, q) = 0.25 * wp * wq * v;
    }
  }
  return m;
}

Mandel66 probing_matrix() {
  Mandel66 t;
  const double h = 0.5;
  const double s = 0.5 * kSqrt2;
  const double rows[6][6] = {
      {h, 0, 0, 0, s, s},  //
      {0, h, 0, s, 0, s},  //
      {0, 0, h, s, s, 0},  //
      {0, 0, 0, 1, 0, 0},  //
      {0, 0, 0, 0, 1, 0},  //
      {0, 0, 0, 0, 0, 1},
  };
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) t(i, j) = rows[i][j];
  return t;
}

std::array<SymTensor3, 6> probing_directions() {
  const Mandel66 t = probing_matrix();
  std::array<SymTensor3, 6> dirs;
  for (int q = 0; q < 6; ++q) {
    Mandel6 col;
    for (int i = 0; i < 6; ++i) col[i] = t(i, q);
    dirs[q] = unmandel(col);
  }
  return dirs;
}

Mandel66 push_forward_stiffness(const Mandel66& a, const Def3& f) {
  const double j = f.det();
  if (!(j > 0.0)) throw KinematicsError("push-forward requires det(F) > 0");
  // B: Mandel matrix of S -> F S F^T, built column by column
  Mandel66 b;
  for (int q = 0; q < 6; ++q) {
    Mandel6 e{};
    e[q] = 1.0;
    const SymTensor3 s = unmandel(e);
    const Def3 fs = matmul(matmul(f, s.full()), f.transpose());
    const Mandel6 col = mandel(SymTensor3::from_full(fs));
    for (int p = 0; p < 6; ++p) b(p, q) = col[p];
  }
  return b.matmul(a).matmul(b.transpose()) * (1.0 / j);
}

SymTensor3 push_forward_stress(const SymTensor3& pk2, const Def3& f) {
  const double j = f.det();
  if (!(j > 0.0)) throw KinematicsError("push-forward requires det(F) > 0");
  const Def3 s = matmul(matmul(f, pk2.full()), f.transpose());
  return SymTensor3::from_full(s) * (1.0 / j);
}

SymTensor3 pull_back_stress(const SymTensor3& cauchy, const Def3& f) {
  const double j = f.det();
  if (!(j > 0.0)) throw KinematicsError("pull-back requires det(F) > 0");
  const Def3 finv = f.inverse();
  const Def3 s = matmul(matmul(finv, cauchy.full()), finv.transpose());
  return SymTensor3::from_full(s) * j;
}

SymTensor3 stretch_from_green_lagrange(const SymTensor3& e) {
  Eigen::Matrix3d c;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c(i, j) = 2.0 * e(i, j) + (i == j ? 1.0 : 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(c);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw KinematicsError("2E + I is not positive definite");
  const Eigen::Matrix3d u = es.eigenvectors() *
                            es.eigenvalues().array().sqrt().matrix().asDiagonal() *
                            es.eigenvectors().transpose();
  return SymTensor3::from_full(from_eigen(u));
}

}  // namespace fibra
