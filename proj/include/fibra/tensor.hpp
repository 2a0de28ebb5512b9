#pragma once

#include <array>
#include <cmath>

namespace fibra {

using Vec3 = std::array<double, 3>;

inline double dot3(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm3(const Vec3& a) { return std::sqrt(dot3(a, a)); }

// 3x3 deformation gradient, row-major. Valid states have det > 0.
struct Def3 {
  std::array<std::array<double, 3>, 3> m{};

  static Def3 identity() {
    Def3 f;
    f.m[0][0] = f.m[1][1] = f.m[2][2] = 1.0;
    return f;
  }
  static Def3 diag(double a, double b, double c) {
    Def3 f;
    f.m[0][0] = a;
    f.m[1][1] = b;
    f.m[2][2] = c;
    return f;
  }

  double& operator()(int i, int j) { return m[i][j]; }
  double operator()(int i, int j) const { return m[i][j]; }

  double det() const;
  Def3 inverse() const;
  Def3 transpose() const;
  Vec3 apply(const Vec3& x) const;  // F x
};

Def3 matmul(const Def3& a, const Def3& b);

// Symmetric 3x3 tensor stored as its 6 independent components.
struct SymTensor3 {
  double xx = 0, yy = 0, zz = 0, yz = 0, xz = 0, xy = 0;

  static SymTensor3 identity() { return {1, 1, 1, 0, 0, 0}; }

  double operator()(int i, int j) const;
  void set(int i, int j, double v);

  Def3 full() const;
  static SymTensor3 from_full(const Def3& a);  // symmetrizes

  double frobenius() const { return std::sqrt(ddot(*this, *this)); }
  static double ddot(const SymTensor3& a, const SymTensor3& b);  // a:b

  SymTensor3 operator+(const SymTensor3& o) const;
  SymTensor3 operator-(const SymTensor3& o) const;
  SymTensor3 operator*(double s) const;
};

// Mandel 6-vector, component order (11,22,33,23,13,12) with sqrt(2)
// weights on the shear entries. Preserves the inner product:
// mandel(S) . mandel(T) == S:T.
struct Mandel6 {
  std::array<double, 6> v{};
  double& operator[](int i) { return v[i]; }
  double operator[](int i) const { return v[i]; }
};

Mandel6 mandel(const SymTensor3& s);
SymTensor3 unmandel(const Mandel6& v);

// 6x6 Mandel matrix of a 4th-order tensor with both minor symmetries,
// same component order and weights as Mandel6 on both index pairs.
struct Mandel66 {
  std::array<std::array<double, 6>, 6> m{};

  static Mandel66 identity() {
    Mandel66 a;
    for (int i = 0; i < 6; ++i) a.m[i][i] = 1.0;
    return a;
  }

  double& operator()(int i, int j) { return m[i][j]; }
  double operator()(int i, int j) const { return m[i][j]; }

  Mandel6 apply(const Mandel6& x) const;  // [A] x, equals mandel(A:S)
  Mandel66 matmul(const Mandel66& o) const;
  Mandel66 transpose() const;
  double frobenius() const;

  Mandel66 operator+(const Mandel66& o) const;
  Mandel66 operator-(const Mandel66& o) const;
  Mandel66 operator*(double s) const;
};

// index pairs and weights of the Mandel component order
inline constexpr int kMandelI[6] = {0, 1, 2, 1, 0, 0};
inline constexpr int kMandelJ[6] = {0, 1, 2, 2, 2, 1};

struct PolarDecomposition {
  Def3 rotation;       // R, proper orthogonal
  SymTensor3 stretch;  // U, symmetric positive definite
};

// F = R U via the eigendecomposition of F^T F. Throws KinematicsError
// for det(F) <= 0.
PolarDecomposition polar_decompose(const Def3& f);

// E = (F^T F - I)/2
SymTensor3 green_lagrange(const Def3& f);

// [M] = dE/dU in Mandel form, the closed-form matrix built from U.
Mandel66 mandel_M_of_U(const SymTensor3& u);

// The fixed probing-direction matrix [T]; columns are the 6 probe
// tensors in Mandel form. Upper triangular, hence invertible.
Mandel66 probing_matrix();

// columns of [T] unpacked to symmetric tensors
std::array<SymTensor3, 6> probing_directions();

// C_mnpq = (1/J) F_mi F_nj A_ijrs F_pr F_qs, carried out in packed form
// so both minor symmetries hold exactly.
Mandel66 push_forward_stiffness(const Mandel66& a, const Def3& f);

// sigma = (1/J) F Pi F^T
SymTensor3 push_forward_stress(const SymTensor3& pk2, const Def3& f);

// Pi = J F^-1 sigma F^-T
SymTensor3 pull_back_stress(const SymTensor3& cauchy, const Def3& f);

// U such that U*U = 2E + I; E must keep 2E+I positive definite.
SymTensor3 stretch_from_green_lagrange(const SymTensor3& e);

}  // namespace fibra
