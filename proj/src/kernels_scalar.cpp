#include "fibra/kernels.hpp"

namespace fibra::kernels {

namespace {

void axpy_scalar(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void accel_scalar(std::size_t n, const double* f, const double* m,
                  const double* inv_m, double c, const double* v, double* fd,
                  double* acc) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = c * m[i] * v[i];
    fd[i] = d;
    acc[i] = -(f[i] + d) * inv_m[i];
  }
}

double norm2_sq_scalar(std::size_t n, const double* x) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  const std::size_t nb = n / 4 * 4;
  for (std::size_t i = 0; i < nb; i += 4) {
    s0 += x[i] * x[i];
    s1 += x[i + 1] * x[i + 1];
    s2 += x[i + 2] * x[i + 2];
    s3 += x[i + 3] * x[i + 3];
  }
  double* s[4] = {&s0, &s1, &s2, &s3};
  for (std::size_t i = nb; i < n; ++i) *s[i - nb] += x[i] * x[i];
  return (s0 + s1) + (s2 + s3);
}

double weighted_sq_scalar(std::size_t n, const double* w, const double* x) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  const std::size_t nb = n / 4 * 4;
  for (std::size_t i = 0; i < nb; i += 4) {
    s0 += w[i] * (x[i] * x[i]);
    s1 += w[i + 1] * (x[i + 1] * x[i + 1]);
    s2 += w[i + 2] * (x[i + 2] * x[i + 2]);
    s3 += w[i + 3] * (x[i + 3] * x[i + 3]);
  }
  double* s[4] = {&s0, &s1, &s2, &s3};
  for (std::size_t i = nb; i < n; ++i) *s[i - nb] += w[i] * (x[i] * x[i]);
  return (s0 + s1) + (s2 + s3);
}

double dot_scalar(std::size_t n, const double* x, const double* y) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  const std::size_t nb = n / 4 * 4;
  for (std::size_t i = 0; i < nb; i += 4) {
    s0 += x[i] * y[i];
    s1 += x[i + 1] * y[i + 1];
    s2 += x[i + 2] * y[i + 2];
    s3 += x[i + 3] * y[i + 3];
  }
  double* s[4] = {&s0, &s1, &s2, &s3};
  for (std::size_t i = nb; i < n; ++i) *s[i - nb] += x[i] * y[i];
  return (s0 + s1) + (s2 + s3);
}

void fill_scalar(std::size_t n, double value, double* x) {
  for (std::size_t i = 0; i < n; ++i) x[i] = value;
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k{axpy_scalar, accel_scalar,     norm2_sq_scalar,
                         weighted_sq_scalar, dot_scalar, fill_scalar,
                         "scalar"};
  return k;
}

}  // namespace fibra::kernels
