#pragma once

#include <cstddef>
#include <string>

namespace fibra::kernels {

// Vector kernels for the relaxation hot loop. Two implementations share
// one contract so results are bitwise identical across ISAs:
//  - elementwise ops round once per element, no FMA contraction
//    (the build sets -ffp-contract=off);
//  - reductions accumulate into 4 interleaved partial sums
//    s[k] += x[4*b + k], tail element r goes to s[r], combined as
//    (s0 + s1) + (s2 + s3).
// Equivalence is enforced by tests/test_kernels.cpp.

enum class Isa { scalar, avx2 };

struct Kernels {
  // y[i] += a * x[i]
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  // fd[i] = c*m[i]*v[i];  acc[i] = -(f[i] + fd[i]) * inv_m[i]
  void (*accel)(std::size_t n, const double* f, const double* m,
                const double* inv_m, double c, const double* v, double* fd,
                double* acc);
  // sum x[i]^2
  double (*norm2_sq)(std::size_t n, const double* x);
  // sum w[i]*x[i]^2
  double (*weighted_sq)(std::size_t n, const double* w, const double* x);
  // sum x[i]*y[i]
  double (*dot)(std::size_t n, const double* x, const double* y);
  void (*fill)(std::size_t n, double value, double* x);
  const char* name;
};

const Kernels& scalar_kernels();
bool avx2_supported();          // compiled in and supported by this CPU
const Kernels& avx2_kernels();  // throws if unavailable

// Process-wide active set; defaults to the best supported ISA.
const Kernels& active();
Isa active_isa();
void select(Isa isa);  // throws fibra::ConfigError if unsupported

Isa parse_isa(const std::string& name);  // "auto" | "scalar" | "avx2"
std::string isa_name(Isa isa);

}  // namespace fibra::kernels
