#pragma once

#include <cstdint>
#include <random>

#include "fibra/network.hpp"

namespace fibra {

// Deterministic network generation. Two styles:
//  - segments: random midpoint + direction-biased segment process, clipped
//    to the box, endpoints merged within merge_radius; fiber count exact.
//  - knn: Poisson points with face snapping, edges picked shortest-first
//    under an alignment-biased metric; node and fiber counts exact. These
//    networks are stiff enough for the implicit solver.
struct NetGenSpec {
  enum class Style { segments, knn };
  Style style = Style::segments;
  int fibers = 200;
  int nodes = 60;            // knn only
  double half_length = 0.3;  // segments only
  double merge_radius = 0.05;
  int neighbors = 8;  // knn candidate edges per node
  double align_bias = 0.0;
  Vec3 align_axis = {1, 0, 0};
  double fiber_area = 1.0;
  double fiber_modulus = 1.0;
  RveBox box{};
  double tol_bnd = 1e-6;

  void validate() const;
};

NetGenSpec::Style parse_netgen_style(const std::string& name);

FiberNetwork generate_network(const NetGenSpec& spec, std::uint64_t seed);

// engine-order-stable uniform in [0,1); std distributions are not
// reproducible across standard libraries
double uniform01(std::mt19937_64& rng);

// unit direction with density proportional to exp(bias * (d.axis)^2)
Vec3 sample_direction(std::mt19937_64& rng, double bias, const Vec3& axis);

}  // namespace fibra
