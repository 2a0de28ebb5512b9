#include "fibra/netgen.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <tuple>

#include "fibra/error.hpp"

namespace fibra {

void NetGenSpec::validate() const {
  if (fibers < 1) throw ConfigError("netgen: fiber count must be >= 1");
  if (style == Style::knn && nodes < 2)
    throw ConfigError("netgen: knn style needs >= 2 nodes");
  if (style == Style::segments && !(half_length > 0))
    throw ConfigError("netgen: half_length must be > 0");
  if (!(merge_radius >= 0)) throw ConfigError("netgen: merge_radius must be >= 0");
  if (neighbors < 1) throw ConfigError("netgen: neighbors must be >= 1");
  if (!(fiber_area > 0) || !(fiber_modulus > 0))
    throw ConfigError("netgen: fiber section data must be > 0");
  if (align_bias < 0) throw ConfigError("netgen: align_bias must be >= 0");
  if (!(norm3(align_axis) > 0)) throw ConfigError("netgen: align_axis is zero");
}

NetGenSpec::Style parse_netgen_style(const std::string& name) {
  if (name == "segments") return NetGenSpec::Style::segments;
  if (name == "knn") return NetGenSpec::Style::knn;
  throw ConfigError("unknown netgen style '" + name + "'");
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Vec3 sample_direction(std::mt19937_64& rng, double bias, const Vec3& axis) {
  const double an = norm3(axis);
  const Vec3 ax{axis[0] / an, axis[1] / an, axis[2] / an};
  while (true) {
    const double z = 2.0 * uniform01(rng) - 1.0;
    const double phi = 2.0 * 3.14159265358979323846 * uniform01(rng);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 d{r * std::cos(phi), r * std::sin(phi), z};
    if (bias == 0.0) return d;
    const double c = dot3(d, ax);
    if (uniform01(rng) <= std::exp(bias * (c * c - 1.0))) return d;
  }
}

namespace {

struct Builder {
  std::vector<Vec3> coords;
  std::vector<Fiber> fibers;
  std::set<std::pair<std::int32_t, std::int32_t>> edges;

  int find_merge(const Vec3& p, double radius) const {
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const Vec3 d{coords[i][0] - p[0], coords[i][1] - p[1], coords[i][2] - p[2]};
      if (norm3(d) <= radius) return static_cast<int>(i);
    }
    return -1;
  }

  // adds the segment only if it yields a fresh edge between distinct
  // nodes; never leaves orphan nodes behind
  bool try_add_segment(const Vec3& p0, const Vec3& p1, const NetGenSpec& spec) {
    int a = find_merge(p0, spec.merge_radius);
    int b = find_merge(p1, spec.merge_radius);
    if (a >= 0 && a == b) return false;
    if (a >= 0 && b >= 0) {
      auto key = std::minmax<std::int32_t>(a, b);
      if (edges.count({key.first, key.second})) return false;
    }
    if (a < 0) {
      coords.push_back(p0);
      a = static_cast<int>(coords.size()) - 1;
    }
    if (b < 0) {
      coords.push_back(p1);
      b = static_cast<int>(coords.size()) - 1;
    }
    auto key = std::minmax<std::int32_t>(a, b);
    edges.insert({key.first, key.second});
    fibers.push_back({static_cast<std::int32_t>(a), static_cast<std::int32_t>(b),
                      spec.fiber_area, spec.fiber_modulus});
    return true;
  }
};

// clip p0 + t (p1 - p0), t in [0,1], to the closed box; snaps clipped
// endpoints exactly onto the binding face
bool clip_to_box(Vec3& p0, Vec3& p1, double h) {
  double t0 = 0, t1 = 1;
  int face0 = -1, face1 = -1;
  for (int k = 0; k < 3; ++k) {
    const double d = p1[k] - p0[k];
    for (int sgn = -1; sgn <= 1; sgn += 2) {
      const double bound = sgn * h;
      const double num = bound - p0[k];
      if (d * sgn == 0.0) {
        if (p0[k] * sgn > h) return false;  // parallel and outside
        continue;
      }
      const double t = num / d;
      if (d * sgn > 0) {  // exiting through this face
        if (t < t1) {
          t1 = t;
          face1 = 2 * k + (sgn > 0 ? 1 : 0);
        }
      } else {  // entering
        if (t > t0) {
          t0 = t;
          face0 = 2 * k + (sgn > 0 ? 1 : 0);
        }
      }
    }
  }
  if (t0 >= t1) return false;
  const Vec3 q0{p0[0] + t0 * (p1[0] - p0[0]), p0[1] + t0 * (p1[1] - p0[1]),
                p0[2] + t0 * (p1[2] - p0[2])};
  const Vec3 q1{p0[0] + t1 * (p1[0] - p0[0]), p0[1] + t1 * (p1[1] - p0[1]),
                p0[2] + t1 * (p1[2] - p0[2])};
  p0 = q0;
  p1 = q1;
  if (face0 >= 0) p0[face0 / 2] = (face0 % 2 ? h : -h);
  if (face1 >= 0) p1[face1 / 2] = (face1 % 2 ? h : -h);
  for (int k = 0; k < 3; ++k) {
    p0[k] = std::clamp(p0[k], -h, h);
    p1[k] = std::clamp(p1[k], -h, h);
  }
  return true;
}

FiberNetwork build_segments(const NetGenSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Builder b;
  const double h = spec.box.half;
  int placed = 0;
  long attempts = 0;
  const long max_attempts = 10000L * spec.fibers + 10000;
  while (placed < spec.fibers) {
    if (++attempts > max_attempts)
      throw ConfigError("netgen: segment placement stalled; relax the spec");
    Vec3 mid{h * (2 * uniform01(rng) - 1), h * (2 * uniform01(rng) - 1),
             h * (2 * uniform01(rng) - 1)};
    const Vec3 dir = sample_direction(rng, spec.align_bias, spec.align_axis);
    Vec3 p0{mid[0] - spec.half_length * dir[0], mid[1] - spec.half_length * dir[1],
            mid[2] - spec.half_length * dir[2]};
    Vec3 p1{mid[0] + spec.half_length * dir[0], mid[1] + spec.half_length * dir[1],
            mid[2] + spec.half_length * dir[2]};
    if (!clip_to_box(p0, p1, h)) continue;
    const Vec3 d{p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]};
    if (norm3(d) <= 2.0 * spec.merge_radius + 1e-12) continue;
    if (b.try_add_segment(p0, p1, spec)) ++placed;
  }
  return FiberNetwork(std::move(b.coords), std::move(b.fibers), spec.box,
                      spec.tol_bnd);
}

FiberNetwork build_knn(const NetGenSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double h = spec.box.half;
  const double snap = 0.12 * 2.0 * h;  // face-snap band
  std::vector<Vec3> pts;
  pts.reserve(spec.nodes);
  while (static_cast<int>(pts.size()) < spec.nodes) {
    Vec3 p{h * (2 * uniform01(rng) - 1), h * (2 * uniform01(rng) - 1),
           h * (2 * uniform01(rng) - 1)};
    for (int k = 0; k < 3; ++k) {
      if (p[k] > h - snap) p[k] = h;
      if (p[k] < -h + snap) p[k] = -h;
    }
    bool too_close = false;
    for (const Vec3& q : pts) {
      const Vec3 d{p[0] - q[0], p[1] - q[1], p[2] - q[2]};
      if (norm3(d) < spec.merge_radius) {
        too_close = true;
        break;
      }
    }
    if (!too_close) pts.push_back(p);
  }

  const double an = norm3(spec.align_axis);
  const Vec3 ax{spec.align_axis[0] / an, spec.align_axis[1] / an,
                spec.align_axis[2] / an};
  const double shrink = std::exp(-spec.align_bias);
  auto metric = [&](int i, int j) {
    Vec3 d{pts[j][0] - pts[i][0], pts[j][1] - pts[i][1], pts[j][2] - pts[i][2]};
    const double axial = dot3(d, ax);
    for (int k = 0; k < 3; ++k) d[k] += (shrink - 1.0) * axial * ax[k];
    return norm3(d);
  };

  struct Cand {
    double len;
    std::int32_t a, b;
    bool operator<(const Cand& o) const {
      return std::tie(len, a, b) < std::tie(o.len, o.a, o.b);
    }
  };
  std::set<std::pair<std::int32_t, std::int32_t>> seen;
  std::vector<Cand> cands;
  const int n = spec.nodes;
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> near;
    for (int j = 0; j < n; ++j)
      if (j != i) near.push_back({metric(i, j), j});
    std::sort(near.begin(), near.end());
    const int kk = std::min<int>(spec.neighbors, static_cast<int>(near.size()));
    for (int k = 0; k < kk; ++k) {
      auto key = std::minmax<std::int32_t>(i, near[k].second);
      if (seen.insert({key.first, key.second}).second)
        cands.push_back({near[k].first, key.first, key.second});
    }
  }
  std::sort(cands.begin(), cands.end());
  if (static_cast<int>(cands.size()) < spec.fibers)
    throw ConfigError("netgen: knn candidate pool too small; raise neighbors");

  // cover every node first, then fill shortest-first to the exact count
  std::vector<int> degree(n, 0);
  std::vector<char> used(cands.size(), 0);
  std::vector<Cand> chosen;
  for (int i = 0; i < n; ++i) {
    if (degree[i] > 0) continue;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      if (used[c]) continue;
      if (cands[c].a == i || cands[c].b == i) {
        used[c] = 1;
        chosen.push_back(cands[c]);
        ++degree[cands[c].a];
        ++degree[cands[c].b];
        break;
      }
    }
  }
  if (static_cast<int>(chosen.size()) > spec.fibers)
    throw ConfigError("netgen: fiber budget below node-coverage minimum");
  for (std::size_t c = 0; c < cands.size() &&
                          static_cast<int>(chosen.size()) < spec.fibers;
       ++c) {
    if (!used[c]) {
      used[c] = 1;
      chosen.push_back(cands[c]);
      ++degree[cands[c].a];
      ++degree[cands[c].b];
    }
  }

  std::vector<Fiber> fibers;
  fibers.reserve(chosen.size());
  for (const Cand& c : chosen)
    fibers.push_back({c.a, c.b, spec.fiber_area, spec.fiber_modulus});
  FiberNetwork net(std::move(pts), std::move(fibers), spec.box, spec.tol_bnd);

  // every component must reach the boundary
  std::vector<int> root(n);
  for (int i = 0; i < n; ++i) root[i] = i;
  std::function<int(int)> find = [&](int x) {
    while (root[x] != x) x = root[x] = root[root[x]];
    return x;
  };
  for (const Fiber& f : net.fibers()) root[find(f.a)] = find(f.b);
  std::set<int> attached;
  for (std::int32_t bn : net.boundary_nodes()) attached.insert(find(bn));
  for (int i = 0; i < n; ++i)
    if (!attached.count(find(i)))
      throw ConfigError("netgen: component without boundary attachment "
                        "(node " + std::to_string(i) + "); try another seed");
  return net;
}

}  // namespace

FiberNetwork generate_network(const NetGenSpec& spec, std::uint64_t seed) {
  spec.validate();
  switch (spec.style) {
    case NetGenSpec::Style::segments:
      return build_segments(spec, seed);
    case NetGenSpec::Style::knn:
      return build_knn(spec, seed);
  }
  throw ConfigError("netgen: unknown style");
}

}  // namespace fibra
