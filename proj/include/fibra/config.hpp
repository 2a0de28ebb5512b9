#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fibra/batch.hpp"
#include "fibra/kernels.hpp"
#include "fibra/macrofem.hpp"
#include "fibra/netgen.hpp"
#include "fibra/network.hpp"
#include "fibra/relax.hpp"
#include "fibra/stiffness.hpp"

namespace fibra {

enum class RunMode { rve, multiscale, bench, netgen, metrics };

RunMode parse_mode(const std::string& name);
std::string mode_name(RunMode mode);

// Single key/value config file with [sections]. Every run re-serializes
// the fully materialized config (all defaults resolved) so runs can be
// reproduced exactly.
struct RunConfig {
  RunMode mode = RunMode::rve;
  std::uint64_t seed = 1;
  int workers = 1;
  kernels::Isa isa = kernels::Isa::scalar;
  std::string isa_request = "auto";
  std::filesystem::path out = "out";

  FiberLaw law;
  RelaxConfig relax;
  StiffnessConfig stiffness;
  NewtonConfig newton;

  struct Rve {
    std::string network;
    std::string motion = "uniaxial";  // uniaxial | custom
    double stretch = 1.25;
    int steps = 10;
    int axis = 0;
    std::vector<Def3> f_targets;  // custom motion
  } rve;

  struct Multiscale {
    std::string mesh;
    std::string library;
    std::string dirichlet;  // set:axes:value; ...
    std::string neumann;    // set:tx ty tz; ...
    Vec3 p2_axis = {1, 0, 0};
  } multiscale;

  struct Bench {
    std::vector<int> batch_sizes = {1, 8, 64};
    std::vector<int> worker_counts = {1, 4, 8};
    int network_nodes = 60;
    int network_fibers = 160;
    double stretch = 1.05;
    int repeats = 1;
  } bench;

  struct NetGenOut {
    NetGenSpec spec;
    std::string out_network = "network.txt";
  } netgen;

  struct Metrics {
    std::string network;
    Vec3 axis = {1, 0, 0};
  } metrics;

  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig from_string(const std::string& text,
                               const std::filesystem::path& base_dir = ".");
  void write_resolved(const std::filesystem::path& path) const;

  BcSet parse_bcs() const;  // from multiscale.dirichlet / .neumann
};

}  // namespace fibra
