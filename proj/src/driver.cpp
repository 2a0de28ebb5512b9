#include "fibra/driver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "fibra/batch.hpp"
#include "fibra/error.hpp"
#include "fibra/implicit.hpp"
#include "fibra/kernels.hpp"
#include "fibra/macrofem.hpp"
#include "fibra/netgen.hpp"

namespace fibra {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void prepare_out(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out);
  kernels::select(cfg.isa);
  cfg.write_resolved(cfg.out / "resolved.ini");
}

std::vector<Def3> rve_motion(const RunConfig& cfg) {
  if (cfg.rve.motion == "custom") {
    if (cfg.rve.f_targets.empty())
      throw ConfigError("custom rve motion needs f_targets");
    for (const Def3& f : cfg.rve.f_targets)
      if (!(f.det() > 0)) throw ConfigError("f_targets entry has det <= 0");
    return cfg.rve.f_targets;
  }
  if (cfg.rve.steps < 1) throw ConfigError("[rve] steps must be >= 1");
  std::vector<Def3> out;
  for (int k = 1; k <= cfg.rve.steps; ++k) {
    Def3 f = Def3::identity();
    f(cfg.rve.axis, cfg.rve.axis) =
        1.0 + (cfg.rve.stretch - 1.0) * k / cfg.rve.steps;
    out.push_back(f);
  }
  return out;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv(const std::filesystem::path& path, const std::string& expect_schema,
                  int max_version) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open csv " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty csv " + path.string());
  CsvTable t;
  {
    std::istringstream s(line);
    std::string hash, word, name, ver;
    s >> hash >> word >> name >> ver;
    if (hash != "#" || word != "schema" || name.empty() || ver.size() < 2 ||
        ver[0] != 'v')
      throw IoError("csv " + path.string() + " has no schema line");
    t.schema = name;
    t.version = std::atoi(ver.c_str() + 1);
  }
  if (t.schema != expect_schema)
    throw IoError("csv " + path.string() + " has schema '" + t.schema +
                  "', expected '" + expect_schema + "'");
  if (t.version < 1 || t.version > max_version)
    throw IoError("csv " + path.string() + " has unsupported schema version v" +
                  std::to_string(t.version));
  if (!std::getline(in, line)) throw IoError("csv " + path.string() + " has no header");
  {
    std::istringstream s(line);
    std::string col;
    while (std::getline(s, col, ',')) t.columns.push_back(col);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream s(line);
    std::vector<double> row;
    std::string cell;
    while (std::getline(s, cell, ',')) row.push_back(std::atof(cell.c_str()));
    if (row.size() != t.columns.size())
      throw IoError("csv " + path.string() + " has a ragged row");
    t.rows.push_back(std::move(row));
  }
  return t;
}

int run_rve(const RunConfig& cfg) {
  prepare_out(cfg);
  if (cfg.rve.network.empty()) throw ConfigError("[rve] network path is required");
  const FiberNetwork net = FiberNetwork::read_file(cfg.rve.network);
  const std::vector<Def3> motion = rve_motion(cfg);

  std::ofstream out(cfg.out / "rve_history.csv");
  if (!out) throw IoError("cannot write rve_history.csv");
  out << "# schema rve_history v1\n";
  out << "step";
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 3; ++j) out << ",f" << i << j;
  out << ",sxx,syy,szz,syz,sxz,sxy";
  for (int i = 1; i <= 6; ++i)
    for (int j = 1; j <= 6; ++j) out << ",c" << i << j;
  out << ",p2,iterations,solves,residual,converged\n";

  RveState state(net);
  bool all_converged = true;
  for (std::size_t k = 0; k < motion.size(); ++k) {
    const Def3& f = motion[k];
    Response r;
    bool step_ok = true;
    try {
      r = constitutive_response(net, cfg.law, f, cfg.relax, cfg.stiffness,
                                state.view());
    } catch (const SolverError& e) {
      std::cerr << "rve step " << k << ": " << e.what() << "\n";
      all_converged = false;
      step_ok = false;
    }
    if (!step_ok) break;
    const double p2 =
        orientation_p2(net, state.view().u, {1, 0, 0});
    out << k + 1;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out << ',' << fmt(f(i, j));
    const SymTensor3& s = r.sigma;
    for (double v : {s.xx, s.yy, s.zz, s.yz, s.xz, s.xy}) out << ',' << fmt(v);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) out << ',' << fmt(r.spatial_c(i, j));
    out << ',' << fmt(p2) << ',' << r.stats.relax_iterations << ','
        << r.stats.solves << ',' << fmt(r.base_report.residual) << ",1\n";
  }
  if (!out) throw IoError("failed writing rve_history.csv");
  return all_converged ? kExitOk : kExitSolver;
}

namespace {

void write_multiscale_outputs(const RunConfig& cfg, const MacroMesh& mesh,
                              const SolveHistory& hist, double pull_len,
                              double section_area, const std::string& pull_set) {
  char name[64];
  for (std::size_t inc = 0; inc < hist.increments.size(); ++inc) {
    const IncrementRecord& rec = hist.increments[inc];
    std::snprintf(name, sizeof name, "elements_%03zu.csv", inc + 1);
    std::ofstream ef(cfg.out / name);
    ef << "# schema element_state v1\n";
    ef << "element,sxx,syy,szz,syz,sxz,sxy,p2\n";
    for (int e = 0; e < mesh.n_elements(); ++e) {
      const SymTensor3& s = rec.stress[e];
      ef << e;
      for (double v : {s.xx, s.yy, s.zz, s.yz, s.xz, s.xy}) ef << ',' << fmt(v);
      ef << ',' << fmt(rec.orientation[e]) << '\n';
    }
  }
  {
    std::ofstream df(cfg.out / "displacements.txt");
    df << mesh.n_nodes() << '\n';
    for (int n = 0; n < mesh.n_nodes(); ++n)
      df << n << ' ' << fmt(hist.displacement[n][0]) << ' '
         << fmt(hist.displacement[n][1]) << ' ' << fmt(hist.displacement[n][2])
         << '\n';
  }
  std::ofstream hf(cfg.out / "history.csv");
  hf << "# schema multiscale_history v1\n";
  hf << "increment,ramp,strain,reaction_x,reaction_y,reaction_z,nominal_stress,"
        "mean_p2,var_p2,iterations\n";
  for (std::size_t inc = 0; inc < hist.increments.size(); ++inc) {
    const IncrementRecord& rec = hist.increments[inc];
    Vec3 reaction{};
    if (auto it = rec.reactions.find(pull_set); it != rec.reactions.end())
      reaction = it->second;
    double mean = 0, var = 0;
    int n_p2 = 0;
    for (double p : rec.orientation)
      if (std::isfinite(p)) {
        mean += p;
        ++n_p2;
      }
    if (n_p2 > 0) mean /= n_p2;
    for (double p : rec.orientation)
      if (std::isfinite(p)) var += (p - mean) * (p - mean);
    if (n_p2 > 1) var /= (n_p2 - 1);
    const double strain = rec.ramp * pull_len;
    hf << inc + 1 << ',' << fmt(rec.ramp) << ',' << fmt(strain) << ','
       << fmt(reaction[0]) << ',' << fmt(reaction[1]) << ',' << fmt(reaction[2])
       << ',' << fmt(reaction[0] / section_area) << ',' << fmt(mean) << ','
       << fmt(var) << ',' << rec.iterations << '\n';
  }

  // tangent stiffness vs stress by differencing the reaction curve
  std::ofstream tf(cfg.out / "tangent_vs_stress.csv");
  tf << "# schema tangent_vs_stress v1\n";
  tf << "stress,tangent\n";
  for (std::size_t inc = 1; inc < hist.increments.size(); ++inc) {
    const IncrementRecord& a = hist.increments[inc - 1];
    const IncrementRecord& b = hist.increments[inc];
    auto ra = a.reactions.count(pull_set) ? a.reactions.at(pull_set)[0] : 0.0;
    auto rb = b.reactions.count(pull_set) ? b.reactions.at(pull_set)[0] : 0.0;
    const double s_mid = 0.5 * (ra + rb) / section_area;
    const double de = (b.ramp - a.ramp) * pull_len;
    if (de > 0) tf << fmt(s_mid) << ',' << fmt((rb - ra) / section_area / de) << '\n';
  }
}

}  // namespace

int run_multiscale(const RunConfig& cfg) {
  prepare_out(cfg);
  if (cfg.multiscale.mesh.empty() || cfg.multiscale.library.empty())
    throw ConfigError("[multiscale] mesh and library are required");
  MacroMesh mesh = read_mesh(cfg.multiscale.mesh);
  RveLibrary lib = RveLibrary::load_manifest(cfg.multiscale.library);
  const BcSet bcs = cfg.parse_bcs();
  if (bcs.dirichlet.empty()) throw ConfigError("[multiscale] needs dirichlet BCs");

  NetworkBatchProvider provider(mesh, std::move(lib), cfg.seed, cfg.law, cfg.relax,
                                cfg.stiffness, cfg.workers);
  const SolveHistory hist =
      newton_solve(mesh, bcs, provider, cfg.newton, cfg.multiscale.p2_axis);

  // nominal pull direction: the Dirichlet set with the largest |u_x|
  std::string pull_set = bcs.dirichlet.front().node_set;
  double pull_len = 0;
  for (const DirichletBc& bc : bcs.dirichlet)
    if (bc.value[0] && std::abs(*bc.value[0]) > std::abs(pull_len)) {
      pull_len = *bc.value[0];
      pull_set = bc.node_set;
    }
  // reference cross-section orthogonal to x from the bounding box
  double ymin = 1e300, ymax = -1e300, zmin = 1e300, zmax = -1e300, xmin = 1e300,
         xmax = -1e300;
  for (const Vec3& x : mesh.ref_coords) {
    xmin = std::min(xmin, x[0]);
    xmax = std::max(xmax, x[0]);
    ymin = std::min(ymin, x[1]);
    ymax = std::max(ymax, x[1]);
    zmin = std::min(zmin, x[2]);
    zmax = std::max(zmax, x[2]);
  }
  const double area = (ymax - ymin) * (zmax - zmin);
  const double strain_scale = pull_len / std::max(xmax - xmin, 1e-300);
  write_multiscale_outputs(cfg, mesh, hist, strain_scale,
                           area > 0 ? area : 1.0, pull_set);
  return kExitOk;
}

int run_bench(const RunConfig& cfg) {
  prepare_out(cfg);
  NetGenSpec spec;
  spec.style = NetGenSpec::Style::knn;
  spec.nodes = cfg.bench.network_nodes;
  spec.fibers = cfg.bench.network_fibers;
  spec.neighbors = 10;
  const FiberNetwork net = generate_network(spec, cfg.seed);

  std::ofstream out(cfg.out / "bench.csv");
  out << "# schema bench v1\n";
  out << "batch,workers,dofs,wall_s,per_rve_ms,self_speedup\n";

  Def3 f = Def3::identity();
  f(0, 0) = cfg.bench.stretch;

  RveLibrary lib;
  lib.entries.push_back(net);
  lib.policy = RveLibrary::Policy::random;

  for (int workers : cfg.bench.worker_counts) {
    double base_per_rve = -1;
    for (int batch : cfg.bench.batch_sizes) {
      std::vector<std::int32_t> regions(batch, 0);
      double best = 1e300;
      for (int rep = 0; rep < std::max(1, cfg.bench.repeats); ++rep) {
        auto [states, assign] = init_batch(regions, lib, cfg.seed);
        std::vector<Def3> fs(batch, f);
        WorkerPool pool(workers);
        const auto t0 = std::chrono::steady_clock::now();
        BatchResult br = batch_response(lib, assign, states, cfg.law, fs, cfg.relax,
                                        cfg.stiffness, pool);
        const auto t1 = std::chrono::steady_clock::now();
        if (!br.failed.empty())
          throw SolverError("bench RVE solve failed; tune relax settings");
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
      }
      const double per_rve = best / batch;
      if (base_per_rve < 0) base_per_rve = per_rve;
      out << batch << ',' << workers << ',' << net.n_dof() << ',' << fmt(best)
          << ',' << fmt(per_rve * 1e3) << ',' << fmt(base_per_rve / per_rve) << '\n';
    }
  }
  return kExitOk;
}

int run_netgen(const RunConfig& cfg) {
  prepare_out(cfg);
  const FiberNetwork net = generate_network(cfg.netgen.spec, cfg.seed);
  net.write_file(cfg.out / cfg.netgen.out_network);
  std::cout << "generated " << net.n_nodes() << " nodes, " << net.n_fibers()
            << " fibers, " << net.boundary_nodes().size() << " boundary nodes\n";
  return kExitOk;
}

int run_metrics(const RunConfig& cfg) {
  prepare_out(cfg);
  if (cfg.metrics.network.empty()) throw ConfigError("[metrics] network is required");
  const FiberNetwork net = FiberNetwork::read_file(cfg.metrics.network);
  std::vector<double> zero(net.n_dof(), 0.0);
  const double p2 = orientation_p2(net, zero, cfg.metrics.axis);
  double total_len = 0;
  for (int f = 0; f < net.n_fibers(); ++f) total_len += net.rest_length(f);
  std::ofstream out(cfg.out / "metrics.csv");
  out << "# schema network_metrics v1\n";
  out << "nodes,fibers,boundary_nodes,free_dofs,total_length,p2\n";
  out << net.n_nodes() << ',' << net.n_fibers() << ',' << net.boundary_nodes().size()
      << ',' << net.n_free() << ',' << fmt(total_len) << ',' << fmt(p2) << '\n';
  std::cout << "p2(" << fmt(cfg.metrics.axis[0]) << ' ' << fmt(cfg.metrics.axis[1])
            << ' ' << fmt(cfg.metrics.axis[2]) << ") = " << fmt(p2) << '\n';
  return kExitOk;
}

int run(const RunConfig& cfg) {
  try {
    switch (cfg.mode) {
      case RunMode::rve: return run_rve(cfg);
      case RunMode::multiscale: return run_multiscale(cfg);
      case RunMode::bench: return run_bench(cfg);
      case RunMode::netgen: return run_netgen(cfg);
      case RunMode::metrics: return run_metrics(cfg);
    }
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const KinematicsError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  }
}

}  // namespace fibra
