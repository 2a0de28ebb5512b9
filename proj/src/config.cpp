#include "fibra/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "fibra/error.hpp"

namespace fibra {

RunMode parse_mode(const std::string& name) {
  if (name == "rve") return RunMode::rve;
  if (name == "multiscale") return RunMode::multiscale;
  if (name == "bench") return RunMode::bench;
  if (name == "netgen") return RunMode::netgen;
  if (name == "metrics") return RunMode::metrics;
  throw ConfigError("unknown mode '" + name + "'");
}

std::string mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::rve: return "rve";
    case RunMode::multiscale: return "multiscale";
    case RunMode::bench: return "bench";
    case RunMode::netgen: return "netgen";
    case RunMode::metrics: return "metrics";
  }
  return "rve";
}

namespace {

struct IniData {
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& sec, const std::string& key) const {
    auto s = sections.find(sec);
    return s != sections.end() && s->second.count(key);
  }
  std::string raw(const std::string& sec, const std::string& key) const {
    return sections.at(sec).at(key);
  }

  std::string get(const std::string& sec, const std::string& key,
                  const std::string& dflt) const {
    return has(sec, key) ? raw(sec, key) : dflt;
  }
  double get(const std::string& sec, const std::string& key, double dflt) const {
    if (!has(sec, key)) return dflt;
    try {
      std::size_t pos = 0;
      const double v = std::stod(raw(sec, key), &pos);
      if (pos != raw(sec, key).size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad number for [" + sec + "] " + key + " = '" +
                        raw(sec, key) + "'");
    }
  }
  long long get(const std::string& sec, const std::string& key, long long dflt) const {
    if (!has(sec, key)) return dflt;
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(raw(sec, key), &pos);
      if (pos != raw(sec, key).size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad integer for [" + sec + "] " + key + " = '" +
                        raw(sec, key) + "'");
    }
  }
  int get(const std::string& sec, const std::string& key, int dflt) const {
    return static_cast<int>(get(sec, key, static_cast<long long>(dflt)));
  }
  bool get(const std::string& sec, const std::string& key, bool dflt) const {
    if (!has(sec, key)) return dflt;
    const std::string v = raw(sec, key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("bad boolean for [" + sec + "] " + key + " = '" + v + "'");
  }
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

IniData parse_ini(std::istream& in) {
  IniData ini;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      ini.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    ini.sections[section][key] = value;
  }
  return ini;
}

Vec3 parse_vec3(const std::string& text, const std::string& what) {
  std::istringstream s(text);
  Vec3 v;
  if (!(s >> v[0] >> v[1] >> v[2]))
    throw ConfigError("expected three numbers for " + what + ", got '" + text + "'");
  return v;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::istringstream s(text);
  std::vector<int> out;
  int v;
  while (s >> v) out.push_back(v);
  return out;
}

std::vector<Def3> parse_f_list(const std::string& text) {
  std::vector<Def3> out;
  std::istringstream items(text);
  std::string item;
  while (std::getline(items, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::istringstream s(item);
    Def3 f;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (!(s >> f(i, j)))
          throw ConfigError("f_targets entries need 9 numbers, got '" + item + "'");
    out.push_back(f);
  }
  return out;
}

std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
  if (p.empty()) return p;
  std::filesystem::path fp(p);
  if (fp.is_absolute()) return fp.string();
  return (base / fp).lexically_normal().string();
}

}  // namespace

RunConfig RunConfig::from_string(const std::string& text,
                                 const std::filesystem::path& base_dir) {
  std::istringstream in(text);
  const IniData ini = parse_ini(in);

  RunConfig c;
  c.mode = parse_mode(ini.get("run", "mode", std::string("rve")));
  c.seed = static_cast<std::uint64_t>(ini.get("run", "seed", 1LL));
  c.workers = ini.get("run", "workers", 1);
  if (c.workers < 1) throw ConfigError("[run] workers must be >= 1");
  c.isa_request = ini.get("run", "kernels", std::string("auto"));
  c.isa = kernels::parse_isa(c.isa_request);
  c.out = resolve_path(ini.get("run", "out", std::string("out")), base_dir);

  c.law.kind = parse_law_kind(ini.get("law", "kind", std::string("linear")));
  c.law.ea_scale = ini.get("law", "ea_scale", 1.0);
  c.law.nonlinearity = ini.get("law", "nonlinearity", 1.2);
  c.law.buckling_off = ini.get("law", "buckling_off", false);
  c.law.validate();

  c.relax.damping = ini.get("relax", "damping", 2.0);
  c.relax.tolerance = ini.get("relax", "tolerance", 1e-6);
  c.relax.max_iterations = ini.get("relax", "max_iterations", 500000LL);
  c.relax.dt_safety = ini.get("relax", "dt_safety", 0.8);
  c.relax.density_scale = ini.get("relax", "density_scale", 1.0);
  c.relax.energy_check = ini.get("relax", "energy_check", false);
  c.relax.validate();

  c.stiffness.fd_rel_step = ini.get("stiffness", "fd_rel_step", 1e-5);
  c.stiffness.reuse_warm = ini.get("stiffness", "reuse_warm", true);
  c.stiffness.validate();

  c.newton.rel_tol = ini.get("newton", "rel_tol", 1e-9);
  c.newton.max_iterations = ini.get("newton", "max_iterations", 25);
  c.newton.increments = ini.get("newton", "increments", 10);
  c.newton.max_bisections = ini.get("newton", "max_bisections", 12);
  c.newton.linear_tol = ini.get("newton", "linear_tol", 1e-10);
  c.newton.dense_threshold = ini.get("newton", "dense_threshold", 500);
  c.newton.validate();

  c.rve.network = resolve_path(ini.get("rve", "network", std::string()), base_dir);
  c.rve.motion = ini.get("rve", "motion", std::string("uniaxial"));
  if (c.rve.motion != "uniaxial" && c.rve.motion != "custom")
    throw ConfigError("[rve] motion must be uniaxial or custom");
  c.rve.stretch = ini.get("rve", "stretch", 1.25);
  c.rve.steps = ini.get("rve", "steps", 10);
  c.rve.axis = ini.get("rve", "axis", 0);
  if (c.rve.axis < 0 || c.rve.axis > 2) throw ConfigError("[rve] axis must be 0..2");
  if (ini.has("rve", "f_targets"))
    c.rve.f_targets = parse_f_list(ini.raw("rve", "f_targets"));

  c.multiscale.mesh =
      resolve_path(ini.get("multiscale", "mesh", std::string()), base_dir);
  c.multiscale.library =
      resolve_path(ini.get("multiscale", "library", std::string()), base_dir);
  c.multiscale.dirichlet = ini.get("multiscale", "dirichlet", std::string());
  c.multiscale.neumann = ini.get("multiscale", "neumann", std::string());
  c.multiscale.p2_axis = parse_vec3(
      ini.get("multiscale", "p2_axis", std::string("1 0 0")), "[multiscale] p2_axis");

  if (ini.has("bench", "batch_sizes"))
    c.bench.batch_sizes = parse_int_list(ini.raw("bench", "batch_sizes"));
  if (ini.has("bench", "worker_counts"))
    c.bench.worker_counts = parse_int_list(ini.raw("bench", "worker_counts"));
  c.bench.network_nodes = ini.get("bench", "network_nodes", 60);
  c.bench.network_fibers = ini.get("bench", "network_fibers", 160);
  c.bench.stretch = ini.get("bench", "stretch", 1.05);
  c.bench.repeats = ini.get("bench", "repeats", 1);
  if (c.bench.batch_sizes.empty() || c.bench.worker_counts.empty())
    throw ConfigError("[bench] needs batch_sizes and worker_counts");

  NetGenSpec& g = c.netgen.spec;
  g.style = parse_netgen_style(ini.get("netgen", "style", std::string("segments")));
  g.fibers = ini.get("netgen", "fibers", 200);
  g.nodes = ini.get("netgen", "nodes", 60);
  g.half_length = ini.get("netgen", "half_length", 0.3);
  g.merge_radius = ini.get("netgen", "merge_radius", 0.05);
  g.neighbors = ini.get("netgen", "neighbors", 8);
  g.align_bias = ini.get("netgen", "align_bias", 0.0);
  g.align_axis =
      parse_vec3(ini.get("netgen", "align_axis", std::string("1 0 0")), "align_axis");
  g.fiber_area = ini.get("netgen", "fiber_area", 1.0);
  g.fiber_modulus = ini.get("netgen", "fiber_modulus", 1.0);
  c.netgen.out_network = ini.get("netgen", "out_network", std::string("network.txt"));

  c.metrics.network =
      resolve_path(ini.get("metrics", "network", std::string()), base_dir);
  c.metrics.axis =
      parse_vec3(ini.get("metrics", "axis", std::string("1 0 0")), "[metrics] axis");
  return c;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str(), std::filesystem::absolute(path).parent_path());
}

void RunConfig::write_resolved(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write resolved config " + path.string());
  char num[64];
  auto d = [&](double v) {
    std::snprintf(num, sizeof num, "%.17g", v);
    return std::string(num);
  };
  os << "[run]\n";
  os << "mode = " << mode_name(mode) << "\n";
  os << "seed = " << seed << "\n";
  os << "workers = " << workers << "\n";
  os << "kernels = " << kernels::isa_name(isa) << "\n";
  os << "out = " << out.string() << "\n\n";

  os << "[law]\n";
  os << "kind = " << (law.kind == FiberLaw::Kind::linear ? "linear" : "exponential")
      << "\n";
  os << "ea_scale = " << d(law.ea_scale) << "\n";
  os << "nonlinearity = " << d(law.nonlinearity) << "\n";
  os << "buckling_off = " << (law.buckling_off ? "true" : "false") << "\n\n";

  os << "[relax]\n";
  os << "damping = " << d(relax.damping) << "\n";
  os << "tolerance = " << d(relax.tolerance) << "\n";
  os << "max_iterations = " << relax.max_iterations << "\n";
  os << "dt_safety = " << d(relax.dt_safety) << "\n";
  os << "density_scale = " << d(relax.density_scale) << "\n";
  os << "energy_check = " << (relax.energy_check ? "true" : "false") << "\n\n";

  os << "[stiffness]\n";
  os << "fd_rel_step = " << d(stiffness.fd_rel_step) << "\n";
  os << "reuse_warm = " << (stiffness.reuse_warm ? "true" : "false") << "\n\n";

  os << "[newton]\n";
  os << "rel_tol = " << d(newton.rel_tol) << "\n";
  os << "max_iterations = " << newton.max_iterations << "\n";
  os << "increments = " << newton.increments << "\n";
  os << "max_bisections = " << newton.max_bisections << "\n";
  os << "linear_tol = " << d(newton.linear_tol) << "\n";
  os << "dense_threshold = " << newton.dense_threshold << "\n\n";

  os << "[rve]\n";
  os << "network = " << rve.network << "\n";
  os << "motion = " << rve.motion << "\n";
  os << "stretch = " << d(rve.stretch) << "\n";
  os << "steps = " << rve.steps << "\n";
  os << "axis = " << rve.axis << "\n";
  if (!rve.f_targets.empty()) {
    os << "f_targets = ";
    for (std::size_t k = 0; k < rve.f_targets.size(); ++k) {
      if (k) os << ", ";
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          os << d(rve.f_targets[k](i, j)) << (i == 2 && j == 2 ? "" : " ");
    }
    os << "\n";
  }
  os << "\n[multiscale]\n";
  os << "mesh = " << multiscale.mesh << "\n";
  os << "library = " << multiscale.library << "\n";
  os << "dirichlet = " << multiscale.dirichlet << "\n";
  os << "neumann = " << multiscale.neumann << "\n";
  os << "p2_axis = " << d(multiscale.p2_axis[0]) << ' ' << d(multiscale.p2_axis[1])
      << ' ' << d(multiscale.p2_axis[2]) << "\n\n";

  os << "[bench]\n";
  os << "batch_sizes =";
  for (int b : bench.batch_sizes) os << ' ' << b;
  os << "\nworker_counts =";
  for (int w : bench.worker_counts) os << ' ' << w;
  os << "\nnetwork_nodes = " << bench.network_nodes << "\n";
  os << "network_fibers = " << bench.network_fibers << "\n";
  os << "stretch = " << d(bench.stretch) << "\n";
  os << "repeats = " << bench.repeats << "\n\n";

  os << "[netgen]\n";
  os << "style = "
      << (netgen.spec.style == NetGenSpec::Style::segments ? "segments" : "knn")
      << "\n";
  os << "fibers = " << netgen.spec.fibers << "\n";
  os << "nodes = " << netgen.spec.nodes << "\n";
  os << "half_length = " << d(netgen.spec.half_length) << "\n";
  os << "merge_radius = " << d(netgen.spec.merge_radius) << "\n";
  os << "neighbors = " << netgen.spec.neighbors << "\n";
  os << "align_bias = " << d(netgen.spec.align_bias) << "\n";
  os << "align_axis = " << d(netgen.spec.align_axis[0]) << ' '
      << d(netgen.spec.align_axis[1]) << ' ' << d(netgen.spec.align_axis[2]) << "\n";
  os << "fiber_area = " << d(netgen.spec.fiber_area) << "\n";
  os << "fiber_modulus = " << d(netgen.spec.fiber_modulus) << "\n";
  os << "out_network = " << netgen.out_network << "\n\n";

  os << "[metrics]\n";
  os << "network = " << metrics.network << "\n";
  os << "axis = " << d(metrics.axis[0]) << ' ' << d(metrics.axis[1]) << ' '
      << d(metrics.axis[2]) << "\n";
  if (!os) throw IoError("failed writing resolved config " + path.string());
}

BcSet RunConfig::parse_bcs() const {
  BcSet bcs;
  std::istringstream ds(multiscale.dirichlet);
  std::string item;
  while (std::getline(ds, item, ';')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    const auto c1 = item.find(':');
    const auto c2 = item.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw ConfigError("dirichlet item needs set:axes:value, got '" + item + "'");
    DirichletBc bc;
    bc.node_set = item.substr(0, c1);
    const std::string axes = item.substr(c1 + 1, c2 - c1 - 1);
    double value = 0;
    try {
      value = std::stod(item.substr(c2 + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad dirichlet value in '" + item + "'");
    }
    for (char a : axes) {
      if (a == 'x') bc.value[0] = value;
      else if (a == 'y') bc.value[1] = value;
      else if (a == 'z') bc.value[2] = value;
      else throw ConfigError("dirichlet axes must be from xyz, got '" + axes + "'");
    }
    bcs.dirichlet.push_back(bc);
  }
  std::istringstream ns(multiscale.neumann);
  while (std::getline(ns, item, ';')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    const auto c1 = item.find(':');
    if (c1 == std::string::npos)
      throw ConfigError("neumann item needs set:tx ty tz, got '" + item + "'");
    NeumannBc bc;
    bc.face_set = item.substr(0, c1);
    bc.traction = parse_vec3(item.substr(c1 + 1), "neumann traction");
    bcs.neumann.push_back(bc);
  }
  return bcs;
}

}  // namespace fibra
