#include "fibra/macro_mesh.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fibra/error.hpp"

namespace fibra {

namespace {

double tet_volume6(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const Vec3 ab{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const Vec3 ac{c[0] - a[0], c[1] - a[1], c[2] - a[2]};
  const Vec3 ad{d[0] - a[0], d[1] - a[1], d[2] - a[2]};
  return ab[0] * (ac[1] * ad[2] - ac[2] * ad[1]) -
         ab[1] * (ac[0] * ad[2] - ac[2] * ad[0]) +
         ab[2] * (ac[0] * ad[1] - ac[1] * ad[0]);
}

}  // namespace

const std::vector<std::int32_t>& MacroMesh::node_set(const std::string& name) const {
  auto it = node_sets.find(name);
  if (it == node_sets.end()) throw ConfigError("unknown node set '" + name + "'");
  return it->second;
}

void MacroMesh::validate() const {
  const int nn = n_nodes();
  if (nn == 0 || tets.empty()) throw ConfigError("macro mesh is empty");
  if (coords.size() != ref_coords.size())
    throw ConfigError("macro mesh current/reference coordinate size mismatch");
  for (std::size_t e = 0; e < tets.size(); ++e) {
    for (int k = 0; k < 4; ++k)
      if (tets[e].n[k] < 0 || tets[e].n[k] >= nn)
        throw ConfigError("tet " + std::to_string(e) + " node index out of range");
    const auto& t = tets[e].n;
    if (tet_volume6(ref_coords[t[0]], ref_coords[t[1]], ref_coords[t[2]],
                    ref_coords[t[3]]) <= 0)
      throw ConfigError("tet " + std::to_string(e) +
                        " has non-positive reference volume");
    if (tet_volume6(coords[t[0]], coords[t[1]], coords[t[2]], coords[t[3]]) <= 0)
      throw ConfigError("tet " + std::to_string(e) +
                        " has non-positive current volume");
  }
  for (const auto& [name, set] : node_sets)
    for (std::int32_t i : set)
      if (i < 0 || i >= nn)
        throw ConfigError("node set '" + name + "' index out of range");
  for (const auto& [name, set] : face_sets)
    for (const auto& f : set)
      for (std::int32_t i : f)
        if (i < 0 || i >= nn)
          throw ConfigError("face set '" + name + "' index out of range");
}

void MacroMesh::reset_current() { coords = ref_coords; }

MacroMesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file " + path.string());
  MacroMesh mesh;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) -> IoError {
    return IoError("mesh file " + path.string() + " line " + std::to_string(lineno) +
                   ": " + what);
  };
  auto next_line = [&]() -> std::istringstream {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r\n") != std::string::npos)
        return std::istringstream(line);
    }
    throw IoError("unexpected end of mesh file " + path.string());
  };

  while (true) {
    std::streampos before = in.tellg();
    if (!std::getline(in, line)) break;
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream s(line);
    std::string word;
    s >> word;
    if (word == "nodes") {
      long n = 0;
      if (!(s >> n) || n <= 0) throw fail("expected 'nodes N'");
      mesh.ref_coords.resize(n);
      for (long i = 0; i < n; ++i) {
        auto ls = next_line();
        if (!(ls >> mesh.ref_coords[i][0] >> mesh.ref_coords[i][1] >>
              mesh.ref_coords[i][2]))
          throw fail("expected 'x y z'");
        for (double c : mesh.ref_coords[i])
          if (!std::isfinite(c)) throw fail("non-finite coordinate");
      }
    } else if (word == "tets") {
      long n = 0;
      if (!(s >> n) || n <= 0) throw fail("expected 'tets E'");
      mesh.tets.resize(n);
      for (long e = 0; e < n; ++e) {
        auto ls = next_line();
        MacroMesh::Tet& t = mesh.tets[e];
        if (!(ls >> t.n[0] >> t.n[1] >> t.n[2] >> t.n[3] >> t.region))
          throw fail("expected 'n0 n1 n2 n3 region'");
      }
    } else if (word == "nodeset") {
      std::string name;
      long n = 0;
      if (!(s >> name >> n) || n < 0) throw fail("expected 'nodeset name count'");
      auto& set = mesh.node_sets[name];
      set.resize(n);
      auto ls = next_line();
      for (long i = 0; i < n; ++i)
        if (!(ls >> set[i])) throw fail("short nodeset line");
    } else if (word == "faceset") {
      std::string name;
      long n = 0;
      if (!(s >> name >> n) || n < 0) throw fail("expected 'faceset name count'");
      auto& set = mesh.face_sets[name];
      set.resize(n);
      for (long i = 0; i < n; ++i) {
        auto ls = next_line();
        if (!(ls >> set[i][0] >> set[i][1] >> set[i][2]))
          throw fail("expected face 'a b c'");
      }
    } else {
      (void)before;
      throw fail("unknown section '" + word + "'");
    }
  }
  if (mesh.ref_coords.empty()) throw IoError("mesh file has no nodes section");
  mesh.coords = mesh.ref_coords;
  try {
    mesh.validate();
  } catch (const ConfigError& e) {
    throw IoError("mesh file " + path.string() + ": " + e.what());
  }
  return mesh;
}

void write_mesh(const MacroMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write mesh file " + path.string());
  char buf[96];
  out << "nodes " << mesh.n_nodes() << '\n';
  for (const Vec3& x : mesh.ref_coords) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", x[0], x[1], x[2]);
    out << buf;
  }
  out << "tets " << mesh.n_elements() << '\n';
  for (const MacroMesh::Tet& t : mesh.tets)
    out << t.n[0] << ' ' << t.n[1] << ' ' << t.n[2] << ' ' << t.n[3] << ' '
        << t.region << '\n';
  for (const auto& [name, set] : mesh.node_sets) {
    out << "nodeset " << name << ' ' << set.size() << '\n';
    for (std::size_t i = 0; i < set.size(); ++i)
      out << set[i] << (i + 1 == set.size() ? '\n' : ' ');
    if (set.empty()) out << '\n';
  }
  for (const auto& [name, set] : mesh.face_sets) {
    out << "faceset " << name << ' ' << set.size() << '\n';
    for (const auto& f : set) out << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  }
  if (!out) throw IoError("failed writing mesh file " + path.string());
}

MacroMesh make_box_mesh(int nx, int ny, int nz, double lx, double ly, double lz) {
  if (nx < 1 || ny < 1 || nz < 1) throw ConfigError("box mesh needs >= 1 cell per axis");
  MacroMesh mesh;
  auto node_id = [&](int i, int j, int k) {
    return static_cast<std::int32_t>((k * (ny + 1) + j) * (nx + 1) + i);
  };
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        mesh.ref_coords.push_back(
            {lx * i / nx, ly * j / ny, lz * k / nz});

  // 6-tet Kuhn decomposition of each cell, consistently oriented
  static const int kTets[6][4] = {{0, 1, 3, 7}, {0, 1, 7, 5}, {0, 5, 7, 4},
                                  {0, 3, 2, 7}, {0, 2, 6, 7}, {0, 6, 4, 7}};
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::int32_t c[8] = {
            node_id(i, j, k),         node_id(i + 1, j, k),
            node_id(i, j + 1, k),     node_id(i + 1, j + 1, k),
            node_id(i, j, k + 1),     node_id(i + 1, j, k + 1),
            node_id(i, j + 1, k + 1), node_id(i + 1, j + 1, k + 1)};
        for (const auto& t : kTets) {
          MacroMesh::Tet tet;
          tet.n = {c[t[0]], c[t[1]], c[t[2]], c[t[3]]};
          const Vec3& a = mesh.ref_coords[tet.n[0]];
          const Vec3& b = mesh.ref_coords[tet.n[1]];
          const Vec3& cc = mesh.ref_coords[tet.n[2]];
          const Vec3& d = mesh.ref_coords[tet.n[3]];
          if (tet_volume6(a, b, cc, d) < 0) std::swap(tet.n[2], tet.n[3]);
          mesh.tets.push_back(tet);
        }
      }

  auto& xmin = mesh.node_sets["xmin"];
  auto& xmax = mesh.node_sets["xmax"];
  auto& ymin = mesh.node_sets["ymin"];
  auto& ymax = mesh.node_sets["ymax"];
  auto& zmin = mesh.node_sets["zmin"];
  auto& zmax = mesh.node_sets["zmax"];
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) {
        const std::int32_t id = node_id(i, j, k);
        if (i == 0) xmin.push_back(id);
        if (i == nx) xmax.push_back(id);
        if (j == 0) ymin.push_back(id);
        if (j == ny) ymax.push_back(id);
        if (k == 0) zmin.push_back(id);
        if (k == nz) zmax.push_back(id);
      }
  mesh.node_sets["origin"] = {node_id(0, 0, 0)};

  auto add_faces = [&](const std::string& name, bool at_max) {
    auto& set = mesh.face_sets[name];
    const int i = at_max ? nx : 0;
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j) {
        const std::int32_t a = node_id(i, j, k), b = node_id(i, j + 1, k),
                           c = node_id(i, j, k + 1), d = node_id(i, j + 1, k + 1);
        set.push_back({a, b, d});
        set.push_back({a, d, c});
      }
  };
  add_faces("xmin", false);
  add_faces("xmax", true);

  mesh.coords = mesh.ref_coords;
  mesh.validate();
  return mesh;
}

}  // namespace fibra
