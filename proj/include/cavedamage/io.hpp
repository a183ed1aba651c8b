#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavedamage/mesh.hpp"
#include "cavedamage/solver.hpp"

namespace cavedamage {

namespace detail {

inline std::string num17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void ensure_parent_dir(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

}  // namespace detail

/// Legacy-ASCII VTK unstructured grid with point data "alpha" (scalar) and
/// "displacement" (vector, zero third component). Output is byte-stable for
/// identical inputs. Missing directories are created.
inline void export_vtk(const Mesh& m, const Field& alpha, const Field& u,
                       const std::string& path) {
  if (alpha.size() != static_cast<std::size_t>(m.num_nodes()) ||
      u.size() != static_cast<std::size_t>(2 * m.num_nodes()))
    throw std::invalid_argument("export_vtk: field length mismatch");
  detail::ensure_parent_dir(path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_vtk: cannot open '" + path + "'");
  out << "# vtk DataFile Version 2.0\n";
  out << "damage state\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << m.num_nodes() << " double\n";
  for (int i = 0; i < m.num_nodes(); ++i) {
    const Vec2& p = m.nodes[static_cast<std::size_t>(i)];
    out << detail::num17(p.x) << ' ' << detail::num17(p.y) << " 0\n";
  }
  out << "CELLS " << m.num_tris() << ' ' << 4 * m.num_tris() << "\n";
  for (const auto& v : m.tris) out << "3 " << v[0] << ' ' << v[1] << ' ' << v[2] << "\n";
  out << "CELL_TYPES " << m.num_tris() << "\n";
  for (int t = 0; t < m.num_tris(); ++t) out << "5\n";
  out << "POINT_DATA " << m.num_nodes() << "\n";
  out << "SCALARS alpha double 1\n";
  out << "LOOKUP_TABLE default\n";
  for (int i = 0; i < m.num_nodes(); ++i)
    out << detail::num17(alpha[static_cast<std::size_t>(i)]) << "\n";
  out << "VECTORS displacement double\n";
  for (int i = 0; i < m.num_nodes(); ++i)
    out << detail::num17(u[2 * static_cast<std::size_t>(i)]) << ' '
        << detail::num17(u[2 * static_cast<std::size_t>(i) + 1]) << " 0\n";
  if (!out) throw std::runtime_error("export_vtk: write failed for '" + path + "'");
}

/// Per-iteration convergence table, one row per accepted outer iterate:
/// step, outer_iteration, error, blend_count, objective, elapsed_seconds.
inline void export_history(const SimulationResult& result, const std::string& path) {
  if (result.steps.empty()) throw std::invalid_argument("export_history: empty history");
  detail::ensure_parent_dir(path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_history: cannot open '" + path + "'");
  out << "step,outer_iteration,error,blend_count,objective,elapsed_seconds\n";
  for (std::size_t s = 0; s < result.steps.size(); ++s) {
    const StepHistory& h = result.steps[s].history;
    for (std::size_t p = 0; p < h.outer.size(); ++p) {
      const OuterRecord& r = h.outer[p];
      out << s << ',' << (p + 1) << ',' << detail::num17(r.error) << ',' << r.blend_count
          << ',' << detail::num17(r.objective) << ',' << detail::num17(r.elapsed_seconds)
          << "\n";
    }
  }
  if (!out) throw std::runtime_error("export_history: write failed for '" + path + "'");
}

/// Zero-padded per-step VTK files plus the history table, all under `dir`.
inline void export_run(const std::vector<QuasiStep>& steps, const SimulationResult& result,
                       const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < result.steps.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "state_%03zu.vtk", i);
    export_vtk(steps[i].mesh, result.steps[i].alpha, result.steps[i].u,
               dir + "/" + name);
  }
  export_history(result, dir + "/history.csv");
}

}  // namespace cavedamage
