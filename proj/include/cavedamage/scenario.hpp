#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavedamage/fem.hpp"
#include "cavedamage/mesh.hpp"
#include "cavedamage/solver.hpp"

namespace cavedamage {

enum class ScenarioKind { Caving, Compression };

/// Initial damage painted into a band around a segment.
struct SeedSpec {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  double halfwidth = 0.0;  // <= 0 disables the seed
  double alpha = 0.5;
  bool enabled() const { return halfwidth > 0.0; }
};

/// Growth schedule of the rectangular cavity footprint: width grows about
/// x_center, height grows upward from z_base.
struct CavitySchedule {
  double x_center = 0.0;
  double width0 = 0.0, dwidth = 0.0;
  double z_base = 0.0;
  double height0 = 0.0, dheight = 0.0;
};

/// Complete description of one run: geometry, excavation or loading program,
/// material, loads, solver settings and output location.
struct Scenario {
  ScenarioKind kind = ScenarioKind::Caving;
  Box2 bounds{-180.0, 0.0, 180.0, 95.0};
  double h_coarse = 12.0;
  double h_fine = 4.0;
  double band = 15.0;
  CavitySchedule cavity;
  int steps = 10;
  double top_displacement = -0.005;  // total prescribed u_y at the last step
  SeedSpec seed;
  MaterialParams material{ElasticModuli(2.9e10, 0.3),
                          DamageLaw{DamageModel::Model1, 1e3, 4.0, 2.0},
                          1e6, 0.75, 1.0, 1e-6};
  BodyLoads loads;
  SolverConfig solver;
  std::string output_dir = "out";

  void validate() const {
    if (!(bounds.width() > 0.0 && bounds.height() > 0.0))
      throw std::invalid_argument("Scenario: bounds must have positive extent");
    if (!(h_fine > 0.0) || !(h_coarse > 0.0) || h_fine > h_coarse * (1.0 + 1e-12))
      throw std::invalid_argument("Scenario: need 0 < h_fine <= h_coarse");
    if (!(band > 0.0)) throw std::invalid_argument("Scenario: band must be positive");
    if (steps < 1) throw std::invalid_argument("Scenario: steps must be >= 1");
    if (kind == ScenarioKind::Caving) {
      if (cavity.width0 < 0.0 || cavity.dwidth < 0.0 || cavity.height0 < 0.0 ||
          cavity.dheight < 0.0)
        throw std::invalid_argument("Scenario: cavity schedule must be nonnegative");
    } else {
      if (!std::isfinite(top_displacement))
        throw std::invalid_argument("Scenario: top_displacement must be finite");
    }
    if (seed.enabled() && !(seed.alpha >= 0.0 && seed.alpha <= 1.0))
      throw std::invalid_argument("Scenario: seed alpha must lie in [0, 1]");
    material.validate();
    if (!(loads.rho > 0.0)) throw std::invalid_argument("Scenario: rho must be positive");
    if (!(loads.grav > 0.0)) throw std::invalid_argument("Scenario: grav must be positive");
    if (!(loads.kbar >= 0.0)) throw std::invalid_argument("Scenario: kbar must be >= 0");
    solver.validate();
    if (output_dir.empty()) throw std::invalid_argument("Scenario: output.dir must be nonempty");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_num(const std::string& v, const std::string& key, int line) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size())
    throw std::invalid_argument("config line " + std::to_string(line) + ": key '" + key +
                                "' expects a number, got '" + v + "'");
  return out;
}

inline int parse_int(const std::string& v, const std::string& key, int line) {
  const double d = parse_num(v, key, line);
  const int i = static_cast<int>(d);
  if (static_cast<double>(i) != d)
    throw std::invalid_argument("config line " + std::to_string(line) + ": key '" + key +
                                "' expects an integer");
  return i;
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parse a flat `section.key = value` configuration. Unknown and duplicate
/// keys are rejected with their line number. Keys omitted keep the documented
/// defaults; tol_kkt defaults to 1e-6 * w11 of the chosen law.
inline Scenario parse_scenario(std::istream& in) {
  Scenario sc;
  std::set<std::string> seen;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = detail::trim(raw);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line) +
                                  ": expected 'key = value'");
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string val = detail::trim(s.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::invalid_argument("config line " + std::to_string(line) +
                                  ": empty key or value");
    if (!seen.insert(key).second)
      throw std::invalid_argument("config line " + std::to_string(line) + ": duplicate key '" +
                                  key + "'");

    auto num = [&] { return detail::parse_num(val, key, line); };
    auto integer = [&] { return detail::parse_int(val, key, line); };

    if (key == "scenario.kind") {
      if (val == "caving")
        sc.kind = ScenarioKind::Caving;
      else if (val == "compression")
        sc.kind = ScenarioKind::Compression;
      else
        throw std::invalid_argument("config line " + std::to_string(line) +
                                    ": scenario.kind must be caving or compression");
    } else if (key == "scenario.steps") {
      sc.steps = integer();
    } else if (key == "geometry.x0") {
      sc.bounds.x0 = num();
    } else if (key == "geometry.y0") {
      sc.bounds.y0 = num();
    } else if (key == "geometry.x1") {
      sc.bounds.x1 = num();
    } else if (key == "geometry.y1") {
      sc.bounds.y1 = num();
    } else if (key == "geometry.h_coarse") {
      sc.h_coarse = num();
    } else if (key == "geometry.h_fine") {
      sc.h_fine = num();
    } else if (key == "geometry.band") {
      sc.band = num();
    } else if (key == "cavity.x_center") {
      sc.cavity.x_center = num();
    } else if (key == "cavity.width0") {
      sc.cavity.width0 = num();
    } else if (key == "cavity.dwidth") {
      sc.cavity.dwidth = num();
    } else if (key == "cavity.z_base") {
      sc.cavity.z_base = num();
    } else if (key == "cavity.height0") {
      sc.cavity.height0 = num();
    } else if (key == "cavity.dheight") {
      sc.cavity.dheight = num();
    } else if (key == "compression.top_displacement") {
      sc.top_displacement = num();
    } else if (key == "seed.x0") {
      sc.seed.x0 = num();
    } else if (key == "seed.y0") {
      sc.seed.y0 = num();
    } else if (key == "seed.x1") {
      sc.seed.x1 = num();
    } else if (key == "seed.y1") {
      sc.seed.y1 = num();
    } else if (key == "seed.halfwidth") {
      sc.seed.halfwidth = num();
    } else if (key == "seed.alpha") {
      sc.seed.alpha = num();
    } else if (key == "material.model") {
      const int m = integer();
      if (m < 1 || m > 4)
        throw std::invalid_argument("config line " + std::to_string(line) +
                                    ": material.model must be 1..4");
      sc.material.law.model = static_cast<DamageModel>(m);
    } else if (key == "material.E") {
      sc.material.moduli = ElasticModuli(num(), sc.material.moduli.nu);
    } else if (key == "material.nu") {
      sc.material.moduli = ElasticModuli(sc.material.moduli.E, num());
    } else if (key == "material.w1") {
      sc.material.w1 = num();
    } else if (key == "material.w11") {
      sc.material.law.w11 = num();
    } else if (key == "material.ell") {
      sc.material.ell = num();
    } else if (key == "material.kappa") {
      sc.material.kappa = num();
    } else if (key == "material.p") {
      sc.material.law.p = num();
    } else if (key == "material.k") {
      sc.material.law.k = num();
    } else if (key == "material.eta_r") {
      sc.material.eta_r = num();
    } else if (key == "loads.rho") {
      sc.loads.rho = num();
    } else if (key == "loads.grav") {
      sc.loads.grav = num();
    } else if (key == "loads.kbar") {
      sc.loads.kbar = num();
    } else if (key == "solver.algorithm") {
      if (val == "alternate")
        sc.solver.algorithm = Algorithm::Alternate;
      else if (val == "fast")
        sc.solver.algorithm = Algorithm::Fast;
      else
        throw std::invalid_argument("config line " + std::to_string(line) +
                                    ": solver.algorithm must be alternate or fast");
    } else if (key == "solver.tol_outer") {
      sc.solver.tol_outer = num();
    } else if (key == "solver.max_outer") {
      sc.solver.max_outer = integer();
    } else if (key == "solver.cl") {
      sc.solver.cl = num();
    } else if (key == "solver.tol_lin") {
      sc.solver.tol_lin = num();
    } else if (key == "solver.tol_kkt") {
      sc.solver.tol_kkt = num();
    } else if (key == "solver.max_inner_relax") {
      sc.solver.max_inner_relax = integer();
    } else if (key == "solver.max_newton") {
      sc.solver.max_newton = integer();
    } else if (key == "output.dir") {
      sc.output_dir = val;
    } else {
      throw std::invalid_argument("config line " + std::to_string(line) + ": unknown key '" +
                                  key + "'");
    }
  }
  if (seen.find("solver.tol_kkt") == seen.end())
    sc.solver.tol_kkt = 1e-6 * sc.material.law.w11;
  sc.validate();
  return sc;
}

/// Built-in scenarios. Caving presets use a 360 m x 95 m desk-scale box with
/// a bottom-centered growing cavity; compression presets load a 0.12 m x
/// 0.2 m specimen with a seeded diagonal band; column-2d is the homogeneous
/// gravity column on a 32 x 64 grid.
inline Scenario scenario_preset(const std::string& name) {
  auto material = [](int model, double w1, double w11, double ell) {
    MaterialParams p{ElasticModuli(2.9e10, 0.3),
                     DamageLaw{static_cast<DamageModel>(model), w11, 4.0, 2.0},
                     w1, ell, 1.0, 1e-6};
    return p;
  };
  auto finish = [](Scenario sc) {
    sc.solver.tol_kkt = 1e-6 * sc.material.law.w11;
    sc.validate();
    return sc;
  };

  if (name.rfind("caving-2d-model", 0) == 0 && name.size() == 16) {
    const int model = name[15] - '0';
    if (model >= 1 && model <= 4) {
      Scenario sc;
      sc.kind = ScenarioKind::Caving;
      sc.bounds = {-180.0, 0.0, 180.0, 95.0};
      sc.h_coarse = 12.0;
      sc.h_fine = 4.0;
      sc.band = 15.0;
      // Per-model cavity growth, scaled to each law's strength so every
      // excavation step stays inside the staggered scheme's convergent
      // regime: larger advances tip the weaker laws into a roof collapse
      // whose damage front needs unboundedly many outer iterations.
      const double dw[5] = {0.0, 22.0, 19.0, 20.0, 13.0};
      const double dh[5] = {0.0, 5.5, 4.5, 5.0, 3.0};
      sc.cavity = {0.0, 40.0, dw[model], 5.0, 10.0, dh[model]};
      sc.steps = 10;
      sc.material = material(model, 1e6, model == 4 ? 1e2 : 1e3, 0.75);
      sc.loads.rho = 2700.0;
      sc.loads.grav = 9.81;
      sc.loads.kbar = 1e9;
      sc.output_dir = "out/" + name;
      return finish(sc);
    }
  }
  if (name.rfind("compression-2d-model", 0) == 0 && name.size() == 21) {
    const int model = name[20] - '0';
    if (model >= 1 && model <= 4) {
      Scenario sc;
      sc.kind = ScenarioKind::Compression;
      sc.bounds = {0.0, 0.0, 0.12, 0.2};
      sc.h_coarse = 0.00375;
      sc.h_fine = 0.00375;
      sc.band = 0.01;
      sc.steps = 10;
      sc.top_displacement = -0.005;
      sc.seed = {0.03, 0.0625, 0.09, 0.1375, 0.01, 0.5};
      // one material scale for all four models so the localization contrast
      // is a pure law comparison on the same mesh; the damage threshold of
      // models 1/3/4 sits just above the far-field stress at full load
      sc.material = material(model, 9e7, 9e6, 0.0075);
      sc.output_dir = "out/" + name;
      return finish(sc);
    }
  }
  if (name == "column-2d") {
    Scenario sc;
    sc.kind = ScenarioKind::Caving;
    sc.bounds = {0.0, 0.0, 50.0, 100.0};
    sc.h_coarse = 1.5625;
    sc.h_fine = 1.5625;
    sc.band = 1.0;
    sc.cavity = {};
    sc.steps = 1;
    sc.material = material(1, 1e6, 1e3, 1.0);
    sc.output_dir = "out/column-2d";
    return finish(sc);
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

/// Load from a file path, or from a built-in preset via "preset:<name>".
inline Scenario load_scenario(const std::string& path) {
  constexpr const char* prefix = "preset:";
  if (path.rfind(prefix, 0) == 0) return scenario_preset(path.substr(7));
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  try {
    return parse_scenario(in);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

/// Serialize every field; parse_scenario on the output reproduces the
/// scenario exactly.
inline void write_scenario(const Scenario& sc, std::ostream& out) {
  using detail::fmt;
  out << "scenario.kind = " << (sc.kind == ScenarioKind::Caving ? "caving" : "compression")
      << "\n";
  out << "scenario.steps = " << sc.steps << "\n";
  out << "geometry.x0 = " << fmt(sc.bounds.x0) << "\n";
  out << "geometry.y0 = " << fmt(sc.bounds.y0) << "\n";
  out << "geometry.x1 = " << fmt(sc.bounds.x1) << "\n";
  out << "geometry.y1 = " << fmt(sc.bounds.y1) << "\n";
  out << "geometry.h_coarse = " << fmt(sc.h_coarse) << "\n";
  out << "geometry.h_fine = " << fmt(sc.h_fine) << "\n";
  out << "geometry.band = " << fmt(sc.band) << "\n";
  out << "cavity.x_center = " << fmt(sc.cavity.x_center) << "\n";
  out << "cavity.width0 = " << fmt(sc.cavity.width0) << "\n";
  out << "cavity.dwidth = " << fmt(sc.cavity.dwidth) << "\n";
  out << "cavity.z_base = " << fmt(sc.cavity.z_base) << "\n";
  out << "cavity.height0 = " << fmt(sc.cavity.height0) << "\n";
  out << "cavity.dheight = " << fmt(sc.cavity.dheight) << "\n";
  out << "compression.top_displacement = " << fmt(sc.top_displacement) << "\n";
  out << "seed.x0 = " << fmt(sc.seed.x0) << "\n";
  out << "seed.y0 = " << fmt(sc.seed.y0) << "\n";
  out << "seed.x1 = " << fmt(sc.seed.x1) << "\n";
  out << "seed.y1 = " << fmt(sc.seed.y1) << "\n";
  out << "seed.halfwidth = " << fmt(sc.seed.halfwidth) << "\n";
  out << "seed.alpha = " << fmt(sc.seed.alpha) << "\n";
  out << "material.model = " << static_cast<int>(sc.material.law.model) << "\n";
  out << "material.E = " << fmt(sc.material.moduli.E) << "\n";
  out << "material.nu = " << fmt(sc.material.moduli.nu) << "\n";
  out << "material.w1 = " << fmt(sc.material.w1) << "\n";
  out << "material.w11 = " << fmt(sc.material.law.w11) << "\n";
  out << "material.ell = " << fmt(sc.material.ell) << "\n";
  out << "material.kappa = " << fmt(sc.material.kappa) << "\n";
  out << "material.p = " << fmt(sc.material.law.p) << "\n";
  out << "material.k = " << fmt(sc.material.law.k) << "\n";
  out << "material.eta_r = " << fmt(sc.material.eta_r) << "\n";
  out << "loads.rho = " << fmt(sc.loads.rho) << "\n";
  out << "loads.grav = " << fmt(sc.loads.grav) << "\n";
  out << "loads.kbar = " << fmt(sc.loads.kbar) << "\n";
  out << "solver.algorithm = "
      << (sc.solver.algorithm == Algorithm::Fast ? "fast" : "alternate") << "\n";
  out << "solver.tol_outer = " << fmt(sc.solver.tol_outer) << "\n";
  out << "solver.max_outer = " << sc.solver.max_outer << "\n";
  out << "solver.cl = " << fmt(sc.solver.cl) << "\n";
  out << "solver.tol_lin = " << fmt(sc.solver.tol_lin) << "\n";
  out << "solver.tol_kkt = " << fmt(sc.solver.tol_kkt) << "\n";
  out << "solver.max_inner_relax = " << sc.solver.max_inner_relax << "\n";
  out << "solver.max_newton = " << sc.solver.max_newton << "\n";
  out << "output.dir = " << sc.output_dir << "\n";
}

/// Meshes and load cases for every step of the scenario's program.
inline std::vector<QuasiStep> build_steps(const Scenario& sc) {
  sc.validate();
  std::vector<QuasiStep> steps;
  steps.reserve(static_cast<std::size_t>(sc.steps));
  if (sc.kind == ScenarioKind::Caving) {
    const CavitySequence seq = make_cavity_sequence(
        sc.cavity.x_center, sc.cavity.width0, sc.cavity.dwidth, sc.cavity.z_base,
        sc.cavity.height0, sc.cavity.dheight, sc.steps);
    for (int i = 0; i < sc.steps; ++i) {
      QuasiStep q;
      q.mesh = excavate(sc.bounds, sc.h_coarse, sc.h_fine, sc.band, seq, i);
      q.load.program = BoundaryProgram::Caving;
      q.load.body = sc.loads;
      q.load.body.hmax = sc.bounds.y1;
      steps.push_back(std::move(q));
    }
  } else {
    const Mesh base = build_mesh(sc.bounds, sc.h_coarse, sc.h_fine, Rect{}, sc.band);
    for (int i = 1; i <= sc.steps; ++i) {
      QuasiStep q;
      q.mesh = base;
      q.load.program = BoundaryProgram::Compression;
      q.load.body = sc.loads;
      q.load.body.hmax = sc.bounds.y1;
      q.load.top_displacement =
          sc.top_displacement * static_cast<double>(i) / static_cast<double>(sc.steps);
      steps.push_back(std::move(q));
    }
  }
  return steps;
}

/// Seed damage on the first mesh, or an all-zero field when no seed is set.
inline Field build_seed(const Scenario& sc, const Mesh& first_mesh) {
  if (!sc.seed.enabled())
    return Field(static_cast<std::size_t>(first_mesh.num_nodes()), 0.0);
  return band_field(first_mesh, {sc.seed.x0, sc.seed.y0}, {sc.seed.x1, sc.seed.y1},
                    sc.seed.halfwidth, sc.seed.alpha);
}

/// Convenience wrapper: build the program, seed it and run.
inline SimulationResult run_scenario(const Scenario& sc, std::vector<QuasiStep>* out_steps = nullptr) {
  std::vector<QuasiStep> steps = build_steps(sc);
  const Field seed = build_seed(sc, steps.front().mesh);
  SimulationResult res = run_quasi_static(steps, sc.material, &seed, sc.solver);
  if (out_steps) *out_steps = std::move(steps);
  return res;
}

}  // namespace cavedamage
