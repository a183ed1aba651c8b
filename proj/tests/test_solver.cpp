#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

#include <cavedamage/solver.hpp>

#include "oracles.hpp"

using namespace cavedamage;

namespace {

MaterialParams reference_params(int model, double w11 = 1e3) {
  return MaterialParams{ElasticModuli(2.9e10, 0.3),
                        DamageLaw{static_cast<DamageModel>(model), w11, 4.0, 2.0},
                        1e6, 0.5, 1.0, 1e-6};
}

Mesh reference_triangle() {
  Mesh m;
  m.nodes = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  m.tris = {{0, 1, 2}};
  m.bounds = {0.0, 0.0, 1.0, 1.0};
  m.h_coarse = m.h_fine = 1.0;
  return m;
}

oracle::MeshView view_of(const Mesh& m) {
  oracle::MeshView v;
  for (const auto& p : m.nodes) {
    v.x.push_back(p.x);
    v.y.push_back(p.y);
  }
  for (const auto& t : m.tris)
    for (int k = 0; k < 3; ++k) v.tri.push_back(t[static_cast<std::size_t>(k)]);
  return v;
}

oracle::LawParams law_params(const MaterialParams& p) {
  return {static_cast<int>(p.law.model), p.law.w11, p.law.p, p.law.k,
          p.moduli.E, p.moduli.nu, p.kappa, p.w1, p.ell};
}

// Uniform shear displacement u_x = 2 gamma y on the reference triangle so the
// element drive is positive and controlled by gamma.
Field shear_u(const Mesh& m, double gamma) {
  Field u(static_cast<std::size_t>(2 * m.num_nodes()), 0.0);
  for (int i = 0; i < m.num_nodes(); ++i)
    u[2 * static_cast<std::size_t>(i)] = 2.0 * gamma * m.nodes[static_cast<std::size_t>(i)].y;
  return u;
}

}  // namespace

TEST_CASE("solver config validation") {
  SolverConfig cfg;
  CHECK(cfg.algorithm == Algorithm::Fast);
  CHECK(cfg.cl == 0.9);
  CHECK(cfg.max_inner_relax == 50);
  CHECK_NOTHROW(cfg.validate());
  SolverConfig bad = cfg;
  bad.tol_outer = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.cl = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.max_inner_relax = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.tol_kkt = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("solve_linear handles diagonal systems exactly") {
  LinearSystem sys;
  sys.A.resize(3, 3);
  std::vector<Eigen::Triplet<double>> t{{0, 0, 2.0}, {1, 1, 3.0}, {2, 2, 4.0}};
  sys.A.setFromTriplets(t.begin(), t.end());
  sys.b.resize(3);
  sys.b << 2.0, 6.0, 12.0;
  Field x = solve_linear(sys, 1e-14);
  REQUIRE(x.size() == 3);
  CHECK(x[0] == 1.0);
  CHECK(x[1] == 2.0);
  CHECK(x[2] == 3.0);

  sys.b.setZero();
  Field z = solve_linear(sys, 1e-14);
  for (double v : z) CHECK(v == 0.0);
}

TEST_CASE("solve_linear rejects singular systems") {
  LinearSystem sys;
  sys.A.resize(2, 2);
  std::vector<Eigen::Triplet<double>> t{{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}};
  sys.A.setFromTriplets(t.begin(), t.end());
  sys.b.resize(2);
  sys.b << 1.0, 0.0;
  CHECK_THROWS_AS(solve_linear(sys, 1e-10), std::runtime_error);
}

TEST_CASE("solve_linear matches dense elimination on a gravity column") {
  Mesh m = build_mesh({0.0, 0.0, 6.0, 12.0}, 1.0, 1.0, Rect{}, 1.0);
  REQUIRE(m.num_nodes() == 91);
  MaterialParams p = reference_params(1);
  LoadCase lc;
  lc.program = BoundaryProgram::Caving;
  Field alpha(static_cast<std::size_t>(m.num_nodes()), 0.0);
  LinearSystem sys = assemble_elasticity(m, alpha, p, lc);
  const Field x = solve_linear(sys, 1e-12);

  const std::size_t n = static_cast<std::size_t>(sys.ndof());
  oracle::Vec dense(n * n, 0.0), rhs(n);
  for (int k = 0; k < sys.A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.A, k); it; ++it)
      dense[static_cast<std::size_t>(it.row()) * n + static_cast<std::size_t>(it.col())] +=
          it.value();
  for (std::size_t i = 0; i < n; ++i) rhs[i] = sys.b(static_cast<Eigen::Index>(i));
  const oracle::Vec ref = oracle::dense_solve(dense, rhs);

  double xmax = 0.0, dmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xmax = std::max(xmax, std::abs(ref[i]));
    dmax = std::max(dmax, std::abs(x[i] - ref[i]));
  }
  REQUIRE(xmax > 0.0);
  CHECK(dmax / xmax <= 1e-8);
}

TEST_CASE("minimizer stays at the bound when there is no drive") {
  Mesh m = reference_triangle();
  Field u(6, 0.0);
  DamageWorkspace w = make_damage_workspace(m, u, reference_params(1));
  SolverConfig cfg;
  Field lower(3, 0.0), warm(3, 0.3);
  MinimizeReport rep;
  Field a = minimize_damage(w, lower, warm, cfg, &rep);
  CHECK(rep.converged);
  for (double v : a) CHECK(v == 0.0);
}

TEST_CASE("minimizer accepts a fully pinned problem") {
  Mesh m = reference_triangle();
  Field u(6, 0.0);
  DamageWorkspace w = make_damage_workspace(m, u, reference_params(1));
  SolverConfig cfg;
  Field lower(3, 1.0), warm(3, 0.2);
  MinimizeReport rep;
  Field a = minimize_damage(w, lower, warm, cfg, &rep);
  CHECK(rep.converged);
  CHECK(rep.kkt == 0.0);
  for (double v : a) CHECK(v == 1.0);
}

TEST_CASE("minimizer validates inputs") {
  Mesh m = reference_triangle();
  Field u(6, 0.0);
  DamageWorkspace w = make_damage_workspace(m, u, reference_params(1));
  SolverConfig cfg;
  Field bad_lower(3, -0.1), warm(3, 0.0);
  CHECK_THROWS_AS(minimize_damage(w, bad_lower, warm, cfg), std::invalid_argument);
  Field lower(3, 0.0), short_warm(2, 0.0);
  CHECK_THROWS_AS(minimize_damage(w, lower, short_warm, cfg), std::invalid_argument);
}

TEST_CASE("minimizer matches the brute-force scan on a single triangle") {
  Mesh m = reference_triangle();
  const oracle::MeshView mv = view_of(m);
  SolverConfig cfg;
  cfg.tol_kkt = 1e-3;

  struct Instance {
    int model;
    double gamma;
    Field lower;
  };
  std::vector<Instance> cases = {
      {2, 2.3e-4, Field(3, 0.0)},           // interior minimum
      {1, 5e-5, Field(3, 0.0)},             // below threshold: stays at zero
      {1, 6e-4, Field(3, 0.0)},             // deep drive
      {4, 4e-4, Field{0.2, 0.0, 0.8}},      // one node floored above the minimum
      {3, 3e-4, Field(3, 0.1)},             // model 3 with a uniform floor
      {3, 1.5e-3, Field(3, 0.0)},           // drive strong enough to cap at 1
  };
  for (const auto& c : cases) {
    MaterialParams p = reference_params(c.model);
    p.w1 = 2e3;  // keep the gradient coupling mild so the scan converges
    const Field u = shear_u(m, c.gamma);
    DamageWorkspace w = make_damage_workspace(m, u, p);
    MinimizeReport rep;
    Field warm(3, 0.0);
    Field a = minimize_damage(w, c.lower, warm, cfg, &rep);
    CHECK(rep.converged);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a[i] >= c.lower[i]);
      CHECK(a[i] <= 1.0);
    }
    CHECK(damage_objective(w, a) <= damage_objective(w, c.lower) + 1e-12);
    CHECK(kkt_certificate(w, a, c.lower, cfg.tol_kkt).ok);

    const oracle::LawParams lp = law_params(p);
    auto obj = [&](const oracle::Vec& x) { return oracle::quadrature_objective(mv, u, x, lp); };
    const oracle::Vec ref = oracle::brute_minimize(obj, c.lower);
    // The scan must not have stalled above the minimizer's value.
    CHECK(obj(ref) <= obj(a) + 1e-9 * (1.0 + std::abs(obj(a))));
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(a[i] - ref[i]) <= 1e-3);
  }
}

TEST_CASE("step functions enforce their algorithm") {
  Mesh m = build_mesh({0.0, 0.0, 1.0, 1.0}, 0.5, 0.5, Rect{}, 1.0);
  MaterialParams p = reference_params(1);
  LoadCase lc;
  lc.program = BoundaryProgram::Compression;
  Field lower(static_cast<std::size_t>(m.num_nodes()), 0.0);
  State st;
  st.u.assign(static_cast<std::size_t>(2 * m.num_nodes()), 0.0);
  st.alpha = lower;
  SolverConfig fast;  // default algorithm Fast
  CHECK_THROWS_AS(alternate_step(m, p, lc, lower, st, fast), std::invalid_argument);
  SolverConfig alt = fast;
  alt.algorithm = Algorithm::Alternate;
  CHECK_THROWS_AS(fast_alternate_step(m, p, lc, lower, st, alt), std::invalid_argument);
}

TEST_CASE("an unloaded step converges in one outer iteration with zero error") {
  Mesh m = build_mesh({0.0, 0.0, 1.0, 1.0}, 0.5, 0.5, Rect{}, 1.0);
  MaterialParams p = reference_params(1);
  LoadCase lc;
  lc.program = BoundaryProgram::Compression;
  lc.top_displacement = 0.0;
  lc.body.rho = 0.0;
  Field lower(static_cast<std::size_t>(m.num_nodes()), 0.0);
  State st;
  st.u.assign(static_cast<std::size_t>(2 * m.num_nodes()), 0.0);
  st.alpha = lower;
  SolverConfig cfg;
  StepHistory hist = fast_alternate_step(m, p, lc, lower, st, cfg);
  CHECK(hist.converged);
  CHECK(hist.damage_converged);
  REQUIRE(hist.outer.size() == 1);
  CHECK(hist.outer[0].error == 0.0);
  CHECK(hist.outer[0].blend_count == 0);
  for (double v : st.alpha) CHECK(v == 0.0);
  for (double v : st.u) CHECK(v == 0.0);
}

TEST_CASE("quasi-static driver on an undamaged column") {
  Mesh m = build_mesh({0.0, 0.0, 10.0, 20.0}, 2.5, 2.5, Rect{}, 1.0);
  LoadCase lc;
  lc.program = BoundaryProgram::Caving;
  std::vector<QuasiStep> steps = {{m, lc}, {m, lc}};
  SolverConfig cfg;
  SimulationResult res = run_quasi_static(steps, reference_params(1), nullptr, cfg);
  REQUIRE(res.completed);
  REQUIRE(res.steps.size() == 2);
  for (const auto& s : res.steps) {
    CHECK(s.history.converged);
    CHECK(s.max_alpha == 0.0);
    for (double v : s.lower) CHECK(v == 0.0);
    bool moved = false;
    for (double v : s.u)
      if (v != 0.0) moved = true;
    CHECK(moved);
  }
}

TEST_CASE("quasi-static driver clamps the seed into the unit interval") {
  Mesh m = build_mesh({0.0, 0.0, 10.0, 20.0}, 5.0, 5.0, Rect{}, 1.0);
  LoadCase lc;
  lc.program = BoundaryProgram::Caving;
  Field seed(static_cast<std::size_t>(m.num_nodes()), 0.0);
  seed[0] = 1.5;
  seed[1] = -0.3;
  seed[2] = 0.4;
  std::vector<QuasiStep> steps = {{m, lc}};
  SolverConfig cfg;
  SimulationResult res = run_quasi_static(steps, reference_params(1), &seed, cfg);
  REQUIRE(res.completed);
  CHECK(res.steps[0].lower[0] == 1.0);
  CHECK(res.steps[0].lower[1] == 0.0);
  CHECK(res.steps[0].lower[2] == 0.4);
  CHECK(res.steps[0].alpha[0] == 1.0);  // irreversibility keeps the seeded node
}

TEST_CASE("quasi-static driver reports failures with partial history") {
  Mesh m = build_mesh({0.0, 0.0, 10.0, 20.0}, 5.0, 5.0, Rect{}, 1.0);
  LoadCase good;
  good.program = BoundaryProgram::Caving;
  LoadCase bad = good;
  bad.body.hmax = 35.0;  // inconsistent with the mesh top
  std::vector<QuasiStep> steps = {{m, good}, {m, bad}};
  SolverConfig cfg;
  SimulationResult res = run_quasi_static(steps, reference_params(1), nullptr, cfg);
  CHECK_FALSE(res.completed);
  REQUIRE(res.steps.size() == 1);
  CHECK(res.steps[0].history.converged);
  CHECK_FALSE(res.failure.empty());

  CHECK_THROWS_AS(run_quasi_static({}, reference_params(1), nullptr, cfg),
                  std::invalid_argument);

  Field short_seed(3, 0.0);
  SimulationResult res2 = run_quasi_static(steps, reference_params(1), &short_seed, cfg);
  CHECK_FALSE(res2.completed);
  CHECK(res2.steps.empty());
  CHECK_FALSE(res2.failure.empty());
}

TEST_CASE("identical runs produce bitwise identical states") {
  CavitySequence seq = make_cavity_sequence(0.0, 8.0, 4.0, 0.0, 4.0, 2.0, 3);
  std::vector<QuasiStep> steps;
  for (int s = 0; s < seq.count(); ++s) {
    QuasiStep q;
    q.mesh = excavate({-30.0, 0.0, 30.0, 20.0}, 5.0, 5.0, 8.0, seq, s);
    q.load.program = BoundaryProgram::Caving;
    steps.push_back(std::move(q));
  }
  MaterialParams p = reference_params(2);
  p.ell = 3.0;
  SolverConfig cfg;
  SimulationResult r1 = run_quasi_static(steps, p, nullptr, cfg);
  SimulationResult r2 = run_quasi_static(steps, p, nullptr, cfg);
  REQUIRE(r1.completed);
  REQUIRE(r2.completed);
  REQUIRE(r1.steps.size() == r2.steps.size());
  bool damaged = false;
  for (std::size_t s = 0; s < r1.steps.size(); ++s) {
    const auto& a = r1.steps[s];
    const auto& b = r2.steps[s];
    REQUIRE(a.alpha.size() == b.alpha.size());
    for (std::size_t i = 0; i < a.alpha.size(); ++i) CHECK(a.alpha[i] == b.alpha[i]);
    for (std::size_t i = 0; i < a.u.size(); ++i) CHECK(a.u[i] == b.u[i]);
    REQUIRE(a.history.outer.size() == b.history.outer.size());
    for (std::size_t k = 0; k < a.history.outer.size(); ++k) {
      CHECK(a.history.outer[k].error == b.history.outer[k].error);
      CHECK(a.history.outer[k].objective == b.history.outer[k].objective);
    }
    if (a.max_alpha > 0.0) damaged = true;
  }
  CHECK(damaged);  // the scenario actually exercises the damage path
}
