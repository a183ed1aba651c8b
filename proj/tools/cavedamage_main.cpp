#include <algorithm>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cavedamage/io.hpp"
#include "cavedamage/scenario.hpp"

namespace {

using namespace cavedamage;

void print_intervals(const char* label, const std::vector<std::pair<double, double>>& iv) {
  std::printf("  %s:", label);
  if (iv.empty()) {
    std::printf(" none\n");
    return;
  }
  for (const auto& [a, b] : iv) std::printf(" [%.6g, %.6g]", a, b);
  std::printf("\n");
}

int cmd_hardening(int model, double p, double k) {
  DamageLaw law{static_cast<DamageModel>(model), 1e3, p, k};
  const HardeningReport rep = classify_hardening(law, 1000);
  std::printf("model %d (%d samples on [0, %.6g])\n", model, rep.samples, rep.alpha.back());
  print_intervals("strain hardening (w'a'' - w''a' > 0)", rep.strain_hardening_intervals);
  print_intervals("stress softening (w'S'' - w''S' > 0)", rep.stress_softening_intervals);
  return 0;
}

// Random small meshes for the finite-difference consistency suite. Redraws
// until the mesh fits the 60-node budget.
Mesh random_small_mesh(std::mt19937& gen) {
  for (;;) {
    std::uniform_int_distribution<int> cells(2, 5);
    std::uniform_real_distribution<double> hdist(0.2, 0.7);
    const double h = hdist(gen);
    const int nx = cells(gen);
    const int ny = cells(gen);
    Box2 box{0.0, 0.0, nx * h, ny * h};
    Rect cavity{};
    if (nx >= 4 && ny >= 4 && std::uniform_int_distribution<int>(0, 1)(gen) == 1)
      cavity = {h, 0.0, 2.0 * h, h};  // notch touching the bottom
    const bool refine = std::uniform_int_distribution<int>(0, 2)(gen) == 0 && !cavity.empty();
    Mesh mesh = build_mesh(box, h, refine ? 0.5 * h : h, cavity, 1.5 * h);
    if (mesh.num_nodes() <= 60) return mesh;
  }
}

int cmd_gradcheck(unsigned seed) {
  double worst_grad = 0.0;
  double worst_hess = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    std::mt19937 gen(seed + static_cast<unsigned>(rep));
    const Mesh mesh = random_small_mesh(gen);
    const std::size_t n = static_cast<std::size_t>(mesh.num_nodes());
    if (n > 60) throw std::runtime_error("gradcheck: mesh exceeded node budget");

    std::uniform_int_distribution<int> model(1, 4);
    MaterialParams params{ElasticModuli(2.9e10, 0.3),
                          DamageLaw{static_cast<DamageModel>(model(gen)), 1e3, 4.0, 2.0},
                          1e6, 0.5, 1.0, 1e-6};
    std::uniform_real_distribution<double> ua(0.05, 0.95);
    std::uniform_real_distribution<double> uu(-1e-4, 1e-4);
    Field alpha(n), u(2 * n);
    for (auto& v : alpha) v = ua(gen);
    for (auto& v : u) v = uu(gen);

    const DamageWorkspace w = make_damage_workspace(mesh, u, params);
    const Field grad = damage_gradient(w, alpha);
    double gscale = 1.0;
    for (double g : grad) gscale = std::max(gscale, std::abs(g));

    const double h = 1e-6;
    for (std::size_t i = 0; i < n; ++i) {
      Field ap = alpha, am = alpha;
      ap[i] += h;
      am[i] -= h;
      const double fd = (damage_objective(w, ap) - damage_objective(w, am)) / (2.0 * h);
      worst_grad = std::max(worst_grad, std::abs(fd - grad[i]) / gscale);
    }

    const Eigen::SparseMatrix<double> H = damage_hessian(w, alpha);
    Eigen::MatrixXd Hd = Eigen::MatrixXd(H);
    double hscale = 1.0;
    hscale = std::max(hscale, Hd.cwiseAbs().maxCoeff());
    for (std::size_t j = 0; j < n; ++j) {
      Field ap = alpha, am = alpha;
      ap[j] += h;
      am[j] -= h;
      const Field gp = damage_gradient(w, ap);
      const Field gm = damage_gradient(w, am);
      for (std::size_t i = 0; i < n; ++i) {
        const double fd = (gp[i] - gm[i]) / (2.0 * h);
        worst_hess = std::max(
            worst_hess, std::abs(fd - Hd(static_cast<Eigen::Index>(i),
                                         static_cast<Eigen::Index>(j))) / hscale);
      }
    }
  }
  std::printf("gradient vs finite differences: max relative error %.3e\n", worst_grad);
  std::printf("hessian  vs finite differences: max relative error %.3e\n", worst_hess);
  const bool ok = worst_grad <= 1e-5 && worst_hess <= 1e-4;
  if (!ok) std::fprintf(stderr, "error: finite-difference consistency outside tolerance\n");
  return ok ? 0 : 1;
}

int total_outer(const SimulationResult& r) {
  int n = 0;
  for (const auto& s : r.steps) n += static_cast<int>(s.history.outer.size());
  return n;
}

int cmd_run(const std::string& config, const std::string& algorithm, double cl) {
  Scenario sc = load_scenario(config);
  if (algorithm == "alternate")
    sc.solver.algorithm = Algorithm::Alternate;
  else if (algorithm == "fast")
    sc.solver.algorithm = Algorithm::Fast;
  else if (!algorithm.empty())
    throw std::invalid_argument("--algorithm must be alternate or fast");
  if (cl > 0.0) sc.solver.cl = cl;
  sc.validate();

  std::vector<QuasiStep> steps;
  const SimulationResult res = run_scenario(sc, &steps);
  for (std::size_t i = 0; i < res.steps.size(); ++i) {
    const StepResult& s = res.steps[i];
    std::printf("step %zu: %zu outer iterations, final error %.3e, max alpha %.6f%s\n", i,
                s.history.outer.size(), s.history.outer.back().error, s.max_alpha,
                s.history.converged ? "" : " [not converged]");
  }
  if (!res.completed) {
    std::fprintf(stderr, "error: %s\n", res.failure.c_str());
    return 1;
  }
  export_run(steps, res, sc.output_dir);
  std::printf("wrote %zu states and history.csv to %s\n", res.steps.size(),
              sc.output_dir.c_str());
  return 0;
}

int cmd_compare(const std::string& config) {
  Scenario sc = load_scenario(config);
  sc.validate();

  Scenario alt = sc;
  alt.solver.algorithm = Algorithm::Alternate;
  const SimulationResult ra = run_scenario(alt);
  if (!ra.completed) {
    std::fprintf(stderr, "error: alternate run failed: %s\n", ra.failure.c_str());
    return 1;
  }
  Scenario fast = sc;
  fast.solver.algorithm = Algorithm::Fast;
  const SimulationResult rf = run_scenario(fast);
  if (!rf.completed) {
    std::fprintf(stderr, "error: fast run failed: %s\n", rf.failure.c_str());
    return 1;
  }
  const int na = total_outer(ra);
  const int nf = total_outer(rf);
  std::printf("alternate: %d total outer iterations\n", na);
  std::printf("fast:      %d total outer iterations (cl = %.3g)\n", nf, sc.solver.cl);
  std::printf("speedup:   %.3f\n", nf > 0 ? static_cast<double>(na) / nf : 0.0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quasi-static gradient damage solver for box-with-cavity domains"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario and export VTK states + history");
  std::string run_config;
  std::string run_algorithm;
  double run_cl = 0.0;
  run->add_option("--config", run_config, "config file path or preset:<name>")->required();
  run->add_option("--algorithm", run_algorithm, "override: alternate | fast");
  run->add_option("--cl", run_cl, "override relaxation constant in (0,1)");

  auto* hard = app.add_subcommand("hardening", "classify strain hardening / stress softening");
  int hard_model = 1;
  double hard_p = 4.0;
  double hard_k = 2.0;
  hard->add_option("--model", hard_model, "damage law 1..4")->required()->check(CLI::Range(1, 4));
  hard->add_option("--p", hard_p, "Model 3 exponent");
  hard->add_option("--k", hard_k, "Model 4 parameter");

  auto* grad = app.add_subcommand("gradcheck", "finite-difference consistency suite");
  unsigned grad_seed = 1234;
  grad->add_option("--seed", grad_seed, "base RNG seed");

  auto* comp = app.add_subcommand("compare", "run both algorithms, report iteration totals");
  std::string comp_config;
  comp->add_option("--config", comp_config, "config file path or preset:<name>")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run) return cmd_run(run_config, run_algorithm, run_cl);
    if (*hard) return cmd_hardening(hard_model, hard_p, hard_k);
    if (*grad) return cmd_gradcheck(grad_seed);
    if (*comp) return cmd_compare(comp_config);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
