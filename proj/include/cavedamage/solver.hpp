#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavedamage/fem.hpp"
#include "cavedamage/mesh.hpp"

namespace cavedamage {

enum class Algorithm { Alternate, Fast };

struct SolverConfig {
  Algorithm algorithm = Algorithm::Fast;
  double tol_outer = 1e-4;    // L-inf damage increment between outer iterates
  int max_outer = 200;
  double cl = 0.9;            // relaxation constant, in (0, 1)
  double tol_lin = 1e-10;     // relative residual of linear solves
  double tol_kkt = 1e-3;      // criterion-residual units [N/m^3]
  int max_inner_relax = 50;   // cap on relaxation blends per outer iterate
  int max_newton = 200;

  void validate() const {
    if (!(tol_outer > 0.0)) throw std::invalid_argument("SolverConfig: tol_outer must be positive");
    if (max_outer < 1) throw std::invalid_argument("SolverConfig: max_outer must be >= 1");
    if (!(cl > 0.0 && cl < 1.0)) throw std::invalid_argument("SolverConfig: cl must lie in (0, 1)");
    if (!(tol_lin > 0.0)) throw std::invalid_argument("SolverConfig: tol_lin must be positive");
    if (!(tol_kkt > 0.0)) throw std::invalid_argument("SolverConfig: tol_kkt must be positive");
    if (max_inner_relax < 1)
      throw std::invalid_argument("SolverConfig: max_inner_relax must be >= 1");
    if (max_newton < 1) throw std::invalid_argument("SolverConfig: max_newton must be >= 1");
  }
};

/// Direct sparse solve with one round of iterative refinement and a residual
/// check against tol_rel.
inline Field solve_linear(const LinearSystem& sys, double tol_rel) {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  ldlt.compute(sys.A);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("solve_linear: factorization failed");
  Eigen::VectorXd x = ldlt.solve(sys.b);
  // Normwise backward error; the plain ||r||/||b|| ratio is unreachable once
  // nearly failed regions sit on the residual stiffness floor and ||x|| grows.
  const double anorm = sys.A.norm();
  auto backward_error = [&](const Eigen::VectorXd& v) {
    const double denom = anorm * v.norm() + sys.b.norm();
    return (sys.b - sys.A * v).norm() / std::max(denom, 1e-300);
  };
  for (int pass = 0; pass < 3; ++pass) {
    if (backward_error(x) <= tol_rel) break;
    x += ldlt.solve(sys.b - sys.A * x);
  }
  if (!(backward_error(x) <= tol_rel))
    throw std::runtime_error("solve_linear: residual did not reach tolerance");
  return Field(x.data(), x.data() + x.size());
}

struct KktReport {
  bool ok = false;
  double worst_stationarity = 0.0;   // max violation of r >= -tol off the upper bound
  double worst_complementarity = 0.0;
};

/// First-order certificate for min of the damage functional over
/// [lower, 1]: off the upper bound the criterion residual must be >= -tol,
/// and r * (alpha - active bound) must vanish to tol * max(1, |r|).
inline KktReport kkt_certificate(const DamageWorkspace& w, const Field& alpha,
                                 const Field& lower, double tol) {
  const Field r = criterion_residual(w, alpha);
  constexpr double eps_b = 1e-9;
  KktReport rep;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const bool at_upper = alpha[i] >= 1.0 - eps_b;
    if (!at_upper) {
      rep.worst_stationarity = std::max(rep.worst_stationarity, -r[i]);
      rep.worst_complementarity =
          std::max(rep.worst_complementarity,
                   std::abs(r[i] * (alpha[i] - lower[i])) / std::max(1.0, std::abs(r[i])));
    } else {
      rep.worst_complementarity =
          std::max(rep.worst_complementarity,
                   std::abs(r[i] * (1.0 - alpha[i])) / std::max(1.0, std::abs(r[i])));
    }
  }
  rep.ok = rep.worst_stationarity <= tol && rep.worst_complementarity <= tol;
  return rep;
}

struct MinimizeReport {
  int iterations = 0;
  bool converged = false;
  double kkt = 0.0;
};

namespace detail {

// Sup-norm of the projected criterion residual: the violation is the residual
// component pointing into the feasible set.
inline double kkt_measure(const DamageWorkspace& w, const Field& alpha,
                          const Field& lower, const Field& grad) {
  constexpr double eps_b = 1e-9;
  double worst = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double r = grad[i] / w.volumes[i];
    const bool at_lower = alpha[i] <= lower[i] + eps_b;
    const bool at_upper = alpha[i] >= 1.0 - eps_b;
    if (at_lower && at_upper) continue;  // pinned: no feasible move
    if (at_upper)
      worst = std::max(worst, r);
    else if (at_lower)
      worst = std::max(worst, -r);
    else
      worst = std::max(worst, std::abs(r));
  }
  return worst;
}

}  // namespace detail

/// Bound-constrained minimization of the damage functional over
/// [lower, 1] by projected Newton with an active set, Levenberg fallback and
/// Armijo backtracking. The result never exceeds the objective at `lower`.
inline Field minimize_damage(const DamageWorkspace& w, const Field& lower,
                             const Field& warm, const SolverConfig& cfg,
                             MinimizeReport* report = nullptr) {
  const std::size_t n = lower.size();
  if (warm.size() != n || w.volumes.size() != n)
    throw std::invalid_argument("minimize_damage: field length mismatch");
  for (std::size_t i = 0; i < n; ++i)
    if (!(lower[i] >= 0.0 && lower[i] <= 1.0))
      throw std::invalid_argument("minimize_damage: lower bound outside [0, 1]");

  Field alpha(n);
  for (std::size_t i = 0; i < n; ++i) alpha[i] = std::clamp(warm[i], lower[i], 1.0);
  double obj = damage_objective(w, alpha);
  {
    const double obj_lower = damage_objective(w, lower);
    if (obj_lower < obj) {
      alpha = lower;
      obj = obj_lower;
    }
  }

  constexpr double eps_b = 1e-9;
  // Stop well below the certificate threshold: the staggered outer loop
  // treats this solve as an exact map, and leftover subproblem slack would
  // put a noise floor under its sup-norm increments.
  const double tol_stop = cfg.tol_kkt * 1e-6;
  MinimizeReport rep;
  for (int it = 0; it < cfg.max_newton; ++it) {
    rep.iterations = it;
    const Field grad = damage_gradient(w, alpha);
    rep.kkt = detail::kkt_measure(w, alpha, lower, grad);
    if (rep.kkt <= tol_stop) {
      rep.converged = true;
      break;
    }

    // active set: nodes pressed against a bound by the gradient
    std::vector<int> free_of;
    std::vector<int> idx(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      const bool lo = alpha[i] <= lower[i] + eps_b && grad[i] > 0.0;
      const bool hi = alpha[i] >= 1.0 - eps_b && grad[i] < 0.0;
      if (!lo && !hi) {
        idx[i] = static_cast<int>(free_of.size());
        free_of.push_back(static_cast<int>(i));
      }
    }
    if (free_of.empty()) {
      rep.converged = rep.kkt <= cfg.tol_kkt;
      break;
    }

    const Eigen::SparseMatrix<double> H = damage_hessian(w, alpha);
    const int nf = static_cast<int>(free_of.size());
    std::vector<Eigen::Triplet<double>> ht;
    double hscale = 1.0;
    for (int k = 0; k < H.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator itH(H, k); itH; ++itH) {
        const int r = idx[static_cast<std::size_t>(itH.row())];
        const int c = idx[static_cast<std::size_t>(itH.col())];
        if (r >= 0 && c >= 0) ht.emplace_back(r, c, itH.value());
        if (itH.row() == itH.col()) hscale = std::max(hscale, std::abs(itH.value()));
      }
    Eigen::VectorXd gf(nf);
    for (int k = 0; k < nf; ++k) gf[k] = grad[static_cast<std::size_t>(free_of[static_cast<std::size_t>(k)])];

    // Newton direction, regularized until it points downhill
    Eigen::VectorXd df;
    bool have_dir = false;
    double tau = 0.0;
    for (int attempt = 0; attempt < 7; ++attempt) {
      std::vector<Eigen::Triplet<double>> reg = ht;
      if (tau > 0.0)
        for (int k = 0; k < nf; ++k) reg.emplace_back(k, k, tau);
      Eigen::SparseMatrix<double> Hf(nf, nf);
      Hf.setFromTriplets(reg.begin(), reg.end());
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
      ldlt.compute(Hf);
      if (ldlt.info() == Eigen::Success) {
        df = ldlt.solve(-gf);
        if (df.allFinite() && gf.dot(df) < -1e-14 * gf.norm() * df.norm()) {
          have_dir = true;
          break;
        }
      }
      tau = tau == 0.0 ? 1e-10 * hscale : 100.0 * tau;
    }
    if (!have_dir) {
      // Jacobi-scaled steepest descent
      std::vector<double> hd(static_cast<std::size_t>(nf), 0.0);
      for (const auto& tr : ht)
        if (tr.row() == tr.col()) hd[static_cast<std::size_t>(tr.row())] += tr.value();
      df.resize(nf);
      for (int k = 0; k < nf; ++k) {
        const double d = hd[static_cast<std::size_t>(k)];
        df[k] = -gf[k] / (d > 1e-12 * hscale ? d : hscale);
      }
    }

    // projected Armijo backtracking
    double s = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      Field trial = alpha;
      double m = 0.0;
      for (int k = 0; k < nf; ++k) {
        const std::size_t i = static_cast<std::size_t>(free_of[static_cast<std::size_t>(k)]);
        trial[i] = std::clamp(alpha[i] + s * df[k], lower[i], 1.0);
        m += grad[i] * (trial[i] - alpha[i]);
      }
      if (m < 0.0) {
        const double obj_t = damage_objective(w, trial);
        if (obj_t <= obj + 1e-4 * m) {
          alpha = std::move(trial);
          obj = obj_t;
          accepted = true;
          break;
        }
      }
      s *= 0.5;
    }
    if (!accepted) break;  // no admissible descent left within line-search depth
  }
  if (!rep.converged) {
    // cap reached or stalled: report the best iterate with its measure
    const Field grad = damage_gradient(w, alpha);
    rep.kkt = detail::kkt_measure(w, alpha, lower, grad);
    rep.converged = rep.kkt <= cfg.tol_kkt;
  }
  if (report) *report = rep;
  return alpha;
}

/// One accepted outer iterate of the staggered scheme.
struct OuterRecord {
  double error = 0.0;         // L-inf damage increment, after any relaxation
  int blend_count = 0;        // relaxation blends applied this iterate
  double objective = 0.0;     // damage functional at the accepted iterate
  double elapsed_seconds = 0.0;
};

struct StepHistory {
  std::vector<OuterRecord> outer;
  bool converged = false;         // error fell under tol_outer before max_outer
  bool damage_converged = true;   // every damage subproblem met tol_kkt
  bool relax_capped = false;      // some inner relaxation hit max_inner_relax
  int total_blends = 0;
};

/// Displacement and damage at the end of a loading step.
struct State {
  Field u;
  Field alpha;
};

namespace detail {

inline double linf_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Staggered elasticity / damage loop shared by both algorithms; `relax`
// enables the inner error-damping blends.
inline StepHistory step_loop(const Mesh& mesh, const MaterialParams& params,
                             const LoadCase& lc, const Field& lower, State& state,
                             const SolverConfig& cfg, bool relax) {
  cfg.validate();
  params.validate();
  if (lower.size() != static_cast<std::size_t>(mesh.num_nodes()))
    throw std::invalid_argument("step_loop: lower bound length mismatch");

  Field alpha_prev = state.alpha;
  for (std::size_t i = 0; i < alpha_prev.size(); ++i)
    alpha_prev[i] = std::clamp(alpha_prev[i], lower[i], 1.0);
  double error_prev = 1.0;

  StepHistory hist;
  Field u;
  for (int p = 1; p <= cfg.max_outer; ++p) {
    const auto t0 = std::chrono::steady_clock::now();
    const LinearSystem sys = assemble_elasticity(mesh, alpha_prev, params, lc);
    u = solve_linear(sys, cfg.tol_lin);
    const DamageWorkspace w = make_damage_workspace(mesh, u, params);
    MinimizeReport mrep;
    Field alpha = minimize_damage(w, lower, alpha_prev, cfg, &mrep);
    hist.damage_converged = hist.damage_converged && mrep.converged;
    double error = linf_diff(alpha_prev, alpha);

    int blends = 0;
    if (relax) {
      while (error > error_prev && blends < cfg.max_inner_relax) {
        // Convex blend of feasible iterates; clamp so rounding cannot leave
        // [lower, 1].
        for (std::size_t i = 0; i < alpha.size(); ++i)
          alpha[i] = std::clamp(cfg.cl * alpha_prev[i] + (1.0 - cfg.cl) * alpha[i],
                                lower[i], 1.0);
        error = linf_diff(alpha_prev, alpha);
        ++blends;
      }
      if (blends >= cfg.max_inner_relax && error > error_prev) hist.relax_capped = true;
    }
    const auto t1 = std::chrono::steady_clock::now();
    hist.outer.push_back({error, blends, damage_objective(w, alpha),
                          std::chrono::duration<double>(t1 - t0).count()});
    hist.total_blends += blends;
    alpha_prev = std::move(alpha);
    error_prev = error;
    // A step may end only on an unblended iterate: the stored damage field
    // must be the exact subproblem minimizer at the stored displacement.
    if (error <= cfg.tol_outer && blends == 0) {
      hist.converged = true;
      break;
    }
  }
  state.u = std::move(u);
  state.alpha = std::move(alpha_prev);
  return hist;
}

}  // namespace detail

/// Plain alternate minimization: solve elasticity at the current damage,
/// minimize damage at the new displacement, repeat until the L-inf damage
/// increment falls under tol_outer.
inline StepHistory alternate_step(const Mesh& mesh, const MaterialParams& params,
                                  const LoadCase& lc, const Field& lower, State& state,
                                  const SolverConfig& cfg) {
  if (cfg.algorithm != Algorithm::Alternate)
    throw std::invalid_argument("alternate_step: config selects a different algorithm");
  return detail::step_loop(mesh, params, lc, lower, state, cfg, false);
}

/// Alternate minimization with error-damping relaxation: whenever an iterate
/// would increase the error, blend it toward the previous damage field with
/// weight cl until the error stops growing.
inline StepHistory fast_alternate_step(const Mesh& mesh, const MaterialParams& params,
                                       const LoadCase& lc, const Field& lower, State& state,
                                       const SolverConfig& cfg) {
  if (cfg.algorithm != Algorithm::Fast)
    throw std::invalid_argument("fast_alternate_step: config selects a different algorithm");
  return detail::step_loop(mesh, params, lc, lower, state, cfg, true);
}

/// One loading step of a quasi-static program: a (possibly re-meshed) domain
/// and its boundary program.
struct QuasiStep {
  Mesh mesh;
  LoadCase load;
};

struct StepResult {
  StepHistory history;
  Field lower;   // irreversibility bound used for this step
  Field alpha;   // converged damage
  Field u;       // converged displacement
  double max_alpha = 0.0;
  double elapsed_seconds = 0.0;
};

struct SimulationResult {
  std::vector<StepResult> steps;
  bool completed = false;
  std::string failure;  // empty unless a step failed structurally
};

/// Quasi-static driver: carries damage between steps as the lower bound of
/// the next minimization (interpolated across re-meshes), starting from an
/// optional seed field on the first mesh. On a structural failure the partial
/// history is returned with `completed` false.
inline SimulationResult run_quasi_static(const std::vector<QuasiStep>& steps,
                                         const MaterialParams& params,
                                         const Field* seed, const SolverConfig& cfg) {
  if (steps.empty()) throw std::invalid_argument("run_quasi_static: no steps");
  cfg.validate();
  SimulationResult result;
  result.steps.reserve(steps.size());
  const Mesh* prev_mesh = nullptr;
  Field prev_alpha;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const Mesh& mesh = steps[i].mesh;
    try {
      Field lower;
      if (prev_mesh == nullptr) {
        if (seed != nullptr) {
          if (seed->size() != static_cast<std::size_t>(mesh.num_nodes()))
            throw std::invalid_argument("run_quasi_static: seed length mismatch");
          lower = *seed;
          for (double& v : lower) v = std::clamp(v, 0.0, 1.0);
        } else {
          lower.assign(static_cast<std::size_t>(mesh.num_nodes()), 0.0);
        }
      } else {
        lower = transfer_damage(*prev_mesh, prev_alpha, mesh);
      }

      State state;
      state.u.assign(static_cast<std::size_t>(2 * mesh.num_nodes()), 0.0);
      state.alpha = lower;

      const auto t0 = std::chrono::steady_clock::now();
      StepHistory hist =
          cfg.algorithm == Algorithm::Fast
              ? fast_alternate_step(mesh, params, steps[i].load, lower, state, cfg)
              : alternate_step(mesh, params, steps[i].load, lower, state, cfg);
      const auto t1 = std::chrono::steady_clock::now();

      StepResult sr;
      sr.history = std::move(hist);
      sr.lower = std::move(lower);
      sr.alpha = state.alpha;
      sr.u = std::move(state.u);
      sr.max_alpha = sr.alpha.empty() ? 0.0 : *std::max_element(sr.alpha.begin(), sr.alpha.end());
      sr.elapsed_seconds = std::chrono::duration<double>(t1 - t0).count();
      prev_mesh = &mesh;
      prev_alpha = sr.alpha;
      result.steps.push_back(std::move(sr));
    } catch (const std::exception& e) {
      result.failure = e.what();
      return result;
    }
  }
  result.completed = true;
  return result;
}

}  // namespace cavedamage
