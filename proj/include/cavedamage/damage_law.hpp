#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cavedamage/tensor.hpp"

namespace cavedamage {

enum class DamageModel : int { Model1 = 1, Model2 = 2, Model3 = 3, Model4 = 4 };

/// One of the four damage laws: degradation a(alpha) and local dissipation
/// w(alpha). All four have a(0) = 1, a(1) = 0, a strictly decreasing and
/// w(0) = 0, w strictly increasing with w(1) = w11.
///
///   Model 1:  a = (1-alpha)^2            w = w11 alpha
///   Model 2:  a = (1-alpha)^2            w = w11 alpha^2
///   Model 3:  a = (1-alpha)^p            w = w11 (1 - (1-alpha)^(p/2))
///   Model 4:  a = (1-alpha)/(1+(k-1)alpha)   w = w11 alpha
///
/// The dissipation scale w11 is deliberately independent of the gradient-term
/// scale w1 so the two can be controlled separately.
struct DamageLaw {
  DamageModel model = DamageModel::Model1;
  double w11 = 1.0;  // dissipation scale [N/m^3]
  double p = 4.0;    // Model 3 exponent, p > 0
  double k = 2.0;    // Model 4 parameter, k > 1

  void validate() const {
    if (!(w11 > 0.0)) throw std::invalid_argument("DamageLaw: w11 must be positive");
    if (model == DamageModel::Model3 && !(p > 0.0))
      throw std::invalid_argument("DamageLaw: Model 3 requires p > 0");
    if (model == DamageModel::Model4 && !(k > 1.0))
      throw std::invalid_argument("DamageLaw: Model 4 requires k > 1");
  }
};

/// Value and first two derivatives of a scalar law at one damage level.
struct LawEval {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

namespace detail {
inline void check_alpha(double alpha, const char* what) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::domain_error(std::string(what) + ": alpha outside [0, 1]");
}
}  // namespace detail

/// Degradation a(alpha) with analytic first and second derivatives.
inline LawEval degradation(const DamageLaw& law, double alpha) {
  detail::check_alpha(alpha, "degradation");
  const double s = 1.0 - alpha;
  switch (law.model) {
    case DamageModel::Model1:
    case DamageModel::Model2:
      return {s * s, -2.0 * s, 2.0};
    case DamageModel::Model3: {
      const double p = law.p;
      const double c2 = p * (p - 1.0);
      return {std::pow(s, p), -p * std::pow(s, p - 1.0),
              c2 == 0.0 ? 0.0 : c2 * std::pow(s, p - 2.0)};
    }
    case DamageModel::Model4: {
      const double q = 1.0 + (law.k - 1.0) * alpha;
      return {s / q, -law.k / (q * q), 2.0 * law.k * (law.k - 1.0) / (q * q * q)};
    }
  }
  throw std::logic_error("degradation: unknown model");
}

/// Local dissipation w(alpha) with analytic first and second derivatives.
inline LawEval dissipation(const DamageLaw& law, double alpha) {
  detail::check_alpha(alpha, "dissipation");
  switch (law.model) {
    case DamageModel::Model1:
    case DamageModel::Model4:
      return {law.w11 * alpha, law.w11, 0.0};
    case DamageModel::Model2:
      return {law.w11 * alpha * alpha, 2.0 * law.w11 * alpha, 2.0 * law.w11};
    case DamageModel::Model3: {
      const double h = 0.5 * law.p;
      const double s = 1.0 - alpha;
      const double c2 = h * (h - 1.0);
      return {law.w11 * (1.0 - std::pow(s, h)), law.w11 * h * std::pow(s, h - 1.0),
              c2 == 0.0 ? 0.0 : -law.w11 * c2 * std::pow(s, h - 2.0)};
    }
  }
  throw std::logic_error("dissipation: unknown model");
}

/// Full material description for one run.
struct MaterialParams {
  ElasticModuli moduli;
  DamageLaw law;
  double w1 = 1.0;      // gradient-term scale [N/m^3]
  double ell = 1.0;     // internal length [m]
  double kappa = 1.0;   // spherical-part weight [-]
  double eta_r = 1e-6;  // residual stiffness floor so the elastic operator
                        // stays invertible at alpha = 1

  /// Effective degradation a(alpha) + eta_r; derivatives are those of a.
  LawEval degradation_eff(double alpha) const {
    LawEval a = degradation(law, alpha);
    a.value += eta_r;
    return a;
  }

  void validate() const {
    law.validate();
    if (!(w1 > 0.0)) throw std::invalid_argument("MaterialParams: w1 must be positive");
    if (!(ell > 0.0)) throw std::invalid_argument("MaterialParams: ell must be positive");
    if (!(kappa >= 0.0)) throw std::invalid_argument("MaterialParams: kappa must be >= 0");
    if (!(eta_r >= 0.0 && eta_r < 1.0))
      throw std::invalid_argument("MaterialParams: eta_r must lie in [0, 1)");
  }
};

/// Damage generator H(eps, alpha): derivative in alpha of
/// (1/E) (sigma^d : sigma^d - (2/3) kappa sigma^s : sigma^s)
/// with sigma = a_eff(alpha) A0 eps, i.e.
/// ((a_eff^2)'(alpha)/E) [ (A0 eps)^d : (A0 eps)^d - (2/3) kappa (A0 eps)^s : (A0 eps)^s ].
inline double driving_force(const SymTensor3& eps, double alpha,
                            const MaterialParams& params) {
  detail::check_alpha(alpha, "driving_force");
  const SymTensor3 s0 = isotropic_stress(eps, params.moduli);
  const TensorSplit sp = split(s0);
  const double bracket = contract(sp.deviatoric, sp.deviatoric) -
                         (2.0 / 3.0) * params.kappa * contract(sp.spherical, sp.spherical);
  const LawEval a = params.degradation_eff(alpha);
  return 2.0 * a.value * a.d1 * bracket / params.moduli.E;
}

/// Hardening classification of a damage law over a uniform alpha grid.
/// With A(alpha) = a(alpha) A0 and S = A^{-1}, the rigidity scalar a and the
/// compliance scalar 1/a carry the monotonicity of the elastic domains:
/// strain hardening where w' a'' - w'' a' > 0 and stress softening where
/// w' S'' - w'' S' > 0.
struct HardeningReport {
  int samples = 0;
  std::vector<double> alpha;                  // grid over [0, 1 - 1/samples]
  std::vector<double> strain_hardening_sign;  // w' a'' - w'' a'
  std::vector<double> stress_softening_sign;  // w' S'' - w'' S'
  std::vector<std::pair<double, double>> strain_hardening_intervals;
  std::vector<std::pair<double, double>> stress_softening_intervals;
};

namespace detail {
inline std::vector<std::pair<double, double>> positive_runs(
    const std::vector<double>& grid, const std::vector<double>& f) {
  std::vector<std::pair<double, double>> runs;
  std::size_t i = 0;
  while (i < f.size()) {
    if (f[i] > 0.0) {
      std::size_t j = i;
      while (j + 1 < f.size() && f[j + 1] > 0.0) ++j;
      runs.emplace_back(grid[i], grid[j]);
      i = j + 1;
    } else {
      ++i;
    }
  }
  return runs;
}
}  // namespace detail

inline HardeningReport classify_hardening(const DamageLaw& law, int samples) {
  if (samples < 100)
    throw std::invalid_argument("classify_hardening: samples must be >= 100");
  law.validate();
  HardeningReport rep;
  rep.samples = samples;
  const int n = samples;
  const double top = 1.0 - 1.0 / static_cast<double>(samples);
  rep.alpha.resize(n);
  rep.strain_hardening_sign.resize(n);
  rep.stress_softening_sign.resize(n);
  for (int j = 0; j < n; ++j) {
    const double al = top * static_cast<double>(j) / static_cast<double>(n - 1);
    rep.alpha[j] = al;
    const LawEval a = degradation(law, al);
    const LawEval w = dissipation(law, al);
    // S = 1/a, so S' = -a'/a^2 and S'' = (2 a'^2 - a a'') / a^3.
    const double s1 = -a.d1 / (a.value * a.value);
    const double s2 = (2.0 * a.d1 * a.d1 - a.value * a.d2) /
                      (a.value * a.value * a.value);
    rep.strain_hardening_sign[j] = w.d1 * a.d2 - w.d2 * a.d1;
    rep.stress_softening_sign[j] = w.d1 * s2 - w.d2 * s1;
  }
  rep.strain_hardening_intervals = detail::positive_runs(rep.alpha, rep.strain_hardening_sign);
  rep.stress_softening_intervals = detail::positive_runs(rep.alpha, rep.stress_softening_sign);
  return rep;
}

}  // namespace cavedamage
