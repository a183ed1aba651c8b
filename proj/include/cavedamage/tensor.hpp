#pragma once

#include <cmath>
#include <stdexcept>

namespace cavedamage {

/// Symmetric second-order tensor in 3D, six independent components.
/// Plane-strain states are lifted into this representation before any
/// deviatoric/spherical splitting, so the constitutive structure stays 3D
/// even in 2D runs.
struct SymTensor3 {
  double xx = 0.0;
  double yy = 0.0;
  double zz = 0.0;
  double xy = 0.0;
  double xz = 0.0;
  double yz = 0.0;

  static SymTensor3 identity() { return {1.0, 1.0, 1.0, 0.0, 0.0, 0.0}; }

  SymTensor3 operator+(const SymTensor3& o) const {
    return {xx + o.xx, yy + o.yy, zz + o.zz, xy + o.xy, xz + o.xz, yz + o.yz};
  }
  SymTensor3 operator-(const SymTensor3& o) const {
    return {xx - o.xx, yy - o.yy, zz - o.zz, xy - o.xy, xz - o.xz, yz - o.yz};
  }
  SymTensor3 operator*(double s) const {
    return {xx * s, yy * s, zz * s, xy * s, xz * s, yz * s};
  }
};

inline SymTensor3 operator*(double s, const SymTensor3& t) { return t * s; }

inline double trace(const SymTensor3& t) { return t.xx + t.yy + t.zz; }

/// Full double contraction a:b = a_ij b_ij; off-diagonal entries count twice.
inline double contract(const SymTensor3& a, const SymTensor3& b) {
  return a.xx * b.xx + a.yy * b.yy + a.zz * b.zz +
         2.0 * (a.xy * b.xy + a.xz * b.xz + a.yz * b.yz);
}

struct TensorSplit {
  SymTensor3 deviatoric;
  SymTensor3 spherical;
};

/// Deviatoric/spherical decomposition: spherical = (tr t / 3) I,
/// deviatoric = t - spherical. Recomposes exactly.
inline TensorSplit split(const SymTensor3& t) {
  const double m = trace(t) / 3.0;
  SymTensor3 sph{m, m, m, 0.0, 0.0, 0.0};
  return {t - sph, sph};
}

/// Isotropic linear elastic moduli. Lame parameters are derived from (E, nu)
/// on construction and kept consistent.
struct ElasticModuli {
  double E = 0.0;       // Young's modulus [Pa]
  double nu = 0.0;      // Poisson's ratio [-]
  double lambda = 0.0;  // first Lame parameter [Pa]
  double mu = 0.0;      // shear modulus [Pa]

  ElasticModuli() = default;
  ElasticModuli(double young, double poisson) : E(young), nu(poisson) {
    if (!(E > 0.0))
      throw std::invalid_argument("ElasticModuli: E must be positive");
    if (!(nu > -1.0 && nu < 0.5))
      throw std::invalid_argument("ElasticModuli: nu must lie in (-1, 0.5)");
    lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    mu = E / (2.0 * (1.0 + nu));
  }
};

/// Undegraded isotropic stress A0 eps = 2 mu eps + lambda tr(eps) I.
inline SymTensor3 isotropic_stress(const SymTensor3& eps, const ElasticModuli& m) {
  const double lt = m.lambda * trace(eps);
  SymTensor3 s = eps * (2.0 * m.mu);
  s.xx += lt;
  s.yy += lt;
  s.zz += lt;
  return s;
}

/// Embed a 2D plane-strain state (eps_zz = eps_xz = eps_yz = 0) in 3D.
/// The out-of-plane stress sigma_zz = lambda (eps_xx + eps_yy) is then
/// recovered by isotropic_stress on the lifted tensor.
inline SymTensor3 lift_plane_strain(double exx, double eyy, double exy) {
  return {exx, eyy, 0.0, exy, 0.0, 0.0};
}

/// Coefficient lambda / (lambda + 2 mu) of the lateral closure pressure;
/// equals nu / (1 - nu).
inline double lateral_pressure_coefficient(const ElasticModuli& m) {
  return m.lambda / (m.lambda + 2.0 * m.mu);
}

}  // namespace cavedamage
