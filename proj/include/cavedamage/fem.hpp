#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cavedamage/damage_law.hpp"
#include "cavedamage/mesh.hpp"
#include "cavedamage/tensor.hpp"

namespace cavedamage {

/// Self-weight and lateral confinement parameters. hmax is the elevation at
/// which the lateral depth pressure vanishes; NaN means "top of the mesh".
struct BodyLoads {
  double rho = 2700.0;   // density [kg/m^3]
  double grav = 9.81;    // gravitational acceleration [m/s^2]
  double kbar = 1e9;     // lateral spring stiffness [Pa/m]
  double hmax = std::numeric_limits<double>::quiet_NaN();  // [m]
};

/// Which boundary program drives the elastic solve.
///  Caving:      traction-free cavity surface and top, u.n = 0 at the bottom,
///               lateral walls carry the depth pressure plus a normal spring.
///  Compression: bottom clamped, top vertical displacement prescribed,
///               lateral walls traction-free.
enum class BoundaryProgram { Caving, Compression };

struct LoadCase {
  BoundaryProgram program = BoundaryProgram::Caving;
  BodyLoads body;
  double top_displacement = 0.0;  // prescribed u_y on UP (Compression only)
};

/// Sparse symmetric system with Dirichlet constraints already eliminated:
/// constrained rows/columns are reduced to a scaled identity so the solve
/// returns the prescribed values exactly.
struct LinearSystem {
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  int ndof() const { return static_cast<int>(b.size()); }
};

namespace detail {

/// P1 shape-function gradients on one triangle: grad(phi_i) = (bx[i], by[i]).
struct P1Geometry {
  double area = 0.0;
  std::array<double, 3> bx{};
  std::array<double, 3> by{};
};

inline P1Geometry p1_geometry(const Mesh& m, int t) {
  const auto& v = m.tris[static_cast<std::size_t>(t)];
  const Vec2& p0 = m.nodes[static_cast<std::size_t>(v[0])];
  const Vec2& p1 = m.nodes[static_cast<std::size_t>(v[1])];
  const Vec2& p2 = m.nodes[static_cast<std::size_t>(v[2])];
  const double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
  P1Geometry g;
  g.area = 0.5 * det;
  g.bx = {(p1.y - p2.y) / det, (p2.y - p0.y) / det, (p0.y - p1.y) / det};
  g.by = {(p2.x - p1.x) / det, (p0.x - p2.x) / det, (p1.x - p0.x) / det};
  return g;
}

struct Constraints {
  std::vector<char> fixed;
  std::vector<double> value;
  explicit Constraints(int n)
      : fixed(static_cast<std::size_t>(n), 0), value(static_cast<std::size_t>(n), 0.0) {}
  void set(int dof, double g) {
    fixed[static_cast<std::size_t>(dof)] = 1;
    value[static_cast<std::size_t>(dof)] = g;
  }
};

/// Eliminate Dirichlet dofs from a triplet list: free-free entries stay,
/// free-fixed columns move to the right-hand side, fixed rows become a
/// diagonal scaled like the original matrix.
inline LinearSystem reduce(int n, const std::vector<Eigen::Triplet<double>>& trips,
                           Eigen::VectorXd b, const Constraints& c) {
  std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
  for (const auto& tr : trips)
    if (tr.row() == tr.col()) diag[static_cast<std::size_t>(tr.row())] += tr.value();
  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    if (!c.fixed[static_cast<std::size_t>(i)])
      scale = std::max(scale, std::abs(diag[static_cast<std::size_t>(i)]));
  if (scale == 0.0) scale = 1.0;

  std::vector<Eigen::Triplet<double>> kept;
  kept.reserve(trips.size() + static_cast<std::size_t>(n));
  for (const auto& tr : trips) {
    const bool fr = c.fixed[static_cast<std::size_t>(tr.row())] != 0;
    const bool fc = c.fixed[static_cast<std::size_t>(tr.col())] != 0;
    if (!fr && !fc) {
      kept.push_back(tr);
    } else if (!fr && fc) {
      b[tr.row()] -= tr.value() * c.value[static_cast<std::size_t>(tr.col())];
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!c.fixed[static_cast<std::size_t>(i)]) continue;
    kept.emplace_back(i, i, scale);
    b[i] = scale * c.value[static_cast<std::size_t>(i)];
  }
  LinearSystem sys;
  sys.A.resize(n, n);
  sys.A.setFromTriplets(kept.begin(), kept.end());
  sys.A.makeCompressed();
  sys.b = std::move(b);
  return sys;
}

}  // namespace detail

/// Lumped nodal volumes (per unit thickness): a third of each incident
/// triangle's area.
inline Field lumped_volumes(const Mesh& m) {
  Field vol(static_cast<std::size_t>(m.num_nodes()), 0.0);
  for (int t = 0; t < m.num_tris(); ++t) {
    const double a3 = m.area(t) / 3.0;
    for (int k = 0; k < 3; ++k)
      vol[static_cast<std::size_t>(m.tris[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)])] += a3;
  }
  return vol;
}

/// Constant plane-strain tensor of one element from the interleaved nodal
/// displacement field.
inline SymTensor3 element_strain(const Mesh& m, const Field& u, int t) {
  const auto g = detail::p1_geometry(m, t);
  const auto& v = m.tris[static_cast<std::size_t>(t)];
  double exx = 0.0, eyy = 0.0, exy = 0.0;
  for (int k = 0; k < 3; ++k) {
    const std::size_t n = static_cast<std::size_t>(v[static_cast<std::size_t>(k)]);
    const double ux = u[2 * n];
    const double uy = u[2 * n + 1];
    exx += ux * g.bx[static_cast<std::size_t>(k)];
    eyy += uy * g.by[static_cast<std::size_t>(k)];
    exy += 0.5 * (ux * g.by[static_cast<std::size_t>(k)] + uy * g.bx[static_cast<std::size_t>(k)]);
  }
  return lift_plane_strain(exx, eyy, exy);
}

/// Shear-compression energy weight of one element: with stress split
/// s = A0 eps, this is [s^d:s^d - (2/3) kappa s^s:s^s] / (2E), so the elastic
/// part of the damage functional is a_eff(alpha)^2 times this per unit volume.
inline double element_drive(const SymTensor3& eps, const MaterialParams& p) {
  const SymTensor3 s = isotropic_stress(eps, p.moduli);
  const TensorSplit sp = split(s);
  const double bracket = contract(sp.deviatoric, sp.deviatoric) -
                         (2.0 / 3.0) * p.kappa * contract(sp.spherical, sp.spherical);
  return bracket / (2.0 * p.moduli.E);
}

/// Degraded linear elasticity with the selected boundary program. Stiffness
/// uses the element-mean damage; gravity is lumped nodally.
inline LinearSystem assemble_elasticity(const Mesh& m, const Field& alpha,
                                        const MaterialParams& p, const LoadCase& lc) {
  if (alpha.size() != static_cast<std::size_t>(m.num_nodes()))
    throw std::invalid_argument("assemble_elasticity: damage field length mismatch");
  const int n = 2 * m.num_nodes();
  const double lam = p.moduli.lambda;
  const double mu = p.moduli.mu;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(m.num_tris()) * 36 + 64);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);

  for (int t = 0; t < m.num_tris(); ++t) {
    const auto& v = m.tris[static_cast<std::size_t>(t)];
    const auto g = detail::p1_geometry(m, t);
    double abar = 0.0;
    for (int k = 0; k < 3; ++k)
      abar += alpha[static_cast<std::size_t>(v[static_cast<std::size_t>(k)])] / 3.0;
    const double aeff = p.degradation_eff(abar).value;

    // K_ij (2x2 blocks) for isotropic plane strain, B^T D B, integrated exactly
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double bxi = g.bx[static_cast<std::size_t>(i)], byi = g.by[static_cast<std::size_t>(i)];
        const double bxj = g.bx[static_cast<std::size_t>(j)], byj = g.by[static_cast<std::size_t>(j)];
        const double w = aeff * g.area;
        const double kxx = w * ((lam + 2.0 * mu) * bxi * bxj + mu * byi * byj);
        const double kxy = w * (lam * bxi * byj + mu * byi * bxj);
        const double kyx = w * (lam * byi * bxj + mu * bxi * byj);
        const double kyy = w * ((lam + 2.0 * mu) * byi * byj + mu * bxi * bxj);
        const int ri = 2 * v[static_cast<std::size_t>(i)];
        const int rj = 2 * v[static_cast<std::size_t>(j)];
        trips.emplace_back(ri, rj, kxx);
        trips.emplace_back(ri, rj + 1, kxy);
        trips.emplace_back(ri + 1, rj, kyx);
        trips.emplace_back(ri + 1, rj + 1, kyy);
      }
    }
    const double fy = -lc.body.rho * lc.body.grav * g.area / 3.0;
    for (int k = 0; k < 3; ++k)
      b[2 * v[static_cast<std::size_t>(k)] + 1] += fy;
  }

  detail::Constraints c(n);
  if (lc.program == BoundaryProgram::Caving) {
    const double coef = lateral_pressure_coefficient(p.moduli);
    double hmax = lc.body.hmax;
    if (std::isnan(hmax))
      hmax = m.bounds.y1;
    else if (std::abs(hmax - m.bounds.y1) > 1e-9 * (std::abs(hmax) + m.bounds.diameter()))
      throw std::invalid_argument("assemble_elasticity: hmax must match the mesh top");
    for (const auto& f : m.boundary) {
      if (f.tag == BoundaryTag::Down) {
        // u.n = 0 on a horizontal wall
        c.set(2 * f.a + 1, 0.0);
        c.set(2 * f.b + 1, 0.0);
      } else if (f.tag == BoundaryTag::Lat) {
        const Vec2& pa = m.nodes[static_cast<std::size_t>(f.a)];
        const Vec2& pb = m.nodes[static_cast<std::size_t>(f.b)];
        const Vec2 nrm = outward_normal(m, f);
        const double len = std::hypot(pb.x - pa.x, pb.y - pa.y);
        // spring: kbar (u.n)(v.n) with n = (+-1, 0), consistent edge mass
        const double kb = lc.body.kbar * len / 6.0;
        trips.emplace_back(2 * f.a, 2 * f.a, 2.0 * kb);
        trips.emplace_back(2 * f.b, 2 * f.b, 2.0 * kb);
        trips.emplace_back(2 * f.a, 2 * f.b, kb);
        trips.emplace_back(2 * f.b, 2 * f.a, kb);
        // depth pressure: traction coef * rho g (y - Hmax) n
        const double ga = coef * lc.body.rho * lc.body.grav * (pa.y - hmax);
        const double gb = coef * lc.body.rho * lc.body.grav * (pb.y - hmax);
        b[2 * f.a] += nrm.x * len / 6.0 * (2.0 * ga + gb);
        b[2 * f.b] += nrm.x * len / 6.0 * (ga + 2.0 * gb);
      }
      // Up and Cav are traction-free
    }
  } else {
    for (const auto& f : m.boundary) {
      if (f.tag == BoundaryTag::Down) {
        c.set(2 * f.a, 0.0);
        c.set(2 * f.a + 1, 0.0);
        c.set(2 * f.b, 0.0);
        c.set(2 * f.b + 1, 0.0);
      } else if (f.tag == BoundaryTag::Up) {
        c.set(2 * f.a + 1, lc.top_displacement);
        c.set(2 * f.b + 1, lc.top_displacement);
      }
    }
  }
  return detail::reduce(n, trips, std::move(b), c);
}

/// Everything the damage functional needs at fixed displacement: element
/// geometry, the per-element energy weight, and lumped nodal volumes.
struct DamageWorkspace {
  const Mesh* mesh = nullptr;
  MaterialParams params;
  std::vector<detail::P1Geometry> geom;
  std::vector<double> drive;  // element_drive per element [1/Pa * Pa^2 = Pa]
  Field volumes;              // lumped nodal volumes
};

inline DamageWorkspace make_damage_workspace(const Mesh& m, const Field& u,
                                             const MaterialParams& p) {
  if (u.size() != static_cast<std::size_t>(2 * m.num_nodes()))
    throw std::invalid_argument("make_damage_workspace: displacement length mismatch");
  DamageWorkspace w;
  w.mesh = &m;
  w.params = p;
  w.geom.reserve(static_cast<std::size_t>(m.num_tris()));
  w.drive.reserve(static_cast<std::size_t>(m.num_tris()));
  for (int t = 0; t < m.num_tris(); ++t) {
    w.geom.push_back(detail::p1_geometry(m, t));
    w.drive.push_back(element_drive(element_strain(m, u, t), p));
  }
  w.volumes = lumped_volumes(m);
  return w;
}

/// Damage part of the state functional at fixed displacement:
///   sum_e [ nodal-lumped a(alpha)^2 drive_e + nodal-lumped w(alpha)
///           + w1 ell^2 |grad alpha|^2 area_e ].
/// The residual stiffness eta_r belongs to the elastic solve only and is
/// excluded here and from the derivatives below.
inline double damage_objective(const DamageWorkspace& w, const Field& alpha) {
  const Mesh& m = *w.mesh;
  if (alpha.size() != static_cast<std::size_t>(m.num_nodes()))
    throw std::invalid_argument("damage_objective: field length mismatch");
  const MaterialParams& p = w.params;
  double total = 0.0;
  for (int t = 0; t < m.num_tris(); ++t) {
    const auto& v = m.tris[static_cast<std::size_t>(t)];
    const auto& g = w.geom[static_cast<std::size_t>(t)];
    double gx = 0.0, gy = 0.0, local = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double ak = alpha[static_cast<std::size_t>(v[static_cast<std::size_t>(k)])];
      const double a = degradation(p.law, ak).value;
      local += a * a * w.drive[static_cast<std::size_t>(t)] +
               dissipation(p.law, ak).value;
      gx += ak * g.bx[static_cast<std::size_t>(k)];
      gy += ak * g.by[static_cast<std::size_t>(k)];
    }
    total += g.area * (local / 3.0 + p.w1 * p.ell * p.ell * (gx * gx + gy * gy));
  }
  return total;
}

inline Field damage_gradient(const DamageWorkspace& w, const Field& alpha) {
  const Mesh& m = *w.mesh;
  if (alpha.size() != static_cast<std::size_t>(m.num_nodes()))
    throw std::invalid_argument("damage_gradient: field length mismatch");
  const MaterialParams& p = w.params;
  Field grad(alpha.size(), 0.0);
  for (int t = 0; t < m.num_tris(); ++t) {
    const auto& v = m.tris[static_cast<std::size_t>(t)];
    const auto& g = w.geom[static_cast<std::size_t>(t)];
    double gx = 0.0, gy = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double ak = alpha[static_cast<std::size_t>(v[static_cast<std::size_t>(k)])];
      gx += ak * g.bx[static_cast<std::size_t>(k)];
      gy += ak * g.by[static_cast<std::size_t>(k)];
    }
    const double reg = 2.0 * p.w1 * p.ell * p.ell * g.area;
    for (int k = 0; k < 3; ++k) {
      const std::size_t i = static_cast<std::size_t>(v[static_cast<std::size_t>(k)]);
      const LawEval a = degradation(p.law, alpha[i]);
      const LawEval we = dissipation(p.law, alpha[i]);
      grad[i] += g.area / 3.0 *
                     (2.0 * a.value * a.d1 * w.drive[static_cast<std::size_t>(t)] + we.d1) +
                 reg * (gx * g.bx[static_cast<std::size_t>(k)] + gy * g.by[static_cast<std::size_t>(k)]);
    }
  }
  return grad;
}

inline Eigen::SparseMatrix<double> damage_hessian(const DamageWorkspace& w,
                                                  const Field& alpha) {
  const Mesh& m = *w.mesh;
  if (alpha.size() != static_cast<std::size_t>(m.num_nodes()))
    throw std::invalid_argument("damage_hessian: field length mismatch");
  const MaterialParams& p = w.params;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(m.num_tris()) * 12);
  for (int t = 0; t < m.num_tris(); ++t) {
    const auto& v = m.tris[static_cast<std::size_t>(t)];
    const auto& g = w.geom[static_cast<std::size_t>(t)];
    const double reg = 2.0 * p.w1 * p.ell * p.ell * g.area;
    for (int i = 0; i < 3; ++i) {
      const std::size_t ni = static_cast<std::size_t>(v[static_cast<std::size_t>(i)]);
      const LawEval a = degradation(p.law, alpha[ni]);
      const LawEval we = dissipation(p.law, alpha[ni]);
      const double local = g.area / 3.0 *
                           (2.0 * (a.d1 * a.d1 + a.value * a.d2) *
                                w.drive[static_cast<std::size_t>(t)] +
                            we.d2);
      trips.emplace_back(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(i)], local);
      for (int j = 0; j < 3; ++j)
        trips.emplace_back(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)],
                           reg * (g.bx[static_cast<std::size_t>(i)] * g.bx[static_cast<std::size_t>(j)] +
                                  g.by[static_cast<std::size_t>(i)] * g.by[static_cast<std::size_t>(j)]));
    }
  }
  Eigen::SparseMatrix<double> H(m.num_nodes(), m.num_nodes());
  H.setFromTriplets(trips.begin(), trips.end());
  H.makeCompressed();
  return H;
}

/// Pointwise damage-criterion residual [N/m^3]: the functional gradient per
/// lumped nodal volume. Nonnegative residual means no drive to damage.
inline Field criterion_residual(const DamageWorkspace& w, const Field& alpha) {
  Field r = damage_gradient(w, alpha);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] /= w.volumes[i];
  return r;
}

}  // namespace cavedamage
