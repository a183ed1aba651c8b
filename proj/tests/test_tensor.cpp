#include <catch2/catch_amalgamated.hpp>

#include <cavedamage/tensor.hpp>

using namespace cavedamage;

TEST_CASE("trace and contraction count every component") {
  SymTensor3 t{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  CHECK(trace(t) == 6.0);
  // Full contraction t:t with off-diagonals twice.
  CHECK(contract(t, t) == 1.0 + 4.0 + 9.0 + 2.0 * (16.0 + 25.0 + 36.0));
  CHECK(contract(SymTensor3::identity(), t) == trace(t));
}

TEST_CASE("arithmetic operators act componentwise") {
  SymTensor3 a{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  SymTensor3 b{0.5, -1.0, 2.0, 0.0, 1.0, -2.0};
  SymTensor3 s = a + b;
  CHECK(s.xx == 1.5);
  CHECK(s.yz == 4.0);
  SymTensor3 d = a - b;
  CHECK(d.yy == 3.0);
  CHECK(d.xz == 4.0);
  SymTensor3 m = 2.0 * a;
  CHECK(m.zz == 6.0);
  CHECK(m.xy == 8.0);
}

TEST_CASE("split of a pressure state is purely spherical") {
  SymTensor3 p = 7.0 * SymTensor3::identity();
  TensorSplit sp = split(p);
  CHECK(sp.spherical.xx == 7.0);
  CHECK(sp.spherical.yy == 7.0);
  CHECK(sp.spherical.zz == 7.0);
  CHECK(contract(sp.deviatoric, sp.deviatoric) == 0.0);
}

TEST_CASE("split of a uniaxial state and recomposition") {
  SymTensor3 t{3.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  TensorSplit sp = split(t);
  CHECK(sp.spherical.xx == Catch::Approx(1.0));
  CHECK(sp.deviatoric.xx == Catch::Approx(2.0));
  CHECK(sp.deviatoric.yy == Catch::Approx(-1.0));
  CHECK(sp.deviatoric.zz == Catch::Approx(-1.0));
  CHECK(trace(sp.deviatoric) == Catch::Approx(0.0).margin(1e-15));
  SymTensor3 back = sp.deviatoric + sp.spherical;
  CHECK(back.xx == Catch::Approx(3.0));
  CHECK(back.yy == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("deviatoric and spherical parts are contraction-orthogonal") {
  SymTensor3 t{1.3, -0.7, 2.9, 0.4, -1.1, 0.8};
  TensorSplit sp = split(t);
  CHECK(contract(sp.deviatoric, sp.spherical) == Catch::Approx(0.0).margin(1e-12));
  // Pythagoras under the full contraction.
  CHECK(contract(t, t) == Catch::Approx(contract(sp.deviatoric, sp.deviatoric) +
                                        contract(sp.spherical, sp.spherical)));
}

TEST_CASE("elastic moduli derive the Lame parameters") {
  ElasticModuli m(2.9e10, 0.3);
  CHECK(m.lambda == Catch::Approx(1.6730769230769232e10).epsilon(1e-14));
  CHECK(m.mu == Catch::Approx(1.1153846153846153e10).epsilon(1e-14));
  CHECK_THROWS_AS(ElasticModuli(0.0, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(ElasticModuli(-1.0, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(ElasticModuli(1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ElasticModuli(1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(ElasticModuli(1.0, 0.7), std::invalid_argument);
}

TEST_CASE("isotropic stress of a spherical strain") {
  ElasticModuli m(2.9e10, 0.3);
  SymTensor3 s = isotropic_stress(SymTensor3::identity(), m);
  const double expect = 2.0 * m.mu + 3.0 * m.lambda;
  CHECK(s.xx == Catch::Approx(expect));
  CHECK(s.yy == Catch::Approx(expect));
  CHECK(s.zz == Catch::Approx(expect));
  CHECK(s.xy == 0.0);
}

TEST_CASE("isotropic stress of a pure shear strain") {
  ElasticModuli m(1.0e9, 0.25);
  SymTensor3 eps{0.0, 0.0, 0.0, 1e-3, 0.0, 0.0};
  SymTensor3 s = isotropic_stress(eps, m);
  CHECK(s.xy == Catch::Approx(2.0 * m.mu * 1e-3));
  CHECK(s.xx == Catch::Approx(0.0).margin(1e-30));
  CHECK(trace(s) == Catch::Approx(0.0).margin(1e-30));
}

TEST_CASE("plane-strain lift recovers the out-of-plane stress") {
  ElasticModuli m(2.9e10, 0.3);
  SymTensor3 eps = lift_plane_strain(1e-3, 0.0, 0.0);
  CHECK(eps.zz == 0.0);
  CHECK(eps.xz == 0.0);
  CHECK(eps.yz == 0.0);
  SymTensor3 s = isotropic_stress(eps, m);
  CHECK(s.zz == Catch::Approx(m.lambda * 1e-3));
  // Uniaxial plane strain: sigma_zz / sigma_xx = lambda / (lambda + 2 mu).
  CHECK(s.zz / s.xx == Catch::Approx(m.lambda / (m.lambda + 2.0 * m.mu)));
}

TEST_CASE("lateral pressure coefficient equals nu over one minus nu") {
  ElasticModuli m(2.9e10, 0.3);
  CHECK(std::abs(lateral_pressure_coefficient(m) - 3.0 / 7.0) <= 1e-12);
  ElasticModuli m2(5.0e9, 0.2);
  CHECK(lateral_pressure_coefficient(m2) == Catch::Approx(0.25).epsilon(1e-13));
}
