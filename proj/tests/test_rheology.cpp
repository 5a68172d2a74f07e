#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "slidesurge/rheology.hpp"
#include "slidesurge/validation.hpp"

using namespace slidesurge;

namespace {

HerschelBulkleyParams hb(double tau_y = 65.0, double mu = 10.0, double n = 0.5) {
  return {tau_y, mu, n};
}

MaterialParams table_material() {
  MaterialParams m;
  m.rho_d = 1500.0;
  m.rho_w = 1000.0;
  m.c_m = 1.0;
  m.c_f = 0.01;
  m.c_p = 1.0;
  return m;
}

}  // namespace

TEST_CASE("parameter validation") {
  REQUIRE_NOTHROW(hb().validate());
  REQUIRE_THROWS_AS(hb(-5.0).validate(), std::invalid_argument);
  REQUIRE_THROWS_AS(hb(65.0, 0.0).validate(), std::invalid_argument);
  REQUIRE_THROWS_AS(hb(65.0, 10.0, 1.5).validate(), std::invalid_argument);
  REQUIRE_THROWS_AS(hb(65.0, 10.0, 0.0).validate(), std::invalid_argument);
  REQUIRE_NOTHROW(hb(65.0, 10.0, 1.0).validate());

  MaterialParams m = table_material();
  REQUIRE_NOTHROW(m.validate());
  m.rho_d = 900.0;  // lighter than water: not a subaqueous slide material
  REQUIRE_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("reference strain rate") {
  REQUIRE(reference_strain_rate(hb()) == Catch::Approx(42.25).epsilon(1e-14));  // (65/10)^2
  REQUIRE(reference_strain_rate(hb(65.0, 10.0, 1.0)) == 6.5);
}

TEST_CASE("strain rate law: rigid below yield, power-law above") {
  const HerschelBulkleyParams p = hb();
  const double gr = reference_strain_rate(p);
  REQUIRE(hb_strain_rate(0.0, p) == 0.0);
  REQUIRE(hb_strain_rate(64.999, p) == 0.0);
  REQUIRE(hb_strain_rate(65.0, p) == 0.0);     // boundary: still unyielded
  REQUIRE(hb_strain_rate(-65.0, p) == 0.0);
  const double above = hb_strain_rate(130.0, p);
  REQUIRE(above == Catch::Approx(gr * std::pow(1.0, 1.0 / p.n)));  // (130/65 - 1) = 1
  REQUIRE(hb_strain_rate(-130.0, p) == -above);

  // Bingham limit is linear in the excess stress
  const HerschelBulkleyParams b = hb(65.0, 10.0, 1.0);
  REQUIRE(hb_strain_rate(2.0 * 65.0, b) == Catch::Approx(reference_strain_rate(b)));
  REQUIRE(hb_strain_rate(3.0 * 65.0, b) ==
          Catch::Approx(2.0 * reference_strain_rate(b)).epsilon(1e-14));
}

TEST_CASE("shape factor beta") {
  REQUIRE(shape_factor_beta(1.0) == 2.0);
  REQUIRE(shape_factor_beta(0.5) == std::pow(3.0, 0.5));
  REQUIRE(shape_factor_beta(0.5) == Catch::Approx(std::sqrt(3.0)).margin(1e-15));
  REQUIRE_THROWS_AS(shape_factor_beta(0.0), std::domain_error);
  REQUIRE_THROWS_AS(shape_factor_beta(1.2), std::domain_error);
}

TEST_CASE("form factor alpha matches closed form and quadrature") {
  REQUIRE(form_factor_alpha(1.0) == 1.2);
  REQUIRE(form_factor_alpha(0.5) == 8.0 / 7.0);
  REQUIRE(std::abs(form_factor_alpha(1.0) - form_factor_alpha_quadrature(1.0)) < 1e-10);
  REQUIRE(std::abs(form_factor_alpha(0.5) - form_factor_alpha_quadrature(0.5)) < 1e-10);
  REQUIRE(std::abs(form_factor_alpha(0.75) - form_factor_alpha_quadrature(0.75)) < 1e-10);
}

TEST_CASE("shear velocity ratio") {
  REQUIRE(shear_velocity_ratio(1.0) == 2.0 / 3.0);
  REQUIRE(shear_velocity_ratio(0.5) == Catch::Approx(0.75));
}

TEST_CASE("reduced gravity and added mass") {
  const MaterialParams m = table_material();
  REQUIRE(reduced_gravity(m) == Catch::Approx(9.81 / 3.0).epsilon(1e-14));
  REQUIRE(m.added_mass_factor() == Catch::Approx(1.0 + 1000.0 / 1500.0).epsilon(1e-15));
}

TEST_CASE("water drag forces") {
  const MaterialParams m = table_material();
  SECTION("both vanish at rest") {
    const Vec2 zero = friction_drag({0.0, 0.0}, m);
    REQUIRE(zero.x == 0.0);
    REQUIRE(zero.y == 0.0);
    const Vec2 zp = pressure_drag({0.0, 0.0}, {0.1, 0.2}, m);
    REQUIRE(zp.x == 0.0);
    REQUIRE(zp.y == 0.0);
  }
  SECTION("friction drag opposes motion, quadratic in speed") {
    const Vec2 d = friction_drag({3.0, -4.0}, m);  // |u| = 5
    REQUIRE(d.x == Catch::Approx(0.5 * 0.01 * 1000.0 * 3.0 * 5.0));
    REQUIRE(d.y == Catch::Approx(0.5 * 0.01 * 1000.0 * -4.0 * 5.0));
  }
  SECTION("pressure drag acts only when pushing upslope") {
    const Vec2 grad{0.1, 0.0};
    const Vec2 downhill = pressure_drag({-2.0, 0.0}, grad, m);  // -u.grad = +0.2 > 0
    REQUIRE(downhill.x == Catch::Approx(0.5 * 1.0 * 1000.0 * 0.2 * -2.0));
    const Vec2 uphill = pressure_drag({2.0, 0.0}, grad, m);  // -u.grad < 0: no drag
    REQUIRE(uphill.x == 0.0);
    REQUIRE(uphill.y == 0.0);
  }
}

TEST_CASE("basal friction factor") {
  const HerschelBulkleyParams p = hb();
  const DerivedFactors f = derived_factors(p);
  REQUIRE(basal_friction_factor(0.0, 1.0, p) == 0.0);
  REQUIRE_THROWS_AS(basal_friction_factor(1.0, 0.0, p), std::domain_error);
  // f_s = beta * (|u| / (gamma_r h_s))^n
  const double expect = f.beta * std::pow(2.0 / (f.gamma_r * 0.5), p.n);
  REQUIRE(basal_friction_factor(2.0, 0.5, p) == Catch::Approx(expect).epsilon(1e-14));
}

TEST_CASE("Bingham shortcut factors equal the general path at n = 1") {
  const HerschelBulkleyParams p = hb(65.0, 10.0, 1.0);
  const DerivedFactors general = derived_factors(p);
  const DerivedFactors direct = bingham_factors(p.tau_y, p.mu);
  REQUIRE(general.gamma_r == direct.gamma_r);
  REQUIRE(general.beta == direct.beta);
  REQUIRE(general.alpha == direct.alpha);
  REQUIRE(general.r_vel == direct.r_vel);
}
