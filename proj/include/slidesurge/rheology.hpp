#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace slidesurge {

/// Viscoplastic material law: rigid below the yield stress tau_y, power-law
/// shear-thinning (index n) above it.  mu is the consistency in Pa·s^n.
struct HerschelBulkleyParams {
  double tau_y = 0.0;  // yield strength, Pa
  double mu = 0.0;     // consistency, Pa·s^n
  double n = 1.0;      // fluidity index, 0 < n <= 1 (n = 1: Bingham limit)

  void validate() const {
    if (!(tau_y > 0.0))
      throw std::invalid_argument("HerschelBulkleyParams: tau_y must be > 0, got " +
                                  std::to_string(tau_y));
    if (!(mu > 0.0))
      throw std::invalid_argument("HerschelBulkleyParams: mu must be > 0, got " +
                                  std::to_string(mu));
    if (!(n > 0.0) || n > 1.0)
      throw std::invalid_argument("HerschelBulkleyParams: n must lie in (0, 1], got " +
                                  std::to_string(n));
  }
};

/// Densities, drag coefficients and gravity for the submerged slide.
struct MaterialParams {
  double rho_d = 0.0;  // slide bulk density, kg/m^3
  double rho_w = 0.0;  // ambient water density, kg/m^3
  double c_m = 0.0;    // added-mass coefficient (>= 0)
  double c_f = 0.0;    // friction drag coefficient (>= 0)
  double c_p = 0.0;    // pressure drag coefficient (>= 0)
  double g = 9.81;     // gravitational acceleration, m/s^2

  void validate() const {
    if (!(rho_w > 0.0) || !(rho_d > rho_w))
      throw std::invalid_argument(
          "MaterialParams: require rho_d > rho_w > 0 (non-sinking slide rejected), got rho_d=" +
          std::to_string(rho_d) + ", rho_w=" + std::to_string(rho_w));
    if (c_m < 0.0 || c_f < 0.0 || c_p < 0.0)
      throw std::invalid_argument("MaterialParams: c_m, c_f, c_p must be >= 0");
    if (!(g > 0.0)) throw std::invalid_argument("MaterialParams: g must be > 0");
  }

  /// Inertia scale from ambient water accelerated along with the slide.
  double added_mass_factor() const { return 1.0 + c_m * rho_w / rho_d; }
};

namespace detail {
inline void check_index(double n, const char* fn) {
  if (!(n > 0.0) || n > 1.0)
    throw std::domain_error(std::string(fn) + ": index n must lie in (0, 1], got " +
                            std::to_string(n));
}
}  // namespace detail

/// Reference strain rate (tau_y / mu)^(1/n), 1/s.
inline double reference_strain_rate(const HerschelBulkleyParams& p) {
  p.validate();
  return std::pow(p.tau_y / p.mu, 1.0 / p.n);
}

/// Shear-layer shape factor beta = (1 + 1/n)^n.
inline double shape_factor_beta(double n) {
  detail::check_index(n, "shape_factor_beta");
  return std::pow(1.0 + 1.0 / n, n);
}

/// Velocity form factor of the shear layer: the ratio mean(u^2)/mean(u)^2 of
/// the profile u(xi) = 1 - (1 - xi)^p with p = (n+1)/n.  The moments are
/// mean(u) = p/(p+1) and mean(u^2) = 2p^2/((p+1)(2p+1)), so the ratio
/// simplifies to 2(p+1)/(2p+1) — used in this form so alpha(1) is exactly
/// the Bingham value 1.2.
inline double form_factor_alpha(double n) {
  detail::check_index(n, "form_factor_alpha");
  const double p = (n + 1.0) / n;
  return 2.0 * (p + 1.0) / (2.0 * p + 1.0);
}

/// Ratio of the shear layer's mean velocity to the plug velocity:
/// mean(u) = p/(p+1) with p = (n+1)/n, i.e. (n+1)/(2n+1).
inline double shear_velocity_ratio(double n) {
  detail::check_index(n, "shear_velocity_ratio");
  return (n + 1.0) / (2.0 * n + 1.0);
}

/// Closure factors derived from the fluidity index (and gamma_r from the
/// full parameter set).
struct DerivedFactors {
  double gamma_r = 0.0;  // reference strain rate, 1/s
  double beta = 0.0;     // shape factor
  double alpha = 0.0;    // velocity form factor
  double r_vel = 0.0;    // shear-layer mean / plug velocity ratio
};

inline DerivedFactors derived_factors(const HerschelBulkleyParams& p) {
  DerivedFactors d;
  d.gamma_r = reference_strain_rate(p);
  d.beta = shape_factor_beta(p.n);
  d.alpha = form_factor_alpha(p.n);
  d.r_vel = shear_velocity_ratio(p.n);
  return d;
}

/// Independent Bingham (n = 1) closure path with its constants written out
/// literally rather than evaluated through the power-law formulas.
inline DerivedFactors bingham_factors(double tau_y, double mu) {
  if (!(tau_y > 0.0) || !(mu > 0.0))
    throw std::invalid_argument("bingham_factors: tau_y and mu must be > 0");
  DerivedFactors d;
  d.gamma_r = tau_y / mu;
  d.beta = 2.0;
  d.alpha = 1.2;
  d.r_vel = 2.0 / 3.0;
  return d;
}

/// Strain rate under simple shear: 0 at or below yield, otherwise
/// sign(tau) · gamma_r · (|tau|/tau_y - 1)^(1/n).
inline double hb_strain_rate(double tau, const HerschelBulkleyParams& p) {
  p.validate();
  const double mag = std::abs(tau);
  if (mag <= p.tau_y) return 0.0;
  const double s = tau < 0.0 ? -1.0 : 1.0;
  return s * reference_strain_rate(p) * std::pow(mag / p.tau_y - 1.0, 1.0 / p.n);
}

/// Reduced gravity g' = g (1 - rho_w/rho_d) of the submerged material.
inline double reduced_gravity(const MaterialParams& m) {
  m.validate();
  return m.g * (1.0 - m.rho_w / m.rho_d);
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }

/// Skin-friction drag of the ambient water: 1/2 c_f rho_w u ||u||, Pa.
inline Vec2 friction_drag(const Vec2& u, const MaterialParams& m) {
  const double mag = norm(u);
  return {0.5 * m.c_f * m.rho_w * u.x * mag, 0.5 * m.c_f * m.rho_w * u.y * mag};
}

/// Form drag against a thickening front: 1/2 c_p rho_w max(0, -u·gradH) u, Pa.
inline Vec2 pressure_drag(const Vec2& u, const Vec2& grad_h, const MaterialParams& m) {
  const double head = std::max(0.0, -dot(u, grad_h));
  const double k = 0.5 * m.c_p * m.rho_w * head;
  return {k * u.x, k * u.y};
}

/// Dimensionless basal friction factor f_s = beta (u/(gamma_r h_s))^n.
/// The net bed shear stress is tau_y (1 + f_s).
inline double basal_friction_factor(double u_p_mag, double h_s, const HerschelBulkleyParams& p) {
  if (u_p_mag == 0.0) return 0.0;
  if (!(h_s > 0.0))
    throw std::domain_error("basal_friction_factor: shear layer thickness must be > 0 when the "
                            "plug is moving, got h_s = " + std::to_string(h_s));
  p.validate();
  return shape_factor_beta(p.n) * std::pow(u_p_mag / (reference_strain_rate(p) * h_s), p.n);
}

}  // namespace slidesurge
