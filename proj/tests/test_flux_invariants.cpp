// Distributed under the MIT License.
// See LICENSE.txt for details.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cmcfol/errors.hpp"
#include "cmcfol/flux_invariants.hpp"
#include "cmcfol/metric_model.hpp"
#include "cmcfol/sphere_spectral.hpp"
#include "cmcfol/surface_geometry.hpp"
#include "oracles.hpp"

using namespace cmcfol;

TEST_CASE("flat space carries zero mass and zero flux forms") {
  const MetricModel flat = make_flat();
  CHECK(std::abs(adm_mass(flat, 50.0)) < 1e-13);
  const auto [mass_form, com_form] = flux_forms(flat, 50.0);
  CHECK(std::abs(mass_form) < 1e-13);
  CHECK(com_form.norm() < 1e-13);
}

TEST_CASE("mass integral matches the conformal-factor reduction") {
  for (const double m : {1.0, 2.0, -1.0}) {
    const MetricModel model = make_schwarzschild(m);
    for (const double r : {25.0, 100.0}) {
      const double expected = oracle::adm_flux_at(m, r);
      CHECK(std::abs(adm_mass(model, r) - expected) < 1e-12 * std::abs(expected));
    }
  }
}

TEST_CASE("coordinate and geometric mass forms agree pointwise") {
  const MetricModel model = make_schwarzschild(1.5);
  for (const double r : {30.0, 80.0}) {
    const auto [mass_form, com_form] = flux_forms(model, r);
    CHECK(std::abs(mass_form - adm_mass(model, r)) < 1e-13);
    CHECK(com_form.norm() < 1e-12);
  }
}

TEST_CASE("mass ladder extrapolates to the conformal mass") {
  for (const double m : {1.0, 2.0, -1.0}) {
    const MetricModel model = make_schwarzschild(m);
    CHECK(std::abs(adm_mass_limit(model) - m) < 1e-6 * std::abs(m));
  }
}

TEST_CASE("full flux report on a centered slice") {
  const MetricModel model = make_schwarzschild(1.0);
  const FluxReport report = flux_report(model);
  CHECK(report.mass_converged);
  CHECK(std::abs(report.mass - 1.0) < 1e-6);
  CHECK(report.mass_order > 0.5);
  CHECK(report.rt_conformant);
  CHECK(report.com_defined);
  CHECK(report.com.norm() < 1e-8);
  REQUIRE(report.sequence.size() == default_flux_radii().size());
  for (const FluxSample& sample : report.sequence) {
    // Centered slices have odd-parity-free flux integrands.
    CHECK(sample.com_flux_form.norm() < 1e-10);
  }
}

TEST_CASE("pure-trace tail carries mass c/2 at every radius") {
  const MetricModel model = make_trace_tail(2.0);
  for (const double r : {20.0, 50.0, 150.0}) {
    CHECK(std::abs(adm_mass(model, r) - 1.0) < 1e-12);
  }
  CHECK(std::abs(adm_mass_limit(model) - 1.0) < 1e-11);
}

TEST_CASE("curvature-neutral tails leave the mass integrand unchanged") {
  const MetricModel radial = make_perturbed_radial_tail(1.0, 0.6, 0.8);
  const MetricModel hessian = make_perturbed_hessian_even(1.0, 0.6, 0.8);
  for (const double r : {25.0, 60.0}) {
    const double expected = oracle::adm_flux_at(1.0, r);
    CHECK(std::abs(adm_mass(radial, r) - expected) < 1e-11);
    CHECK(std::abs(adm_mass(hessian, r) - expected) < 1e-11);
  }
}

TEST_CASE("slow declared decay does not poison the mass extrapolation") {
  // The tail terms integrate to zero exactly, so the ladder decays at the
  // Schwarzschild rate rather than the worst-case decay-class rate. The
  // extrapolation has to notice and use the fitted order.
  const MetricModel model = make_perturbed_radial_tail(1.0, 0.6, 0.8);
  const FluxReport report = flux_report(model);
  CHECK(report.mass_converged);
  CHECK(std::abs(report.mass - 1.0) < 1e-4);
  CHECK(report.mass_order > 0.7);
  // The extrapolation must beat the last raw rung by a wide margin.
  CHECK(std::abs(report.mass - 1.0) < 0.1 * std::abs(report.sequence.back().mass_estimate - 1.0));
}

TEST_CASE("translated slice reproduces the shifted-chart reductions") {
  const double m = 2.0;
  const Vec3 c{3.0, -1.0, 2.0};
  const MetricModel model = make_translated_schwarzschild(m, c);
  const double d = c.norm();
  // The shipped center divides by the extrapolated mass; undo that divisor
  // to compare the integral itself at full precision.
  const double mass_divisor = adm_mass_limit(model);
  CHECK(std::abs(mass_divisor - m) < 1e-6 * m);
  for (const double r : {25.0, 60.0}) {
    const double mass_expected = oracle::translated_mass_at(m, d, r);
    CHECK(std::abs(adm_mass(model, r) - mass_expected) < 1e-9 * std::abs(mass_expected));
    const Vec3 com_expected = (oracle::translated_com_at(m, d, r) / d) * c;
    const Vec3 com_integral = hamiltonian_com(model, r) * (mass_divisor / m);
    CHECK((com_integral - com_expected).norm() < 1e-10 * (1.0 + com_expected.norm()));
    CHECK((hamiltonian_com(model, r) - com_expected).norm() < 1e-6 * (1.0 + com_expected.norm()));
  }
}

TEST_CASE("center-of-mass ladder recovers the translation vector") {
  const Vec3 c{1.0, -0.5, 0.25};
  const MetricModel model = make_translated_schwarzschild(1.0, c);
  const FluxReport report = flux_report(model);
  CHECK(report.mass_converged);
  CHECK(std::abs(report.mass - 1.0) < 1e-5);
  CHECK(report.com_defined);
  CHECK(report.com_converged);
  CHECK((report.com - c).norm() < 1e-3);
  CHECK(report.com_flux_order > 0.5);
}

TEST_CASE("odd tails within the decay class keep the center defined") {
  const MetricModel model = make_parity_model(1.0, 0.8, 0.5, 0.8, 0.5);
  const FluxReport report = flux_report(model);
  CHECK(report.rt_conformant);
  CHECK(std::abs(report.mass - 1.0) < 1e-3);
  CHECK(report.com_defined);
  CHECK(report.com_converged);
  CHECK(report.com.norm() < 1e-6);
}

TEST_CASE("slow odd tails outside the decay class break convergence") {
  const MetricModel model = make_non_rt_model(1.0, 0.6, 0.5);
  const FluxReport report = flux_report(model);
  CHECK_FALSE(report.rt_conformant);
  CHECK(report.mass_converged);
  CHECK(std::abs(report.mass - 1.0) < 1e-4);
  CHECK(report.com_defined);
  CHECK_FALSE(report.com_converged);
}

TEST_CASE("flux preconditions are enforced") {
  const MetricModel model = make_schwarzschild(1.0);
  CHECK_THROWS_AS(adm_mass(model, 2.0), DomainError);
  CHECK_THROWS_AS(flux_report(model, {100.0, 50.0}), ShapeError);
  CHECK_THROWS_AS(hamiltonian_com(make_flat(), 50.0), MassZeroError);
  const FluxReport flat_report = flux_report(make_flat());
  CHECK_FALSE(flat_report.com_defined);
}

TEST_CASE("sphere integration-by-parts identity holds spectrally") {
  const Vec3 a{1.0, 0.0, 0.0};
  CHECK(std::abs(ibp_residual_sphere(make_flat(), Vec3{0.3, 0.0, 0.0}, 40.0, a)) < 1e-13);

  const MetricModel schw = make_schwarzschild(1.0);
  const double lambda = 50.0;
  CHECK(std::abs(ibp_residual_sphere(schw, Vec3{0.3, 0.0, 0.0}, lambda, a)) < 1e-9 * lambda);

  // Spectral decay of the residual in the truncation order.
  const MetricModel rich = make_parity_model(1.0, 0.6, 0.8, 0.8, 0.5);
  const Vec3 xi{0.25, 0.1, 0.0};
  const Vec3 dir = Vec3{0.2, -1.0, 0.4}.normalized();
  const double r8 = std::abs(ibp_residual_sphere(rich, xi, 30.0, dir, 8));
  const double r16 = std::abs(ibp_residual_sphere(rich, xi, 30.0, dir, 16));
  CHECK(r16 < r8);
  if (r8 > 5e-14 * 30.0) {
    const double order = std::log(r8 / r16) / std::log(2.0);
    CHECK(order > 4.0);
  }
}

TEST_CASE("surface integration-by-parts identity holds on graph surfaces") {
  const auto tr = shared_transform(16);
  const Vec3 a = Vec3{0.5, 1.0, -0.3}.normalized();

  const MetricModel flat = make_flat();
  GraphSurface bumpy = make_round_surface(tr, flat, 30.0, Vec3{0.2, 0.0, 0.1});
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero((16 + 1) * (16 + 1));
  coeffs[basis_index(2, 0)] = 0.05 * 30.0;
  coeffs[basis_index(3, 1)] = 0.02 * 30.0;
  bumpy.u = SphereField::from_coeffs(tr, coeffs);
  CHECK(std::abs(ibp_residual_surface(bumpy, a)) < 1e-12);

  const MetricModel schw = make_schwarzschild(1.0);
  const double lambda = 50.0;

  // On a round sphere the general identity reduces to the sphere identity.
  const GraphSurface round = make_round_surface(tr, schw, lambda, Vec3{0.3, 0.0, 0.0});
  CHECK(std::abs(ibp_residual_surface(round, a)) < 1e-10 * lambda);

  GraphSurface wobbled = make_round_surface(tr, schw, lambda, Vec3::Zero());
  Eigen::VectorXd wc = Eigen::VectorXd::Zero((16 + 1) * (16 + 1));
  wc[basis_index(2, 0)] = 0.05 * lambda;
  wobbled.u = SphereField::from_coeffs(tr, wc);
  CHECK(std::abs(ibp_residual_surface(wobbled, a)) < 1e-8 * lambda);
}

TEST_CASE("drift obstruction on a centered slice matches the conformal factor") {
  // On the centered sphere the obstruction evaluates in closed form to
  // 16 pi m u(lambda)^3 g(a, xi-hat), so the calibrated ratio is u^3.
  const double m = 1.0;
  const double lambda = 100.0;
  const MetricModel model = make_schwarzschild(m);
  const auto tr = shared_transform(16);
  const ExtrinsicData ext = compute_extrinsic(make_round_surface(tr, model, lambda));

  const Vec3 xi_hat = drift_direction(ext);
  const double half_h_lambda = 0.5 * oracle::sphere_H(m, lambda) * lambda;
  CHECK(std::abs(xi_hat.norm() - std::abs(half_h_lambda - 1.0)) < 1e-10);

  const Vec3 a = xi_hat.normalized();
  const double obstruction = drift_obstruction(ext, model, a);
  const double reference = 16.0 * M_PI * m * a.dot(xi_hat);
  const double u = oracle::conf(m, lambda);
  CHECK(obstruction / reference == doctest::Approx(u * u * u).epsilon(1e-6));
}

TEST_CASE("drift obstruction requires a nearly constant mean curvature") {
  const MetricModel flat = make_flat();
  const auto tr = shared_transform(16);
  GraphSurface bumpy = make_round_surface(tr, flat, 50.0, Vec3::Zero());
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero((16 + 1) * (16 + 1));
  coeffs[basis_index(2, 0)] = 0.05 * 50.0;
  bumpy.u = SphereField::from_coeffs(tr, coeffs);
  CHECK_THROWS_AS(drift_obstruction(bumpy, Vec3{1.0, 0.0, 0.0}), NotCmcError);

  // An off-center round sphere in Schwarzschild is not CMC either; the
  // uncontrolled high-mode variation trips the default gate.
  const MetricModel schw = make_schwarzschild(1.0);
  const GraphSurface off = make_round_surface(tr, schw, 200.0, Vec3{0.5, 0.0, 0.0});
  CHECK_THROWS_AS(drift_obstruction(off, Vec3{1.0, 0.0, 0.0}), NotCmcError);
}

TEST_CASE("drift obstruction detects the translation of an off-center slice") {
  const double m = 1.0;
  const MetricModel model = make_schwarzschild(m);
  const auto tr = shared_transform(16);
  const ExtrinsicData ext =
      compute_extrinsic(make_round_surface(tr, model, 200.0, Vec3{0.5, 0.0, 0.0}));
  const Vec3 xi_hat = drift_direction(ext);
  CHECK(std::abs(xi_hat[0] - 0.5) < 0.05);

  const Vec3 along{1.0, 0.0, 0.0};
  const double o_along = drift_obstruction(ext, model, along, 2e-2);
  const double ratio = o_along / (16.0 * M_PI * along.dot(xi_hat));
  CHECK(ratio > 0.8 * m);
  CHECK(ratio < 1.2 * m);

  const Vec3 across{0.0, 1.0, 0.0};
  const double o_across = drift_obstruction(ext, model, across, 2e-2);
  CHECK(std::abs(o_across) < 0.2 * 16.0 * M_PI * m);
}

TEST_CASE("geometric centers of round pseudo-leaves") {
  const auto tr = shared_transform(16);
  const MetricModel schw = make_schwarzschild(1.0);
  std::vector<GraphSurface> centered;
  for (const double lambda : {25.0, 50.0, 100.0, 200.0}) {
    centered.push_back(make_round_surface(tr, schw, lambda, Vec3::Zero()));
  }
  const CmcCenterReport report = cmc_center_of_mass(centered);
  CHECK(report.c_cmc.norm() < 1e-8);
  CHECK(report.c_hamiltonian.norm() < 1e-8);
  CHECK(report.difference < 1e-6);
  REQUIRE(report.barycenters.size() == 4);
  for (std::size_t i = 0; i < report.barycenters.size(); ++i) {
    CHECK(report.barycenters[i].norm() < 1e-10 * report.lambdas[i]);
  }

  // Spheres centered on the translated pole have exactly symmetric area
  // measure, so every barycenter sits at the translation vector.
  const Vec3 c{1.0, -0.5, 0.25};
  const MetricModel moved = make_translated_schwarzschild(1.0, c);
  std::vector<GraphSurface> shifted;
  for (const double lambda : {25.0, 50.0, 100.0, 200.0}) {
    shifted.push_back(make_round_surface(tr, moved, lambda, c / lambda));
  }
  const CmcCenterReport moved_report = cmc_center_of_mass(shifted);
  CHECK((moved_report.c_cmc - c).norm() < 1e-8);
  CHECK(moved_report.c_cmc_converged);
  CHECK((moved_report.c_hamiltonian - c).norm() < 1e-3);
  CHECK(moved_report.difference < 2e-3);
}

TEST_CASE("center-of-mass report preconditions") {
  const auto tr = shared_transform(16);
  CHECK_THROWS_AS(cmc_center_of_mass({}), ShapeError);

  const MetricModel flat = make_flat();
  std::vector<GraphSurface> flat_leaves{make_round_surface(tr, flat, 25.0, Vec3::Zero()),
                                        make_round_surface(tr, flat, 50.0, Vec3::Zero())};
  CHECK_THROWS_AS(cmc_center_of_mass(flat_leaves), MassZeroError);

  const MetricModel schw = make_schwarzschild(1.0);
  std::vector<GraphSurface> unordered{make_round_surface(tr, schw, 50.0, Vec3::Zero()),
                                      make_round_surface(tr, schw, 25.0, Vec3::Zero())};
  CHECK_THROWS_AS(cmc_center_of_mass(unordered), ShapeError);

  const MetricModel other = make_schwarzschild(2.0);
  std::vector<GraphSurface> mixed{make_round_surface(tr, schw, 25.0, Vec3::Zero()),
                                  make_round_surface(tr, other, 50.0, Vec3::Zero())};
  CHECK_THROWS_AS(cmc_center_of_mass(mixed), ShapeError);
}
