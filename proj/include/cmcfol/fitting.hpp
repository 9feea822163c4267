// Distributed under the MIT License.
// See LICENSE.txt for details.

#pragma once

#include <optional>
#include <vector>

namespace cmcfol {

// Least-squares slope of log|err| against log(scale).  Used for convergence
// order measurements throughout the tests and reports.  Entries with
// |err| <= floor are discarded; returns nullopt if fewer than two usable
// points remain.
std::optional<double> loglog_slope(const std::vector<double>& scale,
                                   const std::vector<double>& err, double floor = 0.0);

// Decay order fitted from successive differences of a sequence sampled on an
// increasing ladder x_k: assumes v(x) ~ v_inf + c x^-p and returns p.
std::optional<double> fitted_decay_order(const std::vector<double>& x,
                                         const std::vector<double>& v);

struct ExtrapolationResult {
  double value = 0.0;          // extrapolated limit
  double raw_last = 0.0;       // last ladder entry, for reference
  double order = 0.0;          // leading order actually used
  bool order_fitted = false;   // true if the order came from the data
  bool converged = true;       // false when the ladder shows no decay
  double error_estimate = 0.0; // |last stage - previous stage|
  std::vector<std::vector<double>> table;  // Richardson tableau, row 0 = input
};

// Iterated Richardson extrapolation of v(x_k) -> v_inf on an increasing
// ladder, assuming an error expansion c1 x^-p + c2 x^-(p+1) + ...
// If `known_order` is given it seeds p; otherwise p is fitted from the data.
// A fitted order <= min_order marks the result as non-convergent (the value
// then falls back to the last raw entry).
ExtrapolationResult richardson_extrapolate(const std::vector<double>& x,
                                           const std::vector<double>& v,
                                           std::optional<double> known_order = std::nullopt,
                                           double min_order = 0.05);

// Least squares fit of y ~ c2 t^2 + c4 t^4 through the origin; returns {c2, c4}.
std::pair<double, double> fit_even_quartic(const std::vector<double>& t,
                                           const std::vector<double>& y);

bool strictly_decreasing(const std::vector<double>& v);
bool strictly_increasing(const std::vector<double>& v);

}  // namespace cmcfol
