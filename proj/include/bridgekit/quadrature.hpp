#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace bridgekit {

using RealFunction = std::function<double(double)>;

/// Integration settings shared by every residual check.
struct Quadrature {
  enum class Scheme { adaptive, fixed_grid };

  Scheme scheme = Scheme::adaptive;
  double abs_tol = 1e-10;
  double rel_tol = 1e-9;
  int max_subdivisions = 4000;
  /// Half-width of integration windows on unbounded supports, in units of the window scale.
  double truncation = 10.0;
  /// Number of nodes used by the fixed-grid scheme.
  int fixed_points = 4096;

  void validate() const;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
};

/// Closed or half-open real interval. Infinite endpoints are allowed.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_closed = false;
  bool hi_closed = false;

  bool contains(double x) const {
    if (x < lo || x > hi) return false;
    if (x == lo && !lo_closed) return false;
    if (x == hi && !hi_closed) return false;
    return true;
  }
  bool bounded_below() const { return lo > -std::numeric_limits<double>::infinity(); }
  bool bounded_above() const { return hi < std::numeric_limits<double>::infinity(); }
};

/// Where the mass of an integrand is expected to sit. The window [c - W*scale, c + W*scale]
/// around every centre is pre-partitioned at spacing `scale`, so narrow peaks are never skipped.
struct Window {
  std::vector<double> centers;
  double scale = 1.0;
};

/// Integrates f over the finite interval [a, b] (a < b required; a == b returns 0).
QuadratureResult integrate(const RealFunction& f, double a, double b, const Quadrature& q);

/// Integrates f over [a, b] after splitting at the given interior points.
QuadratureResult integrate_partitioned(const RealFunction& f, double a, double b,
                                       std::span<const double> cuts, const Quadrature& q);

/// Integrates f over `domain` using the window to pick a finite core. On unbounded sides the
/// core is extended a window at a time until the integrand at the edge is negligible.
QuadratureResult integrate_windowed(const RealFunction& f, const Interval& domain,
                                    const Window& window, std::span<const double> breakpoints,
                                    const Quadrature& q);

}  // namespace bridgekit
