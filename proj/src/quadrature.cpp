#include "bridgekit/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bridgekit/errors.hpp"

namespace bridgekit {

namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 21>;
using Legendre = boost::math::quadrature::gauss<double, 16>;

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

Segment rule(const RealFunction& f, double a, double b) {
  double err = 0.0;
  // max_depth = 0 evaluates the 21-point Kronrod rule once, with |K - G| as the error.
  const double v = Kronrod::integrate(f, a, b, 0, 0.0, &err);
  return {a, b, v, err};
}

double tolerance(const Quadrature& q, double value) {
  return std::max(q.abs_tol, q.rel_tol * std::abs(value));
}

QuadratureResult adaptive(const RealFunction& f, std::span<const double> points,
                          const Quadrature& q) {
  std::priority_queue<Segment> heap;
  double total = 0.0;
  double total_err = 0.0;
  int evals = 0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    if (!(points[i + 1] > points[i])) continue;
    Segment s = rule(f, points[i], points[i + 1]);
    evals += 21;
    total += s.value;
    total_err += s.error;
    heap.push(s);
  }
  int subdivisions = static_cast<int>(heap.size());
  while (!heap.empty() && total_err > tolerance(q, total)) {
    if (subdivisions >= q.max_subdivisions) {
      std::ostringstream msg;
      msg << "quadrature did not converge: estimate " << total << " with error " << total_err
          << " after " << subdivisions << " subdivisions";
      throw QuadratureError(msg.str(), total, total_err);
    }
    Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Interval can no longer be split in double precision; accept it.
      total_err -= worst.error;
      continue;
    }
    Segment left = rule(f, worst.a, mid);
    Segment right = rule(f, mid, worst.b);
    evals += 42;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++subdivisions;
  }
  if (!std::isfinite(total)) {
    throw QuadratureError("quadrature produced a non-finite value", total, total_err);
  }
  // Recompute the sums from scratch so the running updates do not leak rounding.
  double value = 0.0;
  double err = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  return {value, std::max(err, 0.0), evals};
}

double composite_legendre(const RealFunction& f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + i * h;
    sum += Legendre::integrate(f, lo, i + 1 == panels ? b : lo + h);
  }
  return sum;
}

QuadratureResult fixed_grid(const RealFunction& f, std::span<const double> points,
                            const Quadrature& q) {
  const double span_total = points.back() - points.front();
  double fine = 0.0;
  double coarse = 0.0;
  int evals = 0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double a = points[i];
    const double b = points[i + 1];
    if (!(b > a)) continue;
    const int panels =
        std::max(2, static_cast<int>(std::lround(q.fixed_points / 16.0 * (b - a) / span_total)));
    fine += composite_legendre(f, a, b, panels);
    coarse += composite_legendre(f, a, b, std::max(1, panels / 2));
    evals += 16 * (panels + panels / 2);
  }
  return {fine, std::abs(fine - coarse), evals};
}

QuadratureResult run(const RealFunction& f, std::span<const double> points, const Quadrature& q) {
  if (points.size() < 2) return {};
  return q.scheme == Quadrature::Scheme::adaptive ? adaptive(f, points, q)
                                                  : fixed_grid(f, points, q);
}

}  // namespace

void Quadrature::validate() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw DomainError("quadrature tolerances must be > 0");
  if (!(truncation > 0.0)) throw DomainError("quadrature truncation must be > 0");
  if (max_subdivisions < 1) throw DomainError("quadrature needs at least one subdivision");
  if (fixed_points < 32) throw DomainError("fixed-grid quadrature needs at least 32 points");
}

QuadratureResult integrate(const RealFunction& f, double a, double b, const Quadrature& q) {
  return integrate_partitioned(f, a, b, {}, q);
}

QuadratureResult integrate_partitioned(const RealFunction& f, double a, double b,
                                       std::span<const double> cuts, const Quadrature& q) {
  q.validate();
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw DomainError("integrate needs finite limits; use integrate_windowed");
  }
  if (a == b) return {};
  if (a > b) {
    QuadratureResult r = integrate_partitioned(f, b, a, cuts, q);
    r.value = -r.value;
    return r;
  }
  std::vector<double> points{a, b};
  for (double c : cuts) {
    if (c > a && c < b) points.push_back(c);
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  return run(f, points, q);
}

QuadratureResult integrate_windowed(const RealFunction& f, const Interval& domain,
                                    const Window& window, std::span<const double> breakpoints,
                                    const Quadrature& q) {
  q.validate();
  if (window.centers.empty() || !(window.scale > 0.0)) {
    throw DomainError("integration window needs a centre and a positive scale");
  }
  const double reach = q.truncation * window.scale;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double c : window.centers) {
    lo = std::min(lo, c - reach);
    hi = std::max(hi, c + reach);
  }
  lo = std::max(lo, domain.lo);
  hi = std::min(hi, domain.hi);
  if (!(hi > lo)) {
    if (domain.bounded_below() && domain.bounded_above()) {
      lo = domain.lo;
      hi = domain.hi;
    } else {
      throw DomainError("integration window does not meet the domain");
    }
  }

  std::vector<double> cuts(breakpoints.begin(), breakpoints.end());
  const int steps = static_cast<int>(std::ceil(q.truncation));
  for (double c : window.centers) {
    for (int j = -steps; j <= steps; ++j) cuts.push_back(c + j * window.scale);
  }
  QuadratureResult total = integrate_partitioned(f, lo, hi, cuts, q);

  // Grow each side one window at a time until the integrand at the edge stops contributing.
  constexpr int kMaxExtensions = 64;
  auto extend = [&](double& edge, double limit, double direction) {
    for (int i = 0; i < kMaxExtensions; ++i) {
      if (edge == limit) return;
      const double fe = f(edge);
      const double threshold = 1e-3 * tolerance(q, total.value);
      if (std::isfinite(fe) && std::abs(fe) * reach <= threshold) return;
      double next = edge + direction * reach;
      next = direction > 0 ? std::min(next, limit) : std::max(next, limit);
      if (!std::isfinite(next)) return;
      QuadratureResult piece = direction > 0 ? integrate_partitioned(f, edge, next, cuts, q)
                                             : integrate_partitioned(f, next, edge, cuts, q);
      total.value += piece.value;
      total.error += piece.error;
      total.evaluations += piece.evaluations;
      edge = next;
    }
    throw QuadratureError("integration window kept growing without the tail vanishing",
                          total.value, total.error);
  };
  extend(hi, domain.hi, +1.0);
  extend(lo, domain.lo, -1.0);
  return total;
}

}  // namespace bridgekit
