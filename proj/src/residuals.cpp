#include "bridgekit/residuals.hpp"

#include <algorithm>
#include <cmath>

#include "bridgekit/errors.hpp"

namespace bridgekit {

namespace {

void require_positive_time(double t, const char* name) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw DomainError(std::string(name) + " must be > 0");
  }
}

Window covering(const TestFunction& f, const Quadrature& q) {
  return Window{{0.5 * (f.lo + f.hi)}, (f.hi - f.lo) / (2.0 * q.truncation)};
}

Interval closed(const TestFunction& f) { return Interval{f.lo, f.hi, true, true}; }

}  // namespace

TestFunction indicator(double lo, double hi) {
  if (!(hi > lo)) throw DomainError("indicator needs lo < hi");
  return {[lo, hi](double x) { return (x >= lo && x <= hi) ? 1.0 : 0.0; }, lo, hi};
}

double apply_semigroup(const TransitionKernel& kernel, double t, double x, const RealFunction& f,
                       const Quadrature& q) {
  require_positive_time(t, "t");
  auto integrand = [&](double y) { return kernel.density(t, x, y) * f(y); };
  return integrate_measure(kernel, integrand, mass_window(kernel, t, x), q).value;
}

double eigen_residual(const TransitionKernel& kernel, const Eigenpair& eig, double t, double x,
                      const Quadrature& q) {
  require_positive_time(t, "t");
  const double image = apply_semigroup(kernel, t, x, eig.psi, q);
  const double expected = std::exp(eig.lambda * t) * eig.psi(x);
  return std::abs(image - expected) / expected;
}

double chapman_kolmogorov_residual(const TransitionKernel& kernel, double s, double t, double x,
                                   double y, const Quadrature& q) {
  require_positive_time(s, "s");
  require_positive_time(t, "t");
  auto integrand = [&](double z) { return kernel.density(t, x, z) * kernel.density(s, z, y); };
  Window w = bridge_window(kernel, x, t, t + s, y);
  const double composed = integrate_measure(kernel, integrand, w, q).value;
  const double direct = kernel.density(t + s, x, y);
  return std::abs(composed - direct) / direct;
}

double duality_residual(const TransitionKernel& kernel, double t, const TestFunction& f,
                        const TestFunction& g, const Quadrature& q) {
  require_positive_time(t, "t");
  // <f, P_t g>
  auto p_g = [&](double x) {
    auto inner = [&](double y) { return kernel.density(t, x, y) * g.f(y); };
    return integrate_measure(kernel, inner, covering(g, q), q, closed(g)).value;
  };
  auto lhs_integrand = [&](double x) { return f.f(x) * p_g(x); };
  const double lhs = integrate_measure(kernel, lhs_integrand, covering(f, q), q, closed(f)).value;

  // <P^_t f, g>
  auto phat_f = [&](double x) {
    auto inner = [&](double y) { return kernel.dual_density(t, x, y) * f.f(y); };
    return integrate_measure(kernel, inner, covering(f, q), q, closed(f)).value;
  };
  auto rhs_integrand = [&](double x) { return phat_f(x) * g.f(x); };
  const double rhs = integrate_measure(kernel, rhs_integrand, covering(g, q), q, closed(g)).value;

  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  if (scale == 0.0) return 0.0;
  return std::abs(lhs - rhs) / scale;
}

double normalization_residual(const TransitionKernel& kernel, double t, double x,
                              const Quadrature& q) {
  return std::abs(apply_semigroup(kernel, t, x, [](double) { return 1.0; }, q) - 1.0);
}

double psi_from_drift(const RealFunction& mu, double x, const Quadrature& q) {
  if (x == 0.0) return 1.0;
  return std::exp(integrate(mu, 0.0, x, q).value);
}

double local_eigen_residual(const Eigenpair& eig, double x, double h, double speed_density) {
  if (!(h > 0.0)) throw DomainError("finite-difference step must be > 0");
  if (!(speed_density > 0.0)) throw DomainError("speed density must be > 0");
  const double center = eig.psi(x);
  const double second = (eig.psi(x + h) - 2.0 * center + eig.psi(x - h)) / (h * h);
  return std::abs(second / speed_density - eig.lambda * center) / center;
}

double generator_drift_residual(const TransitionKernel& kernel_x,
                                const TransitionKernel& kernel_y, const SmoothFunction& f,
                                double x, double t_small, const RealFunction& mu,
                                const RealFunction& speed_density, const Quadrature& q) {
  require_positive_time(t_small, "t_small");
  const ReferenceMeasure& mx = kernel_x.measure();
  const ReferenceMeasure& my = kernel_y.measure();
  if (mx.kind() != ReferenceMeasure::Kind::lebesgue_with_density ||
      my.kind() != ReferenceMeasure::Kind::lebesgue_with_density) {
    throw MeasureMismatchError("generator comparison needs measures on the real line");
  }
  // (Q_t f - P_t f)(x) as one integral against Lebesgue, which avoids cancelling two O(1) terms.
  auto integrand = [&](double y) {
    const double qy = my.contains(y) ? kernel_y.density(t_small, x, y) * my.density(y) : 0.0;
    const double py = mx.contains(y) ? kernel_x.density(t_small, x, y) * mx.density(y) : 0.0;
    return (qy - py) * f.f(y);
  };
  Window w = mass_window(kernel_y, t_small, x);
  const Window wx = mass_window(kernel_x, t_small, x);
  w.centers.insert(w.centers.end(), wx.centers.begin(), wx.centers.end());
  Interval domain = mx.support();
  domain.lo = std::min(domain.lo, my.support().lo);
  domain.hi = std::max(domain.hi, my.support().hi);
  std::vector<double> cuts(kernel_x.breakpoints().begin(), kernel_x.breakpoints().end());
  cuts.insert(cuts.end(), kernel_y.breakpoints().begin(), kernel_y.breakpoints().end());
  const double difference = integrate_windowed(integrand, domain, w, cuts, q).value;
  const double estimate = difference / t_small;
  const double expected = 2.0 * mu(x) / speed_density(x) * f.df(x);
  return std::abs(estimate - expected);
}

}  // namespace bridgekit
