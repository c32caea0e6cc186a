#pragma once

#include "bridgekit/kernel.hpp"

namespace bridgekit {

/// Bounded test function supported on a compact interval [lo, hi].
struct TestFunction {
  RealFunction f;
  double lo;
  double hi;
};

/// Indicator of [lo, hi].
TestFunction indicator(double lo, double hi);

/// Smooth test function with its first derivative.
struct SmoothFunction {
  RealFunction f;
  RealFunction df;
};

/// |int p_t(x,y) psi(y) m(dy) - e^{lambda t} psi(x)| / (e^{lambda t} psi(x)).
double eigen_residual(const TransitionKernel& kernel, const Eigenpair& eig, double t, double x,
                      const Quadrature& q = {});

/// |int p_t(x,z) p_s(z,y) m(dz) - p_{t+s}(x,y)| / p_{t+s}(x,y).
double chapman_kolmogorov_residual(const TransitionKernel& kernel, double s, double t, double x,
                                   double y, const Quadrature& q = {});

/// |<f, P_t g>_m - <P^_t f, g>_m| relative to the larger of the two integrals.
double duality_residual(const TransitionKernel& kernel, double t, const TestFunction& f,
                        const TestFunction& g, const Quadrature& q = {});

/// |int p_t(x,y) m(dy) - 1|.
double normalization_residual(const TransitionKernel& kernel, double t, double x,
                              const Quadrature& q = {});

/// exp(int_0^x mu(y) dy); the integral is signed.
double psi_from_drift(const RealFunction& mu, double x, const Quadrature& q = {});

/// |psi''(x) / rho - lambda psi(x)| / psi(x) with a central second difference of step h.
/// `speed_density` is rho in the natural-scale generator (1/rho) d^2/dx^2; rho = 2 for
/// standard Brownian motion.
double local_eigen_residual(const Eigenpair& eig, double x, double h, double speed_density = 2.0);

/// Speed density of standard Brownian motion on natural scale.
inline constexpr double kBrownianSpeedDensity = 2.0;

/// Estimates L^Y f(x) - L^X f(x) as [(Q_t f - f) - (P_t f - f)](x) / t and returns its distance
/// from (2 mu(x) / rho(x)) f'(x). The residual shrinks at first order in t.
double generator_drift_residual(const TransitionKernel& kernel_x,
                                const TransitionKernel& kernel_y, const SmoothFunction& f,
                                double x, double t_small, const RealFunction& mu,
                                const RealFunction& speed_density, const Quadrature& q = {});

/// P_t f(x) = int p_t(x,y) f(y) m(dy).
double apply_semigroup(const TransitionKernel& kernel, double t, double x, const RealFunction& f,
                       const Quadrature& q = {});

}  // namespace bridgekit
