#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bridgekit/kernel.hpp"

namespace bridgekit {

/// Standard Brownian motion: p_t(x,y) = (2 pi t)^{-1/2} exp(-(y-x)^2 / 2t) w.r.t. Lebesgue.
TransitionKernel gaussian_kernel();

/// Brownian motion with constant drift k, as the h-transform of the Gaussian kernel by exp(kx).
TransitionKernel constant_drift_kernel(double k);

/// Brownian motion with drift k tanh(kx + c): the h-transform by cosh(kx + c) / cosh(c).
TransitionKernel tanh_drift_kernel(double k, double c);

/// Three-dimensional Bessel process on [0, inf) (0 is an entrance point), density w.r.t. y^2 dy.
TransitionKernel bessel3_kernel();

/// Bessel(3) radius with its sign flipped at the jumps of an independent unit-rate Poisson
/// process. Density w.r.t. x^2 dx on the real line; the variants differ only in which sign the
/// state 0 carries (X: 0 counts as positive, Y: 0 counts as negative).
TransitionKernel flipped_bessel_kernel(FlipVariant variant);

/// Bessel(3) transition density b_t(x, y) w.r.t. y^2 dy, x, y >= 0.
double bessel3_density(double t, double x, double y);
/// log b_t(x, y); -inf where the density underflows.
double log_bessel3_density(double t, double x, double y);

/// Probability that a unit-rate Poisson process has an even (same = true) or odd number of
/// jumps in time t: (1 +- exp(-2t)) / 2.
double parity_weight(double t, bool same);

/// Sign the flipped Bessel variant assigns to state x (+1 or -1).
int flip_sign(FlipVariant variant, double x);

// Eigenpairs used across the checks. All are normalised so psi(0) = 1.
Eigenpair cosh_eigenpair(double k, double c);  // lambda = k^2/2
Eigenpair exp_eigenpair(double k);             // lambda = k^2/2
Eigenpair bessel3_eigenpair(double k);         // sinh(k|x|)/(k|x|), lambda = k^2/2

/// A kernel resolved from a catalog identifier, with the drift of its SDE form when it is a
/// Brownian motion with drift, and known eigenpairs of the kernel.
struct CatalogEntry {
  std::string id;
  TransitionKernel kernel;
  std::optional<RealFunction> drift;
  std::vector<Eigenpair> eigenpairs;
};

/// Resolves "gaussian", "drift:k", "tanh:k:c", "bessel3", "flipbessel:X" or "flipbessel:Y".
/// Throws std::invalid_argument on unknown or malformed identifiers.
CatalogEntry parse_kernel_id(std::string_view id);

}  // namespace bridgekit
