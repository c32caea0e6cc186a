#pragma once

#include <cstdint>
#include <vector>

#include "bridgekit/catalog.hpp"
#include "bridgekit/path.hpp"
#include "bridgekit/rng.hpp"

namespace bridgekit {

/// Euler-Maruyama for dY = dB + mu(Y) dt: floor(t/dt) full steps, then one partial step for any
/// remainder. When `path` is given it receives every visited time and state.
double euler_maruyama(const RealFunction& mu, double x0, double t, double dt, Philox4x32& rng,
                      PathSample* path = nullptr);

/// Endpoints of `n` independent Euler-Maruyama runs; run i uses stream (domain, i).
std::vector<double> euler_maruyama_endpoints(const RealFunction& mu, double x0, double t,
                                             double dt, std::size_t n, const RngPolicy& policy,
                                             std::uint32_t domain, unsigned threads = 0);

/// Flipped Bessel(3) process: the radius of a 3-d Brownian motion started at (|x0|, 0, 0) with
/// its sign flipped at the jumps of a unit-rate Poisson process. The endpoint is exact in law;
/// dt only sets the resolution of `path`.
double poisson_flip_simulate(double x0, double t, double dt, Philox4x32& rng, FlipVariant variant,
                             PathSample* path = nullptr);

std::vector<double> poisson_flip_endpoints(double x0, double t, std::size_t n,
                                           FlipVariant variant, const RngPolicy& policy,
                                           std::uint32_t domain, unsigned threads = 0);

}  // namespace bridgekit
