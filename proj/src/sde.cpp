#include "bridgekit/sde.hpp"

#include <cmath>
#include <random>

#include "bridgekit/errors.hpp"
#include "bridgekit/parallel.hpp"

namespace bridgekit {

namespace {

void check_steps(double t, double dt) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("simulation horizon must be > 0");
  if (!(dt > 0.0) || dt > t) throw DomainError("time step must satisfy 0 < dt <= t");
}

std::vector<double> step_times(double t, double dt) {
  const auto full = static_cast<std::size_t>(std::floor(t / dt * (1.0 + 1e-12)));
  std::vector<double> times;
  times.reserve(full + 2);
  for (std::size_t i = 0; i <= full; ++i) times.push_back(static_cast<double>(i) * dt);
  if (t - times.back() > 1e-12 * t) {
    times.push_back(t);
  } else {
    times.back() = t;
  }
  return times;
}

template <class Simulate>
std::vector<double> endpoints(std::size_t n, const RngPolicy& policy, std::uint32_t domain,
                              unsigned threads, Simulate&& simulate) {
  std::vector<double> out(n);
  parallel_chunks(n, 1024, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Philox4x32 rng = policy.stream(domain, i);
      out[i] = simulate(rng);
    }
  });
  return out;
}

}  // namespace

double euler_maruyama(const RealFunction& mu, double x0, double t, double dt, Philox4x32& rng,
                      PathSample* path) {
  check_steps(t, dt);
  std::normal_distribution<double> normal;
  const auto full = static_cast<std::size_t>(std::floor(t / dt * (1.0 + 1e-12)));
  const double sd = std::sqrt(dt);
  double y = x0;
  if (path) {
    path->times = step_times(t, dt);
    path->values.assign(path->times.size(), x0);
    path->pinned = false;
  }
  for (std::size_t i = 0; i < full; ++i) {
    y += mu(y) * dt + sd * normal(rng);
    if (path) path->values[i + 1] = y;
  }
  const double rest = t - static_cast<double>(full) * dt;
  if (rest > 1e-12 * t) {
    y += mu(y) * rest + std::sqrt(rest) * normal(rng);
    if (path) path->values.back() = y;
  }
  return y;
}

std::vector<double> euler_maruyama_endpoints(const RealFunction& mu, double x0, double t,
                                             double dt, std::size_t n, const RngPolicy& policy,
                                             std::uint32_t domain, unsigned threads) {
  check_steps(t, dt);
  return endpoints(n, policy, domain, threads,
                   [&](Philox4x32& rng) { return euler_maruyama(mu, x0, t, dt, rng); });
}

double poisson_flip_simulate(double x0, double t, double dt, Philox4x32& rng, FlipVariant variant,
                             PathSample* path) {
  check_steps(t, dt);
  std::normal_distribution<double> normal;
  const int start_sign = flip_sign(variant, x0);
  if (!path) {
    const double sd = std::sqrt(t);
    const double a = std::abs(x0) + sd * normal(rng);
    const double b = sd * normal(rng);
    const double c = sd * normal(rng);
    std::poisson_distribution<long> flips(t);
    const int sign = flips(rng) % 2 == 0 ? start_sign : -start_sign;
    return sign * std::sqrt(a * a + b * b + c * c);
  }
  path->times = step_times(t, dt);
  path->values.assign(path->times.size(), x0);
  path->pinned = false;
  double a = std::abs(x0), b = 0.0, c = 0.0;
  int sign = start_sign;
  for (std::size_t i = 1; i < path->times.size(); ++i) {
    const double h = path->times[i] - path->times[i - 1];
    const double sd = std::sqrt(h);
    a += sd * normal(rng);
    b += sd * normal(rng);
    c += sd * normal(rng);
    std::poisson_distribution<long> flips(h);
    if (flips(rng) % 2 == 1) sign = -sign;
    path->values[i] = sign * std::sqrt(a * a + b * b + c * c);
  }
  return path->values.back();
}

std::vector<double> poisson_flip_endpoints(double x0, double t, std::size_t n,
                                           FlipVariant variant, const RngPolicy& policy,
                                           std::uint32_t domain, unsigned threads) {
  return endpoints(n, policy, domain, threads,
                   [&](Philox4x32& rng) { return poisson_flip_simulate(x0, t, t, rng, variant); });
}

}  // namespace bridgekit
