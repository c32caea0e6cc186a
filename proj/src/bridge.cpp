#include "bridgekit/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "bridgekit/catalog.hpp"
#include "bridgekit/errors.hpp"
#include "bridgekit/parallel.hpp"
#include "bridgekit/rejection.hpp"

namespace bridgekit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

void check_times(double s, double s2, double t) {
  if (!(0.0 <= s && s < s2 && s2 < t)) {
    std::ostringstream msg;
    msg << "bridge times must satisfy 0 <= s < s2 < t (got s=" << s << ", s2=" << s2
        << ", t=" << t << ")";
    throw DomainError(msg.str());
  }
}

void check_grid(std::span<const double> grid, double t) {
  if (grid.size() < 2) throw DomainError("a bridge grid needs both endpoints");
  if (grid.front() != 0.0) throw DomainError("grid must start at time 0");
  if (std::abs(grid.back() - t) > 1e-12 * std::max(1.0, t)) {
    throw DomainError("grid must end at the bridge horizon");
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw DomainError("grid times must be strictly increasing");
  }
}

double draw_rejection(const std::function<double(double)>& log_f, const Interval& support,
                      const Window& window, Philox4x32& rng, int budget) {
  RejectionSampler sampler(log_f, support, window);
  return sampler(rng, budget);
}

// Magnitude of a Bessel(3) bridge step: from a at time 0 to b at time `rest` after `dt`.
double bessel_bridge_step(double a, double dt, double rest, double b, Philox4x32& rng,
                          int budget) {
  auto log_f = [=](double r) {
    if (!(r > 0.0)) return kNegInf;
    return log_bessel3_density(dt, a, r) + log_bessel3_density(rest - dt, r, b) + 2.0 * std::log(r);
  };
  const Window w{{a + (b - a) * dt / rest}, std::sqrt(dt * (rest - dt) / rest)};
  return draw_rejection(log_f, Interval{0.0, std::numeric_limits<double>::infinity(), false, false},
                        w, rng, budget);
}

// Sign of the next flipped Bessel state given the current sign and the pinned end sign.
int flip_bridge_sign(int from, double dt, double rest, int to, Philox4x32& rng) {
  const double w_plus = parity_weight(dt, from == 1) * parity_weight(rest - dt, to == 1);
  const double w_minus = parity_weight(dt, from == -1) * parity_weight(rest - dt, to == -1);
  std::uniform_real_distribution<double> u;
  return u(rng) * (w_plus + w_minus) < w_plus ? 1 : -1;
}

double generic_bridge_step(const TransitionKernel& kernel, double z, double dt, double rest,
                           double y, Philox4x32& rng, int budget) {
  const ReferenceMeasure& m = kernel.measure();
  auto log_f = [&](double z2) {
    if (!m.contains(z2)) return kNegInf;
    return safe_log(kernel.density(dt, z, z2)) + safe_log(kernel.density(rest - dt, z2, y)) +
           safe_log(m.density(z2));
  };
  return draw_rejection(log_f, m.support(), bridge_window(kernel, z, dt, rest, y), rng, budget);
}

// One step of the bridge to y: from z, `rest` time units before the end, advance by dt.
double bridge_step(const TransitionKernel& kernel, double z, double dt, double rest, double y,
                   Philox4x32& rng, const SamplerOptions& opts) {
  if (opts.method == SamplerOptions::Method::generic) {
    return generic_bridge_step(kernel, z, dt, rest, y, rng, opts.rejection_budget);
  }
  if (std::holds_alternative<GaussianFamily>(kernel.family())) {
    std::normal_distribution<double> normal;
    const double mean = z + (y - z) * dt / rest;
    const double var = dt * (rest - dt) / rest;
    return mean + std::sqrt(var) * normal(rng);
  }
  if (const auto* h = std::get_if<HTransformFamily>(&kernel.family())) {
    return bridge_step(*h->base, z, dt, rest, y, rng, opts);
  }
  if (std::holds_alternative<Bessel3Family>(kernel.family())) {
    return bessel_bridge_step(z, dt, rest, y, rng, opts.rejection_budget);
  }
  if (const auto* f = std::get_if<FlippedBesselFamily>(&kernel.family())) {
    const int sign = flip_bridge_sign(flip_sign(f->variant, z), dt, rest,
                                      flip_sign(f->variant, y), rng);
    return sign * bessel_bridge_step(std::abs(z), dt, rest, std::abs(y), rng,
                                     opts.rejection_budget);
  }
  return generic_bridge_step(kernel, z, dt, rest, y, rng, opts.rejection_budget);
}

// Forward step of the kernel's process from z over dt.
double forward_step(const TransitionKernel& kernel, double z, double dt, Philox4x32& rng) {
  std::normal_distribution<double> normal;
  if (std::holds_alternative<GaussianFamily>(kernel.family())) {
    return z + std::sqrt(dt) * normal(rng);
  }
  if (const auto* h = std::get_if<HTransformFamily>(&kernel.family())) {
    const auto& terms = h->eig.exp_terms;
    const bool mixture = std::holds_alternative<GaussianFamily>(h->base->family()) &&
                         !terms.empty() &&
                         std::all_of(terms.begin(), terms.end(),
                                     [](const ExpTerm& e) { return e.coefficient > 0.0; });
    if (mixture) {
      // exp(-lambda dt) psi(y)/psi(z) N(z, dt)(dy) splits into N(z + r dt, dt) components.
      std::vector<double> log_w;
      for (const ExpTerm& e : terms) {
        log_w.push_back(std::log(e.coefficient) + e.rate * z + 0.5 * e.rate * e.rate * dt);
      }
      const double top = *std::max_element(log_w.begin(), log_w.end());
      std::vector<double> w;
      for (double lw : log_w) w.push_back(std::exp(lw - top));
      std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
      const std::size_t i = terms.size() == 1 ? 0 : pick(rng);
      return z + terms[i].rate * dt + std::sqrt(dt) * normal(rng);
    }
  }
  if (std::holds_alternative<Bessel3Family>(kernel.family())) {
    const double sd = std::sqrt(dt);
    const double a = z + sd * normal(rng);
    const double b = sd * normal(rng);
    const double c = sd * normal(rng);
    return std::sqrt(a * a + b * b + c * c);
  }
  if (const auto* f = std::get_if<FlippedBesselFamily>(&kernel.family())) {
    const double sd = std::sqrt(dt);
    const double a = std::abs(z) + sd * normal(rng);
    const double b = sd * normal(rng);
    const double c = sd * normal(rng);
    std::poisson_distribution<long> flips(dt);
    const int sign = flip_sign(f->variant, z) * (flips(rng) % 2 == 0 ? 1 : -1);
    return sign * std::sqrt(a * a + b * b + c * c);
  }
  const ReferenceMeasure& m = kernel.measure();
  auto log_f = [&](double y) {
    if (!m.contains(y)) return kNegInf;
    return safe_log(kernel.density(dt, z, y)) + safe_log(m.density(y));
  };
  return draw_rejection(log_f, m.support(), mass_window(kernel, dt, z), rng, 10000);
}

template <class Sampler>
PathPool fill_pool(std::span<const double> grid, std::size_t draws, unsigned threads,
                   Sampler&& sample_one) {
  PathPool pool;
  pool.times.assign(grid.begin(), grid.end());
  pool.draws = draws;
  pool.values.assign(draws * grid.size(), 0.0);
  parallel_chunks(draws, 256, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const PathSample path = sample_one(i);
      std::copy(path.values.begin(), path.values.end(), pool.draw(i).begin());
    }
  });
  return pool;
}

void check_measures(const TransitionKernel& p, const TransitionKernel& q) {
  const auto& mp = p.measure();
  const auto& mq = q.measure();
  if (mp.kind() != mq.kind()) {
    throw MeasureMismatchError("kernels live on different kinds of state space");
  }
  if (mp.kind() == ReferenceMeasure::Kind::finite_weights) {
    if (mp.weights().size() != mq.weights().size()) {
      throw MeasureMismatchError("finite kernels have different state counts");
    }
    return;
  }
  if (mp.support().lo != mq.support().lo || mp.support().hi != mq.support().hi) {
    throw MeasureMismatchError("kernels have different supports");
  }
}

}  // namespace

void BridgeSpec::validate() const {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("bridge horizon must be > 0");
  const double p = kernel.density(t, x, y);
  if (!(p > 0.0)) throw DomainError("bridge endpoints are not connected: p_t(x, y) = 0");
}

double bridge_transition_density(const BridgeSpec& spec, double z, double s, double z2,
                                 double s2) {
  check_times(s, s2, spec.t);
  const auto& k = spec.kernel;
  const double denom = k.density(spec.t - s, z, spec.y);
  if (!(denom > 0.0)) throw DomainError("conditioning state cannot reach the bridge end");
  return k.density(s2 - s, z, z2) * k.density(spec.t - s2, z2, spec.y) / denom;
}

double bridge_transition_lebesgue_density(const BridgeSpec& spec, double z, double s, double z2,
                                          double s2) {
  return bridge_transition_density(spec, z, s, z2, s2) * spec.kernel.measure().density(z2);
}

double bridge_marginal_density(const BridgeSpec& spec, double s, double z) {
  if (!(s > 0.0 && s < spec.t)) throw DomainError("bridge marginal needs 0 < s < t");
  const auto& k = spec.kernel;
  return k.density(s, spec.x, z) * k.density(spec.t - s, z, spec.y) /
         k.density(spec.t, spec.x, spec.y);
}

double bridge_marginal_mass(const BridgeSpec& spec, double s, const Interval& range,
                            const Quadrature& q) {
  if (!(s > 0.0 && s < spec.t)) throw DomainError("bridge marginal needs 0 < s < t");
  const auto& k = spec.kernel;
  const double norm = k.density(spec.t, spec.x, spec.y);
  auto f = [&](double z) {
    return k.density(s, spec.x, z) * k.density(spec.t - s, z, spec.y) / norm;
  };
  return integrate_measure(k, f, bridge_window(k, spec.x, s, spec.t, spec.y), q, range).value;
}

double bridge_likelihood_ratio(const BridgeSpec& spec, const PathSample& path, double s) {
  if (!(s >= 0.0 && s < spec.t)) throw DomainError("likelihood ratio needs 0 <= s < t");
  const double xs = path.value_at(s);
  return spec.kernel.density(spec.t - s, xs, spec.y) / spec.kernel.density(spec.t, spec.x, spec.y);
}

double h_likelihood_ratio(const Eigenpair& eig, const PathSample& path, double t) {
  return std::exp(-eig.lambda * t) * eig.psi(path.value_at(t)) / eig.psi(path.value_at(0.0));
}

PathSample sample_bridge(const BridgeSpec& spec, std::span<const double> grid, Philox4x32& rng,
                         const SamplerOptions& options) {
  spec.validate();
  check_grid(grid, spec.t);
  PathSample path;
  path.times.assign(grid.begin(), grid.end());
  path.times.back() = spec.t;
  path.values.assign(grid.size(), spec.x);
  path.pinned = true;
  for (std::size_t k = 1; k + 1 < grid.size(); ++k) {
    const double rest = spec.t - grid[k - 1];
    path.values[k] = bridge_step(spec.kernel, path.values[k - 1], grid[k] - grid[k - 1], rest,
                                 spec.y, rng, options);
  }
  path.values.back() = spec.y;
  return path;
}

PathPool sample_bridges(const BridgeSpec& spec, std::span<const double> grid, std::size_t draws,
                        const RngPolicy& policy, std::uint32_t domain, unsigned threads,
                        const SamplerOptions& options) {
  spec.validate();
  check_grid(grid, spec.t);
  return fill_pool(grid, draws, threads, [&](std::size_t i) {
    Philox4x32 rng = policy.stream(domain, i);
    return sample_bridge(spec, grid, rng, options);
  });
}

PathSample sample_path(const TransitionKernel& kernel, double x, std::span<const double> grid,
                       Philox4x32& rng) {
  if (grid.empty() || grid.front() != 0.0) throw DomainError("grid must start at time 0");
  if (!kernel.measure().contains(x)) throw DomainError("start state is outside the support");
  PathSample path;
  path.times.assign(grid.begin(), grid.end());
  path.values.assign(grid.size(), x);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double dt = grid[k] - grid[k - 1];
    if (!(dt > 0.0)) throw DomainError("grid times must be strictly increasing");
    path.values[k] = forward_step(kernel, path.values[k - 1], dt, rng);
  }
  return path;
}

PathPool sample_paths(const TransitionKernel& kernel, double x, std::span<const double> grid,
                      std::size_t draws, const RngPolicy& policy, std::uint32_t domain,
                      unsigned threads) {
  return fill_pool(grid, draws, threads, [&](std::size_t i) {
    Philox4x32 rng = policy.stream(domain, i);
    return sample_path(kernel, x, grid, rng);
  });
}

double extract_eigen_ratio(const TransitionKernel& kernel_p, const TransitionKernel& kernel_q,
                           double b, double horizon, double s, double z) {
  check_measures(kernel_p, kernel_q);
  if (!(s >= 0.0 && s < horizon)) throw DomainError("extraction needs 0 <= s < horizon");
  const double rho_p = kernel_p.measure().density(b);
  const double rho_q = kernel_q.measure().density(b);
  if (!(rho_p > 0.0) || !(rho_q > 0.0) || !std::isfinite(rho_p) || !std::isfinite(rho_q)) {
    throw MeasureMismatchError("reference densities at the end state cannot be converted");
  }
  const double p = kernel_p.density(horizon - s, z, b);
  const double q = kernel_q.density(horizon - s, z, b) * rho_q / rho_p;
  return p / q;
}

double extract_lambda_s(const TransitionKernel& kernel_p, const TransitionKernel& kernel_q,
                        double b, double horizon, double s) {
  return -std::log(extract_eigen_ratio(kernel_p, kernel_q, b, horizon, s, b) /
                   extract_eigen_ratio(kernel_p, kernel_q, b, horizon, 0.0, b));
}

namespace {

struct MeanSe {
  double mean;
  double se;
};

MeanSe mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double a : v) mean += a;
  mean /= n;
  double ss = 0.0;
  for (double a : v) ss += (a - mean) * (a - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0};
}

// 16-point Gauss-Legendre nodes/weights on [-1, 1] (positive half).
constexpr std::array<double, 8> kGl16x = {
    0.0950125098376374401853193, 0.2816035507792589132304605, 0.4580167776572273863424194,
    0.6178762444026437484466718, 0.7554044083550030338951012, 0.8656312023878317438804679,
    0.9445750230732325760779884, 0.9894009349916499325961542};
constexpr std::array<double, 8> kGl16w = {
    0.1894506104550684962853967, 0.1826034150449235888667637, 0.1691565193950025381893121,
    0.1495959888165767320815017, 0.1246289712555338720524763, 0.0951585116824927848099251,
    0.0622535239386478928628438, 0.0271524594117540948517806};

}  // namespace

DisintegrationReport disintegration_residual(const TransitionKernel& kernel, double x, double t,
                                             std::span<const double> grid,
                                             const PathFunctional& functional,
                                             const RealFunction& g, std::size_t n_samples,
                                             const RngPolicy& policy, const Quadrature& q,
                                             unsigned threads) {
  if (n_samples < 2) throw InsufficientSampleError("disintegration needs at least 2 samples");
  if (kernel.measure().kind() != ReferenceMeasure::Kind::lebesgue_with_density) {
    throw DomainError("disintegration is implemented for interval state spaces");
  }
  check_grid(grid, t);
  DisintegrationReport report{};

  const PathPool forward = sample_paths(kernel, x, grid, n_samples, policy, 1, threads);
  std::vector<double> fwd(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const PathSample path = forward.path(i);
    fwd[i] = functional(path) * g(path.values.back());
  }
  const MeanSe f = mean_se(fwd);
  report.forward = f.mean;
  report.forward_se = f.se;

  // Node layout: the mass window, clipped to the support and split at breakpoints.
  const Window w = mass_window(kernel, t, x);
  const Interval& support = kernel.measure().support();
  double lo = *std::min_element(w.centers.begin(), w.centers.end()) - q.truncation * w.scale;
  double hi = *std::max_element(w.centers.begin(), w.centers.end()) + q.truncation * w.scale;
  lo = std::max(lo, support.lo);
  hi = std::min(hi, support.hi);
  std::vector<double> edges{lo};
  for (double b : kernel.breakpoints()) {
    if (b > lo && b < hi) edges.push_back(b);
  }
  edges.push_back(hi);
  std::vector<double> panels{lo};
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const int pieces =
        std::max(1, static_cast<int>(std::lround(4.0 * (edges[i + 1] - edges[i]) / (hi - lo))));
    for (int j = 1; j <= pieces; ++j) {
      panels.push_back(edges[i] + (edges[i + 1] - edges[i]) * j / pieces);
    }
  }
  struct Node {
    double y;
    double weight;
  };
  std::vector<Node> nodes;
  for (std::size_t p = 0; p + 1 < panels.size(); ++p) {
    const double mid = 0.5 * (panels[p] + panels[p + 1]);
    const double half = 0.5 * (panels[p + 1] - panels[p]);
    for (std::size_t i = 0; i < kGl16x.size(); ++i) {
      for (double sgn : {-1.0, 1.0}) {
        const double y = mid + sgn * half * kGl16x[i];
        const double wt = half * kGl16w[i] * kernel.density(t, x, y) *
                          kernel.measure().density(y) * g(y);
        if (std::abs(wt) > 1e-16) nodes.push_back({y, wt});
      }
    }
  }

  double bridged = 0.0;
  double var = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const BridgeSpec spec{kernel, x, t, nodes[j].y};
    const PathPool pool = sample_bridges(spec, grid, n_samples, policy,
                                         static_cast<std::uint32_t>(2 + j), threads);
    std::vector<double> vals(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) vals[i] = functional(pool.path(i));
    const MeanSe b = mean_se(vals);
    bridged += nodes[j].weight * b.mean;
    var += nodes[j].weight * nodes[j].weight * b.se * b.se;
  }
  report.bridged = bridged;
  report.bridged_se = std::sqrt(var);
  report.residual = std::abs(report.forward - report.bridged);
  report.combined_se = std::hypot(report.forward_se, report.bridged_se);
  return report;
}

}  // namespace bridgekit
