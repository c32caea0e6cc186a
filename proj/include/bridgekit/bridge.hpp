#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bridgekit/kernel.hpp"
#include "bridgekit/path.hpp"
#include "bridgekit/rng.hpp"

namespace bridgekit {

/// The (x, t, y)-bridge of a kernel: the process pinned to start at x and end at y at time t.
struct BridgeSpec {
  TransitionKernel kernel;
  double x;
  double t;
  double y;

  /// Throws DomainError unless t > 0, x and y lie in the support and p_t(x, y) > 0.
  void validate() const;
};

/// p_{s2-s}(z, z2) p_{t-s2}(z2, y) / p_{t-s}(z, y): density in z2 (w.r.t. the kernel's measure)
/// of the bridge at time s2 given it sits at z at time s.
double bridge_transition_density(const BridgeSpec& spec, double z, double s, double z2, double s2);

/// The same density taken with respect to Lebesgue (or counting) measure, i.e. multiplied by the
/// reference density at z2. Use this to compare bridges of kernels with different measures.
double bridge_transition_lebesgue_density(const BridgeSpec& spec, double z, double s, double z2,
                                          double s2);

/// p_s(x, z) p_{t-s}(z, y) / p_t(x, y): the bridge marginal at time s (0 < s < t).
double bridge_marginal_density(const BridgeSpec& spec, double s, double z);

/// Bridge-marginal mass of `range` at time s, by quadrature.
double bridge_marginal_mass(const BridgeSpec& spec, double s, const Interval& range,
                            const Quadrature& q = {});

/// p_{t-s}(X_s, y) / p_t(x, y): density of the bridge law against the free law on F_s.
double bridge_likelihood_ratio(const BridgeSpec& spec, const PathSample& path, double s);

/// exp(-lambda t) psi(X_t) / psi(X_0) evaluated on a path at grid time t.
double h_likelihood_ratio(const Eigenpair& eig, const PathSample& path, double t);

struct SamplerOptions {
  enum class Method {
    automatic,  // closed forms where available; h-transforms sample their base bridge
    generic,    // rejection sampling from the kernel's own bridge transition densities
  };
  Method method = Method::automatic;
  int rejection_budget = 10000;
};

/// One bridge path on `grid` (which must start at 0 and end at spec.t). Endpoints are pinned.
/// Throws RejectionBudgetExceeded when a rejection step gives up.
PathSample sample_bridge(const BridgeSpec& spec, std::span<const double> grid, Philox4x32& rng,
                         const SamplerOptions& options = {});

/// `draws` bridge paths; draw i uses RngPolicy stream (domain, i) so the pool does not depend on
/// the thread count.
PathPool sample_bridges(const BridgeSpec& spec, std::span<const double> grid, std::size_t draws,
                        const RngPolicy& policy, std::uint32_t domain, unsigned threads = 0,
                        const SamplerOptions& options = {});

/// One unpinned path of the kernel's process started at x, on `grid` (grid[0] == 0).
PathSample sample_path(const TransitionKernel& kernel, double x, std::span<const double> grid,
                       Philox4x32& rng);

PathPool sample_paths(const TransitionKernel& kernel, double x, std::span<const double> grid,
                      std::size_t draws, const RngPolicy& policy, std::uint32_t domain,
                      unsigned threads = 0);

/// psi_s(z) = p_{h-s}(z, b) / q_{h-s}(z, b), both densities taken w.r.t. kernel_p's measure.
/// Throws MeasureMismatchError when the measures cannot be converted.
double extract_eigen_ratio(const TransitionKernel& kernel_p, const TransitionKernel& kernel_q,
                           double b, double horizon, double s, double z);

/// lambda_s = -log(psi_s(b) / psi_0(b)); equal to lambda * s for h-related kernels.
double extract_lambda_s(const TransitionKernel& kernel_p, const TransitionKernel& kernel_q,
                        double b, double horizon, double s);

using PathFunctional = std::function<double(const PathSample&)>;

struct DisintegrationReport {
  double forward;     // MC estimate of E^x[F g(X_t)]
  double forward_se;
  double bridged;     // quadrature over y of E^{x,y}_t[F] g(y) p_t(x,y)
  double bridged_se;
  double residual;    // |forward - bridged|
  double combined_se;
};

/// Compares E^x[F g(X_t)] with int E^{x,y}_t[F] g(y) p_t(x, y) m(dy). The y-integral uses a
/// fixed Gauss-Legendre rule over the kernel's mass window; each node gets its own bridge pool.
DisintegrationReport disintegration_residual(const TransitionKernel& kernel, double x, double t,
                                             std::span<const double> grid,
                                             const PathFunctional& functional,
                                             const RealFunction& g, std::size_t n_samples,
                                             const RngPolicy& policy, const Quadrature& q = {},
                                             unsigned threads = 0);

}  // namespace bridgekit
