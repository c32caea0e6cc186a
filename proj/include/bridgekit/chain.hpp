#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bridgekit/kernel.hpp"

namespace bridgekit {

/// Continuous-time chain on states 0..n-1: generator G (off-diagonal >= 0) and reference
/// weights m. Killed chains (row sums < 0) are allowed; they carry nontrivial eigenpairs.
struct ChainModel {
  Eigen::MatrixXd generator;
  Eigen::VectorXd weights;

  std::size_t size() const { return static_cast<std::size_t>(generator.rows()); }
  /// Throws DomainError on shape errors, negative rates, positive row sums, non-positive
  /// weights or a reducible rate pattern.
  void validate() const;
  bool conservative(double tol = 1e-12) const;
};

/// Random conservative chain: off-diagonal rates uniform on [0, 1], weights the stationary law.
ChainModel random_chain(std::size_t n, std::uint64_t seed);

/// random_chain(n, seed) with an extra killing rate uniform on [0, 1] per state.
ChainModel random_killed_chain(std::size_t n, std::uint64_t seed);

/// Plain-text form: n, then n rows of G, then the n weights.
ChainModel read_chain(std::istream& in);
void write_chain(std::ostream& out, const ChainModel& chain);
/// A file path, "random:n:seed" or "killed:n:seed".
ChainModel load_chain(std::string_view source);

/// exp(tG) by scaling and squaring of the Taylor series.
Eigen::MatrixXd transition_matrix(const ChainModel& chain, double t);
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a);

struct PerronPair {
  Eigen::VectorXd psi;  // psi[0] == 1
  double lambda = 0.0;
  std::size_t iterations = 0;
};

/// Positive right eigenvector of an irreducible matrix with non-negative off-diagonal, by power
/// iteration on G + cI. Throws ConvergenceError after `max_iterations`.
PerronPair perron_eigen(const Eigen::MatrixXd& g, double tol = 1e-13,
                        std::size_t max_iterations = 100000);
PerronPair perron_eigen(const ChainModel& chain);

/// The dual chain with respect to m: G_hat[y][x] = m[x] G[x][y] / m[y].
ChainModel dual_chain(const ChainModel& chain);

/// psi^{-1} G (psi .) - lambda, without any eigen check.
Eigen::MatrixXd conjugate_generator(const Eigen::MatrixXd& g, const Eigen::VectorXd& psi,
                                    double lambda);

/// h-transform of a chain. Checks G psi = lambda psi and takes psi_hat to be the Perron vector
/// of the dual chain (normalised psi_hat[0] = 1). Throws EigenPreconditionError.
ChainModel chain_h_transform(const ChainModel& chain, const Eigen::VectorXd& psi, double lambda);
/// Same with an explicit dual eigenvector.
ChainModel chain_h_transform(const ChainModel& chain, const Eigen::VectorXd& psi,
                             const Eigen::VectorXd& psi_hat, double lambda);

/// v[z] = P_s[x][z] P_{t-s}[z][y] / P_t[x][y].
Eigen::VectorXd chain_bridge_distribution(const ChainModel& chain, std::size_t x, double t,
                                          std::size_t y, double s);

struct BridgePoint {
  std::size_t x;
  double t;
  std::size_t y;
  double s;
};

/// Cartesian product of the given states, horizons and fractions of the horizon.
std::vector<BridgePoint> bridge_grid(std::span<const std::size_t> xs, std::span<const double> ts,
                                     std::span<const std::size_t> ys,
                                     std::span<const double> s_fractions);

struct BridgeComparison {
  bool equal = true;
  double max_deviation = 0.0;
  BridgePoint worst{};
};

BridgeComparison bridges_equal(const ChainModel& a, const ChainModel& b,
                               std::span<const BridgePoint> grid, double tol);

struct Recovery {
  Eigen::VectorXd psi;
  Eigen::VectorXd psi_hat;
  double lambda = 0.0;
  bool verified = false;
  std::string diagnostic;
  double bridge_deviation = 0.0;      // single-bridge mismatch between the chains
  double ratio_spread = 0.0;          // s-dependence of psi_0 / psi_s
  double lambda_spread = 0.0;         // variation of lambda_s / s
  double measure_deviation = 0.0;     // m_Q vs psi psi_hat m_P
  double transition_deviation = 0.0;  // h-transform of P vs Q
};

/// Recovers (psi, psi_hat, lambda) from one shared bridge (x0, t0, y0) and checks that the
/// h-transform of P by them is Q. Throws LinearityViolationError if lambda_s / s is not
/// constant over the s-grid.
Recovery recover_from_single_bridge(const ChainModel& p, const ChainModel& q, std::size_t x0,
                                    double t0, std::size_t y0);

/// The chain as a TransitionKernel on the finite measure m: p_t(x, y) = P_t[x][y] / m[y].
TransitionKernel chain_kernel(const ChainModel& chain);

}  // namespace bridgekit
