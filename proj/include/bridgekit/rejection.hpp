#pragma once

#include <functional>
#include <vector>

#include "bridgekit/quadrature.hpp"
#include "bridgekit/rng.hpp"

namespace bridgekit {

/// Rejection sampler for an unnormalised one-dimensional log-density.
///
/// For every window centre a coarse 64-point grid estimates the local mass, mean and spread;
/// the proposal is the resulting Gaussian mixture with spreads inflated by 1.5, and the envelope
/// constant is the largest target/proposal ratio over a 256-point scan per component (plus 10%).
/// Throws RejectionBudgetExceeded after `budget` proposals without an acceptance.
class RejectionSampler {
 public:
  RejectionSampler(std::function<double(double)> log_density, Interval support,
                   const Window& hint);

  double operator()(Philox4x32& rng, int budget = 10000) const;

  double envelope_log() const { return log_envelope_; }
  /// Number of mixture components actually used.
  std::size_t components() const { return means_.size(); }

 private:
  double log_proposal(double z) const;

  std::function<double(double)> log_density_;
  Interval support_;
  std::vector<double> weights_;
  std::vector<double> means_;
  std::vector<double> sds_;
  double log_envelope_ = 0.0;
};

}  // namespace bridgekit
