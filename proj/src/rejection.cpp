#include "bridgekit/rejection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "bridgekit/errors.hpp"

namespace bridgekit {

namespace {

constexpr int kCoarsePoints = 64;
constexpr int kScanPoints = 256;
constexpr double kSpreadInflation = 1.5;
constexpr double kEnvelopeSlack = 1.1;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Moments {
  double log_mass = kNegInf;
  double mean = 0.0;
  double sd = 0.0;
};

// Cell-midpoint moments of exp(log_f) over [lo, hi].
Moments coarse_moments(const std::function<double(double)>& log_f, double lo, double hi) {
  const double dx = (hi - lo) / kCoarsePoints;
  std::vector<double> z(kCoarsePoints);
  std::vector<double> lf(kCoarsePoints);
  double peak = kNegInf;
  for (int i = 0; i < kCoarsePoints; ++i) {
    z[i] = lo + (i + 0.5) * dx;
    lf[i] = log_f(z[i]);
    if (std::isnan(lf[i])) lf[i] = kNegInf;
    peak = std::max(peak, lf[i]);
  }
  Moments m;
  if (peak == kNegInf) return m;
  double w_sum = 0.0;
  double first = 0.0;
  for (int i = 0; i < kCoarsePoints; ++i) {
    const double w = std::exp(lf[i] - peak);
    w_sum += w;
    first += w * z[i];
  }
  m.mean = first / w_sum;
  double second = 0.0;
  for (int i = 0; i < kCoarsePoints; ++i) {
    const double d = z[i] - m.mean;
    second += std::exp(lf[i] - peak) * d * d;
  }
  m.sd = std::max(std::sqrt(second / w_sum), 0.5 * dx);
  m.log_mass = peak + std::log(w_sum * dx);
  return m;
}

std::pair<double, double> clip(double lo, double hi, const Interval& support) {
  return {std::max(lo, support.lo), std::min(hi, support.hi)};
}

}  // namespace

RejectionSampler::RejectionSampler(std::function<double(double)> log_density, Interval support,
                                   const Window& hint)
    : log_density_(std::move(log_density)), support_(support) {
  if (hint.centers.empty() || !(hint.scale > 0.0)) {
    throw DomainError("rejection sampler needs a window with a centre and positive scale");
  }
  std::vector<double> centers = hint.centers;
  std::sort(centers.begin(), centers.end());
  centers.erase(std::unique(centers.begin(), centers.end()), centers.end());

  std::vector<double> log_masses;
  for (double c : centers) {
    auto [lo, hi] = clip(c - 8.0 * hint.scale, c + 8.0 * hint.scale, support_);
    if (!(hi > lo)) continue;
    Moments m = coarse_moments(log_density_, lo, hi);
    if (m.log_mass == kNegInf) continue;
    // Second pass centred on the first estimate.
    std::tie(lo, hi) = clip(m.mean - 8.0 * m.sd, m.mean + 8.0 * m.sd, support_);
    if (hi > lo) {
      Moments refined = coarse_moments(log_density_, lo, hi);
      if (refined.log_mass != kNegInf) m = refined;
    }
    means_.push_back(m.mean);
    sds_.push_back(kSpreadInflation * m.sd);
    log_masses.push_back(m.log_mass);
  }
  if (means_.empty()) {
    throw RejectionBudgetExceeded("target density vanishes on every hinted window", 0.0);
  }
  const double top = *std::max_element(log_masses.begin(), log_masses.end());
  double total = 0.0;
  for (double lm : log_masses) {
    weights_.push_back(std::exp(lm - top));
    total += weights_.back();
  }
  for (double& w : weights_) w /= total;

  double worst = kNegInf;
  for (std::size_t j = 0; j < means_.size(); ++j) {
    auto [lo, hi] = clip(means_[j] - 6.0 * sds_[j], means_[j] + 6.0 * sds_[j], support_);
    const double dx = (hi - lo) / kScanPoints;
    for (int i = 0; i < kScanPoints; ++i) {
      const double z = lo + (i + 0.5) * dx;
      const double lf = log_density_(z);
      if (!std::isfinite(lf)) continue;
      worst = std::max(worst, lf - log_proposal(z));
    }
  }
  log_envelope_ = worst + std::log(kEnvelopeSlack);
}

double RejectionSampler::log_proposal(double z) const {
  double sum = 0.0;
  for (std::size_t j = 0; j < means_.size(); ++j) {
    const double d = (z - means_[j]) / sds_[j];
    sum += weights_[j] * std::exp(-0.5 * d * d) / (sds_[j] * std::sqrt(2.0 * std::numbers::pi));
  }
  return std::log(sum);
}

double RejectionSampler::operator()(Philox4x32& rng, int budget) const {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  std::discrete_distribution<std::size_t> pick(weights_.begin(), weights_.end());
  for (int attempt = 0; attempt < budget; ++attempt) {
    const std::size_t j = weights_.size() == 1 ? 0 : pick(rng);
    const double z = means_[j] + sds_[j] * normal(rng);
    if (!support_.contains(z)) continue;
    const double lf = log_density_(z);
    if (!(lf > kNegInf)) continue;
    if (std::log(uniform(rng)) < lf - log_envelope_ - log_proposal(z)) return z;
  }
  std::ostringstream msg;
  msg << "rejection sampler exhausted its budget of " << budget << " proposals";
  throw RejectionBudgetExceeded(msg.str(), 0.0);
}

}  // namespace bridgekit
