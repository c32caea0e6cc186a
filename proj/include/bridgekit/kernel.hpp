#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bridgekit/quadrature.hpp"

namespace bridgekit {

/// Reference measure m on a real interval (Lebesgue times a positive density) or on a finite
/// state set (positive weights indexed 0..n-1).
class ReferenceMeasure {
 public:
  enum class Kind { lebesgue_with_density, finite_weights };

  static ReferenceMeasure lebesgue(Interval support);
  static ReferenceMeasure with_density(Interval support, RealFunction density, std::string label);
  static ReferenceMeasure finite(std::vector<double> weights);

  Kind kind() const { return kind_; }
  const Interval& support() const { return support_; }
  const std::string& label() const { return label_; }
  bool is_plain_lebesgue() const { return kind_ == Kind::lebesgue_with_density && !density_; }

  bool contains(double x) const;
  /// Density of m with respect to Lebesgue (or the weight of state x for finite measures).
  double density(double x) const;
  std::span<const double> weights() const { return weights_; }

 private:
  ReferenceMeasure() = default;

  Kind kind_ = Kind::lebesgue_with_density;
  Interval support_;
  RealFunction density_;  // empty means density 1
  std::vector<double> weights_;
  std::string label_;
};

/// psi(x) = sum_i coefficient_i * exp(rate_i * x); lets h-transforms of the Gaussian kernel be
/// sampled exactly as Gaussian mixtures.
struct ExpTerm {
  double coefficient;
  double rate;
};

/// Positive eigenfunctions psi (semigroup) and psi_hat (dual semigroup) sharing the eigenvalue
/// lambda: P_t psi = exp(lambda t) psi.
struct Eigenpair {
  RealFunction psi;
  RealFunction psi_hat;
  double lambda = 0.0;
  std::string label;
  /// Optional exponential-sum form of psi (only set when psi_hat == psi).
  std::vector<ExpTerm> exp_terms;
};

Eigenpair trivial_eigenpair();
/// (1/psi, 1/psi_hat, -lambda): undoes an h-transform.
Eigenpair inverse(const Eigenpair& eig);

class TransitionKernel;

struct GaussianFamily {};
struct HTransformFamily {
  std::shared_ptr<const TransitionKernel> base;
  Eigenpair eig;
};
struct Bessel3Family {};
enum class FlipVariant { X, Y };
struct FlippedBesselFamily {
  FlipVariant variant;
};
struct CustomFamily {};

/// Structural provenance of a kernel; samplers and integration windows dispatch on it.
using KernelFamily =
    std::variant<CustomFamily, GaussianFamily, HTransformFamily, Bessel3Family, FlippedBesselFamily>;

/// Transition density p_t(x, y) with respect to the kernel's own reference measure.
class TransitionKernel {
 public:
  using DensityFn = std::function<double(double t, double x, double y)>;

  struct Options {
    KernelFamily family = CustomFamily{};
    std::optional<DensityFn> dual;
    bool self_dual = false;
    /// Points where y -> p_t(x, y) may jump (the flipped Bessel kernel jumps at 0).
    std::vector<double> breakpoints;
  };

  TransitionKernel(std::string id, ReferenceMeasure measure, DensityFn density, Options options);

  const std::string& id() const { return id_; }
  const ReferenceMeasure& measure() const { return measure_; }
  const KernelFamily& family() const { return family_; }
  bool self_dual() const { return self_dual_; }
  std::span<const double> breakpoints() const { return breakpoints_; }

  /// p_t(x, y); throws DomainError if t <= 0 or a state is off the support.
  double density(double t, double x, double y) const;
  /// Dual density; the transpose p_t(y, x) when no explicit dual was supplied.
  double dual_density(double t, double x, double y) const;

 private:
  std::string id_;
  ReferenceMeasure measure_;
  DensityFn density_;
  KernelFamily family_;
  std::optional<DensityFn> dual_;
  bool self_dual_;
  std::vector<double> breakpoints_;
};

/// p_t(x, y).
double density(const TransitionKernel& kernel, double t, double x, double y);

/// Limit of p_t(x', y) as x' -> x from the given side (+1 right, -1 left).
double one_sided_density(const TransitionKernel& kernel, double t, double x, int side, double y);

/// Doob h-transform: q_t(x,y) = exp(-lambda t) p_t(x,y) / (psi(x) psi_hat(y)) with respect to the
/// measure psi * psi_hat * m. Equivalently Q_t(x,dy) = exp(-lambda t) psi(y)/psi(x) P_t(x,dy).
TransitionKernel h_transform(const TransitionKernel& kernel, const Eigenpair& eig,
                             std::string id = {});

/// Integration window covering the bulk of y -> p_t(x, y) m(dy).
Window mass_window(const TransitionKernel& kernel, double t, double x);

/// Integration window covering the bridge marginal at time s of the (x, t, y)-bridge.
Window bridge_window(const TransitionKernel& kernel, double x, double s, double t, double y);

/// Integral of f against the kernel's reference measure, restricted to `range` when given.
QuadratureResult integrate_measure(const TransitionKernel& kernel, const RealFunction& f,
                                   const Window& window, const Quadrature& q,
                                   std::optional<Interval> range = std::nullopt);

}  // namespace bridgekit
