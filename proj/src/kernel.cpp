#include "bridgekit/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bridgekit/errors.hpp"

namespace bridgekit {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_state(const ReferenceMeasure& m, double x, const char* which) {
  if (!m.contains(x)) {
    std::ostringstream msg;
    msg << "state " << which << "=" << x << " is outside the support";
    throw DomainError(msg.str());
  }
}

}  // namespace

ReferenceMeasure ReferenceMeasure::lebesgue(Interval support) {
  ReferenceMeasure m;
  m.kind_ = Kind::lebesgue_with_density;
  m.support_ = support;
  m.label_ = "lebesgue";
  return m;
}

ReferenceMeasure ReferenceMeasure::with_density(Interval support, RealFunction density,
                                                std::string label) {
  if (!density) throw DomainError("reference measure density must be callable");
  ReferenceMeasure m;
  m.kind_ = Kind::lebesgue_with_density;
  m.support_ = support;
  m.density_ = std::move(density);
  m.label_ = std::move(label);
  return m;
}

ReferenceMeasure ReferenceMeasure::finite(std::vector<double> weights) {
  if (weights.empty()) throw DomainError("finite reference measure needs at least one state");
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("reference weights must be positive");
  }
  ReferenceMeasure m;
  m.kind_ = Kind::finite_weights;
  m.support_ = Interval{0.0, static_cast<double>(weights.size() - 1), true, true};
  m.weights_ = std::move(weights);
  m.label_ = "finite";
  return m;
}

bool ReferenceMeasure::contains(double x) const {
  if (kind_ == Kind::finite_weights) {
    return x >= 0.0 && x == std::floor(x) && x < static_cast<double>(weights_.size());
  }
  return support_.contains(x);
}

double ReferenceMeasure::density(double x) const {
  if (kind_ == Kind::finite_weights) {
    if (!contains(x)) throw DomainError("state is not in the finite state set");
    return weights_[static_cast<std::size_t>(x)];
  }
  return density_ ? density_(x) : 1.0;
}

Eigenpair trivial_eigenpair() {
  Eigenpair e;
  e.psi = [](double) { return 1.0; };
  e.psi_hat = e.psi;
  e.lambda = 0.0;
  e.label = "constant";
  e.exp_terms = {{1.0, 0.0}};
  return e;
}

Eigenpair inverse(const Eigenpair& eig) {
  Eigenpair inv;
  inv.psi = [psi = eig.psi](double x) { return 1.0 / psi(x); };
  inv.psi_hat = [psi_hat = eig.psi_hat](double x) { return 1.0 / psi_hat(x); };
  inv.lambda = -eig.lambda;
  inv.label = "inverse(" + eig.label + ")";
  if (eig.exp_terms.size() == 1) {
    inv.exp_terms = {{1.0 / eig.exp_terms[0].coefficient, -eig.exp_terms[0].rate}};
  }
  return inv;
}

TransitionKernel::TransitionKernel(std::string id, ReferenceMeasure measure, DensityFn density,
                                   Options options)
    : id_(std::move(id)),
      measure_(std::move(measure)),
      density_(std::move(density)),
      family_(std::move(options.family)),
      dual_(std::move(options.dual)),
      self_dual_(options.self_dual),
      breakpoints_(std::move(options.breakpoints)) {
  if (!density_) throw DomainError("kernel density must be callable");
  std::sort(breakpoints_.begin(), breakpoints_.end());
}

double TransitionKernel::density(double t, double x, double y) const {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("transition time must be > 0");
  check_state(measure_, x, "x");
  check_state(measure_, y, "y");
  return density_(t, x, y);
}

double TransitionKernel::dual_density(double t, double x, double y) const {
  if (dual_ && !self_dual_) {
    if (!(t > 0.0)) throw DomainError("transition time must be > 0");
    check_state(measure_, x, "x");
    check_state(measure_, y, "y");
    return (*dual_)(t, x, y);
  }
  return density(t, y, x);
}

double density(const TransitionKernel& kernel, double t, double x, double y) {
  return kernel.density(t, x, y);
}

double one_sided_density(const TransitionKernel& kernel, double t, double x, int side,
                         double y) {
  if (side == 0) throw DomainError("side must be +1 or -1");
  const double toward = side > 0 ? std::numeric_limits<double>::infinity()
                                 : -std::numeric_limits<double>::infinity();
  return kernel.density(t, std::nextafter(x, toward), y);
}

TransitionKernel h_transform(const TransitionKernel& kernel, const Eigenpair& eig,
                             std::string id) {
  if (!eig.psi || !eig.psi_hat) throw DomainError("eigenpair functions must be callable");
  auto base = std::make_shared<const TransitionKernel>(kernel);
  const double lambda = eig.lambda;

  ReferenceMeasure measure = [&] {
    if (kernel.measure().kind() == ReferenceMeasure::Kind::finite_weights) {
      std::vector<double> w(kernel.measure().weights().begin(), kernel.measure().weights().end());
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double x = static_cast<double>(i);
        w[i] *= eig.psi(x) * eig.psi_hat(x);
      }
      return ReferenceMeasure::finite(std::move(w));
    }
    auto rho = [base, psi = eig.psi, psi_hat = eig.psi_hat](double x) {
      return base->measure().density(x) * psi(x) * psi_hat(x);
    };
    return ReferenceMeasure::with_density(kernel.measure().support(), rho,
                                          kernel.measure().label() + "*psi*psi_hat");
  }();

  auto q = [base, psi = eig.psi, psi_hat = eig.psi_hat, lambda](double t, double x, double y) {
    return std::exp(-lambda * t) * base->density(t, x, y) / (psi(x) * psi_hat(y));
  };

  TransitionKernel::Options opts;
  opts.family = HTransformFamily{base, eig};
  opts.self_dual = kernel.self_dual();
  opts.breakpoints.assign(kernel.breakpoints().begin(), kernel.breakpoints().end());
  if (!kernel.self_dual()) {
    // The dual transforms with the roles of psi and psi_hat exchanged.
    opts.dual = [base, psi = eig.psi, psi_hat = eig.psi_hat, lambda](double t, double x,
                                                                      double y) {
      return std::exp(-lambda * t) * base->dual_density(t, x, y) / (psi_hat(x) * psi(y));
    };
  }
  if (id.empty()) id = "h(" + kernel.id() + "," + eig.label + ")";
  return TransitionKernel(std::move(id), std::move(measure), std::move(q), std::move(opts));
}

Window mass_window(const TransitionKernel& kernel, double t, double x) {
  const double scale = std::sqrt(t);
  return std::visit(
      Overloaded{
          [&](const HTransformFamily& h) {
            Window w = mass_window(*h.base, t, x);
            for (const ExpTerm& term : h.eig.exp_terms) w.centers.push_back(x + term.rate * t);
            return w;
          },
          [&](const FlippedBesselFamily&) {
            return x == 0.0 ? Window{{0.0}, scale} : Window{{x, -x}, scale};
          },
          [&](const auto&) { return Window{{x}, scale}; },
      },
      kernel.family());
}

Window bridge_window(const TransitionKernel& kernel, double x, double s, double t, double y) {
  const double scale = std::max(std::sqrt(s * (t - s) / t), 1e-300);
  return std::visit(
      Overloaded{
          [&](const HTransformFamily& h) { return bridge_window(*h.base, x, s, t, y); },
          [&](const FlippedBesselFamily&) {
            const double a = std::abs(x) + (std::abs(y) - std::abs(x)) * s / t;
            return a == 0.0 ? Window{{0.0}, scale} : Window{{a, -a}, scale};
          },
          [&](const auto&) { return Window{{x + (y - x) * s / t}, scale}; },
      },
      kernel.family());
}

QuadratureResult integrate_measure(const TransitionKernel& kernel, const RealFunction& f,
                                   const Window& window, const Quadrature& q,
                                   std::optional<Interval> range) {
  const ReferenceMeasure& m = kernel.measure();
  if (m.kind() == ReferenceMeasure::Kind::finite_weights) {
    QuadratureResult r;
    for (std::size_t i = 0; i < m.weights().size(); ++i) {
      const double x = static_cast<double>(i);
      if (range && !range->contains(x)) continue;
      r.value += f(x) * m.weights()[i];
      ++r.evaluations;
    }
    return r;
  }
  Interval domain = m.support();
  if (range) {
    if (range->lo > domain.lo) {
      domain.lo = range->lo;
      domain.lo_closed = range->lo_closed;
    }
    if (range->hi < domain.hi) {
      domain.hi = range->hi;
      domain.hi_closed = range->hi_closed;
    }
    if (!(domain.hi > domain.lo)) return {};
  }
  auto integrand = [&](double y) { return f(y) * m.density(y); };
  return integrate_windowed(integrand, domain, window, kernel.breakpoints(), q);
}

}  // namespace bridgekit
