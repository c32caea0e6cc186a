#include "bridgekit/catalog.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "bridgekit/errors.hpp"

namespace bridgekit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double gaussian_density(double t, double x, double y) {
  const double d = y - x;
  return std::exp(-d * d / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t);
}

// log(sinh(u) / u) for u >= 0.
double log_sinhc(double u) {
  if (u < 1e-4) return u * u / 6.0;
  if (u < 20.0) return std::log(std::sinh(u) / u);
  return u - std::log(2.0 * u) + std::log1p(-std::exp(-2.0 * u));
}

double parse_real(std::string_view text, std::string_view id) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw std::invalid_argument("malformed number '" + std::string(text) + "' in kernel id '" +
                                std::string(id) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

double log_bessel3_density(double t, double x, double y) {
  // b_t(x,y) = (2/t) (2 pi t)^{-1/2} exp(-(x^2+y^2)/2t) sinh(xy/t) / (xy/t)
  return std::log(2.0 / t) - 0.5 * std::log(2.0 * std::numbers::pi * t) -
         (x * x + y * y) / (2.0 * t) + log_sinhc(x * y / t);
}

double bessel3_density(double t, double x, double y) { return std::exp(log_bessel3_density(t, x, y)); }

double parity_weight(double t, bool same) {
  const double odd = -0.5 * std::expm1(-2.0 * t);
  return same ? 1.0 - odd : odd;
}

int flip_sign(FlipVariant variant, double x) {
  if (variant == FlipVariant::X) return x >= 0.0 ? 1 : -1;
  return x > 0.0 ? 1 : -1;
}

TransitionKernel gaussian_kernel() {
  TransitionKernel::Options opts;
  opts.family = GaussianFamily{};
  opts.self_dual = true;
  return TransitionKernel("gaussian", ReferenceMeasure::lebesgue(Interval{}), gaussian_density,
                          std::move(opts));
}

Eigenpair cosh_eigenpair(double k, double c) {
  Eigenpair e;
  const double norm = std::cosh(c);
  e.psi = [k, c, norm](double x) { return std::cosh(k * x + c) / norm; };
  e.psi_hat = e.psi;
  e.lambda = 0.5 * k * k;
  e.label = "cosh(" + std::to_string(k) + "x+" + std::to_string(c) + ")";
  const double a = std::exp(c) / (2.0 * norm);
  const double b = std::exp(-c) / (2.0 * norm);
  e.exp_terms = {{a, k}, {b, -k}};
  return e;
}

Eigenpair exp_eigenpair(double k) {
  Eigenpair e;
  e.psi = [k](double x) { return std::exp(k * x); };
  e.psi_hat = e.psi;
  e.lambda = 0.5 * k * k;
  e.label = "exp(" + std::to_string(k) + "x)";
  e.exp_terms = {{1.0, k}};
  return e;
}

Eigenpair bessel3_eigenpair(double k) {
  if (!(k > 0.0)) throw DomainError("bessel3 eigenpair needs k > 0");
  Eigenpair e;
  e.psi = [k](double x) { return std::exp(log_sinhc(k * std::abs(x))); };
  e.psi_hat = e.psi;
  e.lambda = 0.5 * k * k;
  e.label = "sinh(" + std::to_string(k) + "|x|)/(" + std::to_string(k) + "|x|)";
  return e;
}

TransitionKernel constant_drift_kernel(double k) {
  if (!std::isfinite(k)) throw DomainError("drift must be finite");
  return h_transform(gaussian_kernel(), exp_eigenpair(k), "drift:" + std::to_string(k));
}

TransitionKernel tanh_drift_kernel(double k, double c) {
  if (!std::isfinite(k) || !std::isfinite(c)) throw DomainError("tanh drift parameters must be finite");
  return h_transform(gaussian_kernel(), cosh_eigenpair(k, c),
                     "tanh:" + std::to_string(k) + ":" + std::to_string(c));
}

TransitionKernel bessel3_kernel() {
  TransitionKernel::Options opts;
  opts.family = Bessel3Family{};
  opts.self_dual = true;
  auto measure = ReferenceMeasure::with_density(Interval{0.0, kInf, true, false},
                                                [](double y) { return y * y; }, "y^2 dy");
  return TransitionKernel("bessel3", std::move(measure), bessel3_density, std::move(opts));
}

TransitionKernel flipped_bessel_kernel(FlipVariant variant) {
  TransitionKernel::Options opts;
  opts.family = FlippedBesselFamily{variant};
  opts.self_dual = true;
  opts.breakpoints = {0.0};
  auto measure =
      ReferenceMeasure::with_density(Interval{}, [](double y) { return y * y; }, "x^2 dx");
  auto p = [variant](double t, double x, double y) {
    const bool same = flip_sign(variant, x) == flip_sign(variant, y);
    return parity_weight(t, same) * bessel3_density(t, std::abs(x), std::abs(y));
  };
  return TransitionKernel(variant == FlipVariant::X ? "flipbessel:X" : "flipbessel:Y",
                          std::move(measure), p, std::move(opts));
}

CatalogEntry parse_kernel_id(std::string_view id) {
  const auto parts = split(id, ':');
  const std::string_view head = parts.front();
  auto expect = [&](std::size_t n) {
    if (parts.size() != n) {
      throw std::invalid_argument("kernel id '" + std::string(id) + "' has the wrong number of fields");
    }
  };
  if (head == "gaussian") {
    expect(1);
    return {"gaussian", gaussian_kernel(), RealFunction([](double) { return 0.0; }),
            {trivial_eigenpair(), cosh_eigenpair(1.0, 0.0), exp_eigenpair(1.0)}};
  }
  if (head == "drift") {
    expect(2);
    const double k = parse_real(parts[1], id);
    return {std::string(id), constant_drift_kernel(k), RealFunction([k](double) { return k; }),
            {trivial_eigenpair(), inverse(exp_eigenpair(k))}};
  }
  if (head == "tanh") {
    expect(3);
    const double k = parse_real(parts[1], id);
    const double c = parse_real(parts[2], id);
    return {std::string(id), tanh_drift_kernel(k, c),
            RealFunction([k, c](double x) { return k * std::tanh(k * x + c); }),
            {trivial_eigenpair(), inverse(cosh_eigenpair(k, c))}};
  }
  if (head == "bessel3") {
    expect(1);
    return {"bessel3", bessel3_kernel(), std::nullopt,
            {trivial_eigenpair(), bessel3_eigenpair(1.0)}};
  }
  if (head == "flipbessel") {
    expect(2);
    if (parts[1] != "X" && parts[1] != "Y") {
      throw std::invalid_argument("flipbessel variant must be X or Y");
    }
    const FlipVariant v = parts[1] == "X" ? FlipVariant::X : FlipVariant::Y;
    return {std::string(id), flipped_bessel_kernel(v), std::nullopt,
            {trivial_eigenpair(), bessel3_eigenpair(1.0)}};
  }
  throw std::invalid_argument("unknown kernel id '" + std::string(id) + "'");
}

}  // namespace bridgekit
