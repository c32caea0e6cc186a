#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "json.hpp"

#include "bridgekit/path.hpp"
#include "bridgekit/quadrature.hpp"
#include "bridgekit/rng.hpp"

namespace bridgekit {

enum class TestMethod { ks, energy };

std::string to_string(TestMethod method);

/// Outcome of a two-sample comparison.
struct TestReport {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  TestMethod method = TestMethod::ks;
  std::uint64_t seed = 0;
};

/// {"method", "statistic", "p_value", "n_a", "n_b", "seed"}.
void to_json(nlohmann::json& j, const TestReport& report);

/// Survival function of the Kolmogorov distribution, P(K > x).
double kolmogorov_sf(double x);

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value (effective size
/// n_a n_b / (n_a + n_b), small-sample correction of Stephens). Needs n_a, n_b >= 50.
TestReport ks_two_sample(std::span<const double> a, std::span<const double> b,
                         std::uint64_t seed = 0);

/// Same statistic, p-value by relabelling the pooled sample; permutation i uses stream
/// (domain, i) of `policy`.
TestReport ks_permutation_test(std::span<const double> a, std::span<const double> b,
                               int n_permutations, const RngPolicy& policy,
                               std::uint32_t domain = 0x4B53u);

/// Energy-distance test on the grid-value vectors of two path pools, scaled by
/// n_a n_b / (n_a + n_b). p = (1 + #{permuted >= observed}) / (1 + n_permutations).
/// Throws GridMismatchError when the pools use different grids.
TestReport energy_distance_test(const PathPool& a, const PathPool& b, int n_permutations,
                                const RngPolicy& policy, std::uint32_t domain = 0xE5u);

/// Total-variation distance between binned sample frequencies on [lo, hi] and the density's
/// bin masses; mass outside the window forms one more cell on both sides.
double histogram_tv(std::span<const double> samples, const RealFunction& density, int bins,
                    double lo, double hi, const Quadrature& q = {});

struct MeanEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Sample mean and sqrt(sample variance / n); needs n >= 2.
MeanEstimate mc_mean_with_se(std::span<const double> samples);

}  // namespace bridgekit
