#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

#include "bridgekit/bridge.hpp"
#include "bridgekit/catalog.hpp"
#include "bridgekit/errors.hpp"
#include "bridgekit/sde.hpp"
#include "bridgekit/stats.hpp"

using namespace bridgekit;

namespace {

std::vector<double> normals(std::size_t n, double mean, std::uint64_t seed, std::uint64_t stream = 0) {
  Philox4x32 rng(seed, stream);
  std::normal_distribution<double> d(mean, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// One-sample Kolmogorov distance to a continuous CDF.
template <class Cdf>
double ks_distance(std::vector<double> v, Cdf cdf) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = cdf(v[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks99(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

double to_unit(std::uint64_t v) { return static_cast<double>(v >> 11) * 0x1.0p-53; }

}  // namespace

TEST_SUITE("stats") {
  TEST_CASE("kolmogorov survival function") {
    // Tabulated values of the Kolmogorov distribution.
    CHECK(kolmogorov_sf(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-10));
    CHECK(kolmogorov_sf(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-10));
    CHECK(kolmogorov_sf(1.36) == doctest::Approx(0.04939).epsilon(1e-3));
    CHECK(kolmogorov_sf(2.0) == doctest::Approx(0.0006709252557796953).epsilon(1e-8));
    CHECK(kolmogorov_sf(0.0) == 1.0);
    CHECK(kolmogorov_sf(10.0) < 1e-80);
  }

  TEST_CASE("ks two sample basics") {
    const auto a = normals(1000, 0.0, 1);
    const auto r = ks_two_sample(a, a, 5);
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == 1.0);
    CHECK(r.seed == 5);
    CHECK(r.method == TestMethod::ks);
    const std::vector<double> small(49, 0.0);
    CHECK_THROWS_AS(ks_two_sample(small, a), InsufficientSampleError);
    // Statistic by hand on a tiny shifted pair.
    std::vector<double> x(50), y(50);
    for (int i = 0; i < 50; ++i) {
      x[i] = i;
      y[i] = i + 10.5;
    }
    CHECK(ks_two_sample(x, y).statistic == doctest::Approx(11.0 / 50.0));
  }

  TEST_CASE("ks null calibration and power") {
    int rejections = 0;
    for (std::uint64_t rep = 0; rep < 200; ++rep) {
      const auto a = normals(10000, 0.0, 100 + rep, 0);
      const auto b = normals(10000, 0.0, 100 + rep, 1);
      const auto r = ks_two_sample(a, b);
      CHECK(r.p_value >= 0.0);
      CHECK(r.p_value <= 1.0);
      if (r.p_value < 0.05) ++rejections;
    }
    const double rate = rejections / 200.0;
    CHECK(rate >= 0.02);
    CHECK(rate <= 0.09);
    CHECK(ks_two_sample(normals(10000, 0.0, 1), normals(10000, 0.5, 2)).p_value < 1e-6);
  }

  TEST_CASE("ks permutation p-value agrees with the asymptotic one") {
    const auto a = normals(400, 0.0, 3);
    const auto b = normals(400, 0.15, 4);
    const auto asym = ks_two_sample(a, b);
    const auto perm = ks_permutation_test(a, b, 2000, RngPolicy(7));
    CHECK(perm.statistic == asym.statistic);
    CHECK(perm.p_value == doctest::Approx(asym.p_value).epsilon(0.3));
  }

  TEST_CASE("energy test") {
    const auto grid = uniform_grid(1.0, 9);
    const BridgeSpec gauss{gaussian_kernel(), 0.0, 1.0, 0.0};
    const auto a = sample_bridges(gauss, grid, 800, RngPolicy(7), 1, 1);
    const auto same = energy_distance_test(a, a, 200, RngPolicy(7));
    CHECK(same.p_value > 0.99);
    CHECK(same.statistic == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(same.method == TestMethod::energy);

    const auto b = sample_bridges(BridgeSpec{tanh_drift_kernel(1.0, 0.0), 0.0, 1.0, 0.0}, grid, 800, RngPolicy(7), 2, 1);
    CHECK(energy_distance_test(a, b, 300, RngPolicy(7)).p_value > 0.01);

    const auto drift = sample_paths(constant_drift_kernel(1.0), 0.0, grid, 800, RngPolicy(7), 3, 1);
    CHECK(energy_distance_test(a, drift, 300, RngPolicy(7)).p_value < 0.01);

    const auto other = sample_bridges(gauss, uniform_grid(1.0, 5), 800, RngPolicy(7), 4, 1);
    CHECK_THROWS_AS(energy_distance_test(a, other, 300, RngPolicy(7)), GridMismatchError);
    CHECK_THROWS_AS(energy_distance_test(a, b, 100, RngPolicy(7)), DomainError);
  }

  TEST_CASE("energy statistic matches a direct computation") {
    PathPool a, b;
    a.times = b.times = {0.0, 1.0};
    a.values = {0.0, 1.0, 0.5, -1.0, 2.0, 0.0};
    a.draws = 3;
    b.values = {1.0, 1.0, -0.5, 0.5};
    b.draws = 2;
    auto dist = [](std::span<const double> u, std::span<const double> v) {
      return std::hypot(u[0] - v[0], u[1] - v[1]);
    };
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 2; ++j) ab += dist(a.draw(i), b.draw(j));
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) aa += dist(a.draw(i), a.draw(j));
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) bb += dist(b.draw(i), b.draw(j));
    const double expected = 3.0 * 2.0 / 5.0 * (2.0 * ab / 6.0 - aa / 9.0 - bb / 4.0);
    CHECK(energy_distance_test(a, b, 200, RngPolicy(1)).statistic == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("energy null calibration") {
    const auto grid = uniform_grid(1.0, 3);
    const BridgeSpec gauss{gaussian_kernel(), 0.0, 1.0, 0.0};
    int rejections = 0;
    for (std::uint32_t rep = 0; rep < 1000; ++rep) {
      const auto a = sample_bridges(gauss, grid, 100, RngPolicy(10000 + rep), 1, 1);
      const auto b = sample_bridges(gauss, grid, 100, RngPolicy(10000 + rep), 2, 1);
      if (energy_distance_test(a, b, 200, RngPolicy(10000 + rep)).p_value < 0.05) ++rejections;
    }
    // Binomial(1000, 0.05) has standard deviation 6.9.
    CHECK(rejections >= 30);
    CHECK(rejections <= 70);
  }

  TEST_CASE("reports are deterministic and serialise") {
    const auto grid = uniform_grid(1.0, 5);
    const BridgeSpec spec{gaussian_kernel(), 0.0, 1.0, 0.0};
    const auto a = sample_bridges(spec, grid, 300, RngPolicy(7), 1, 1);
    const auto b = sample_bridges(spec, grid, 300, RngPolicy(7), 2, 2);
    const auto r1 = energy_distance_test(a, b, 200, RngPolicy(7));
    const auto r2 = energy_distance_test(a, b, 200, RngPolicy(7));
    CHECK(r1.statistic == r2.statistic);
    CHECK(r1.p_value == r2.p_value);
    nlohmann::json j = r1;
    CHECK(j["method"] == "energy");
    CHECK(j["n_a"] == 300);
    CHECK(j.contains("statistic"));
    CHECK(j.contains("p_value"));
    CHECK(j["seed"] == 7);
    CHECK(to_string(TestMethod::ks) == "ks");
  }

  TEST_CASE("histogram total variation") {
    const auto pdf = [](double x) { return oracle::normal_pdf(x, 0.0, 1.0); };
    // Point mass against a density: TV is one minus the density mass of the occupied bin.
    const std::vector<double> zeros(1000, 0.1);
    const double occupied = oracle::normal_cdf(0.2, 0, 1) - oracle::normal_cdf(0.0, 0, 1);
    CHECK(histogram_tv(zeros, pdf, 20, -2.0, 2.0) == doctest::Approx(1.0 - occupied).epsilon(1e-9));
    CHECK(histogram_tv(zeros, pdf, 400, -2.0, 2.0) > 0.98);
    CHECK(histogram_tv(normals(10000, 0.0, 9), pdf, 10, -4.0, 4.0) < 0.05);
    CHECK(histogram_tv(normals(1000000, 0.0, 10), pdf, 60, -5.0, 5.0) < 0.02);
    CHECK_THROWS_AS(histogram_tv(zeros, pdf, 9, -2.0, 2.0), DomainError);
    CHECK_THROWS_AS(histogram_tv(zeros, pdf, 20, 2.0, 2.0), DomainError);
  }

  TEST_CASE("mean with standard error") {
    const std::vector<double> c(10, 2.5);
    const auto e = mc_mean_with_se(c);
    CHECK(e.mean == 2.5);
    CHECK(e.standard_error == 0.0);
    const auto n = mc_mean_with_se(normals(10000, 0.0, 11));
    CHECK(std::abs(n.mean) < 0.03);
    CHECK(n.standard_error == doctest::Approx(0.01).epsilon(0.05));
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(mc_mean_with_se(one), InsufficientSampleError);

    const auto ends = normals(100000, 0.0, 12);
    std::vector<double> z(ends.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::exp(-0.5) * std::cosh(ends[i]);
    const auto m = mc_mean_with_se(z);
    CHECK(std::abs(m.mean - 1.0) < 3.0 * m.standard_error);
  }

  TEST_CASE("stream independence") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Philox4x32 a(seed, 0), b(seed, 1);
      const int n = 10000;
      double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
      for (int i = 0; i < n; ++i) {
        const double u = to_unit(a());
        const double v = to_unit(b());
        sa += u;
        sb += v;
        sab += u * v;
        saa += u * u;
        sbb += v * v;
      }
      const double cov = sab / n - sa / n * sb / n;
      const double corr = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
      CHECK(std::abs(corr) < 0.02 * 2.0);
    }
  }

  TEST_CASE("euler maruyama") {
    Philox4x32 rng(7, 0);
    PathSample path;
    const double end = euler_maruyama([](double) { return 0.0; }, 0.0, 1.0, 0.3, rng, &path);
    CHECK(path.times.size() == 5);
    CHECK(path.times[3] == doctest::Approx(0.9));
    CHECK(path.times.back() == 1.0);
    CHECK(path.values.back() == end);
    CHECK_THROWS_AS(euler_maruyama([](double) { return 0.0; }, 0.0, 1.0, 2.0, rng), DomainError);
    CHECK_THROWS_AS(euler_maruyama([](double) { return 0.0; }, 0.0, 0.0, 0.1, rng), DomainError);

    const auto free = euler_maruyama_endpoints([](double) { return 0.0; }, 0.3, 1.0, 1e-3, 100000, RngPolicy(7), 1, 1);
    CHECK(ks_distance(free, [](double x) { return oracle::normal_cdf(x, 0.3, 1.0); }) < ks99(free.size()));
    const auto drift = euler_maruyama_endpoints([](double) { return 0.7; }, 0.0, 1.0, 1e-3, 100000, RngPolicy(7), 2, 1);
    CHECK(ks_distance(drift, [](double x) { return oracle::normal_cdf(x, 0.7, 1.0); }) < ks99(drift.size()));
    // Thread count does not change the pool.
    const auto again = euler_maruyama_endpoints([](double) { return 0.7; }, 0.0, 1.0, 1e-3, 3000, RngPolicy(7), 2, 3);
    CHECK(std::equal(again.begin(), again.end(), drift.begin()));
  }

  TEST_CASE("euler maruyama weak error is first order") {
    // For the tanh drift E[Y_t] = x0 + t tanh(x0).
    const double x0 = 0.5;
    const double exact = x0 + std::tanh(x0);
    const auto tanh = [](double y) { return std::tanh(y); };
    auto error = [&](double dt, std::uint32_t domain) {
      const auto e = mc_mean_with_se(euler_maruyama_endpoints(tanh, x0, 1.0, dt, 1000000, RngPolicy(7), domain, 1));
      return std::pair{e.mean - exact, e.standard_error};
    };
    const auto [e1, se1] = error(0.5, 1);
    const auto [e2, se2] = error(0.25, 2);
    CHECK(std::abs(e1) > 5.0 * se1);
    CHECK(std::abs(e2) <= 0.5 * std::abs(e1) + 3.0 * std::hypot(se1, se2));
    // Constant drift is exact in law at any step.
    for (double dt : {0.5, 0.25}) {
      const auto e = mc_mean_with_se(
          euler_maruyama_endpoints([](double) { return 0.7; }, 0.0, 1.0, dt, 1000000, RngPolicy(7), 3, 1));
      CHECK(std::abs(e.mean - 0.7) < 3.0 * e.standard_error);
    }
  }

  TEST_CASE("euler maruyama matches the tanh h-transform density") {
    const auto k = tanh_drift_kernel(1.0, 0.0);
    const auto ends = euler_maruyama_endpoints([](double y) { return std::tanh(y); }, 0.0, 1.0, 1e-3, 200000,
                                               RngPolicy(7), 4, 1);
    const auto lebesgue = [&](double y) { return k.density(1.0, 0.0, y) * k.measure().density(y); };
    CHECK(histogram_tv(ends, lebesgue, 60, -5.0, 5.0) < 0.02);
  }

  TEST_CASE("flipped bessel simulation") {
    const auto xs = poisson_flip_endpoints(0.0, 1.0, 1000000, FlipVariant::X, RngPolicy(7), 1, 1);
    std::vector<double> positive(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) positive[i] = xs[i] > 0.0 ? 1.0 : 0.0;
    const auto frac = mc_mean_with_se(positive);
    CHECK(std::abs(frac.mean - 0.5 * (1.0 + std::exp(-2.0))) < 3.0 * frac.standard_error);
    CHECK(0.5 * (1.0 + std::exp(-2.0)) == doctest::Approx(0.5677).epsilon(1e-4));

    const auto ys = poisson_flip_endpoints(0.0, 1.0, 100000, FlipVariant::Y, RngPolicy(7), 2, 1);
    std::vector<double> ax(100000), ay(100000);
    for (std::size_t i = 0; i < ax.size(); ++i) {
      ax[i] = std::abs(xs[i]);
      ay[i] = std::abs(ys[i]);
    }
    CHECK(ks_two_sample(ax, ay).p_value > 0.01);
    const auto ny = std::count_if(ys.begin(), ys.end(), [](double v) { return v > 0.0; });
    CHECK(ny / 1e5 == doctest::Approx(0.5 * (1.0 - std::exp(-2.0))).epsilon(0.02));

    for (auto [variant, x0] : {std::pair{FlipVariant::X, 0.0}, std::pair{FlipVariant::Y, 0.7}, std::pair{FlipVariant::X, -1.2}}) {
      const auto k = flipped_bessel_kernel(variant);
      const auto ends = poisson_flip_endpoints(x0, 1.0, 1000000, variant, RngPolicy(7), 3, 1);
      const auto lebesgue = [&](double y) { return k.density(1.0, x0, y) * k.measure().density(y); };
      INFO("x0=" << x0);
      CHECK(histogram_tv(ends, lebesgue, 60, -5.0, 5.0) < 0.02);
    }

    Philox4x32 rng(7, 9);
    PathSample path;
    const double end = poisson_flip_simulate(0.5, 1.0, 0.1, rng, FlipVariant::X, &path);
    CHECK(path.times.size() == 11);
    CHECK(path.values.front() == 0.5);
    CHECK(path.values.back() == end);
  }
}
