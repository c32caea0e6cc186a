#include "bridgekit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "bridgekit/errors.hpp"

namespace bridgekit {

namespace {

void check_size(std::size_t n, std::size_t min, const char* what) {
  if (n < min) {
    throw InsufficientSampleError(std::string(what) + " needs at least " + std::to_string(min) +
                                  " samples (got " + std::to_string(n) + ")");
  }
}

// sup |F_a - F_b| over sorted samples, ties handled by advancing both sides together.
double ks_statistic(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_p_value(double d, std::size_t n_a, std::size_t n_b) {
  const double ne = static_cast<double>(n_a) * static_cast<double>(n_b) /
                    static_cast<double>(n_a + n_b);
  const double root = std::sqrt(ne);
  return kolmogorov_sf((root + 0.12 + 0.11 / root) * d);
}

std::vector<double> sorted(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::string to_string(TestMethod method) { return method == TestMethod::ks ? "ks" : "energy"; }

void to_json(nlohmann::json& j, const TestReport& r) {
  j = nlohmann::json{{"method", to_string(r.method)}, {"statistic", r.statistic},
                     {"p_value", r.p_value},         {"n_a", r.n_a},
                     {"n_b", r.n_b},                 {"seed", r.seed}};
}

double kolmogorov_sf(double x) {
  if (!(x > 0.0)) return 1.0;
  if (x < 1.18) {
    // P(K <= x) = sqrt(2 pi)/x * sum_{k odd} exp(-k^2 pi^2 / (8 x^2))
    const double a = -std::numbers::pi * std::numbers::pi / (8.0 * x * x);
    double cdf = 0.0;
    for (int k = 1; k < 200; k += 2) {
      const double term = std::exp(a * k * k);
      cdf += term;
      if (term < 1e-17 * cdf) break;
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / x;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  // P(K > x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)
  double sf = 0.0;
  for (int k = 1; k < 200; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sf += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(sf, 0.0, 1.0);
}

TestReport ks_two_sample(std::span<const double> a, std::span<const double> b,
                         std::uint64_t seed) {
  check_size(a.size(), 50, "ks_two_sample");
  check_size(b.size(), 50, "ks_two_sample");
  TestReport r;
  r.method = TestMethod::ks;
  r.n_a = a.size();
  r.n_b = b.size();
  r.seed = seed;
  r.statistic = ks_statistic(sorted(a), sorted(b));
  r.p_value = ks_p_value(r.statistic, r.n_a, r.n_b);
  return r;
}

TestReport ks_permutation_test(std::span<const double> a, std::span<const double> b,
                               int n_permutations, const RngPolicy& policy,
                               std::uint32_t domain) {
  check_size(a.size(), 50, "ks_permutation_test");
  check_size(b.size(), 50, "ks_permutation_test");
  if (n_permutations < 1) throw DomainError("permutation count must be positive");
  TestReport r;
  r.method = TestMethod::ks;
  r.n_a = a.size();
  r.n_b = b.size();
  r.seed = policy.master_seed();
  r.statistic = ks_statistic(sorted(a), sorted(b));
  std::vector<double> pool(a.begin(), a.end());
  pool.insert(pool.end(), b.begin(), b.end());
  int at_least = 0;
  for (int p = 0; p < n_permutations; ++p) {
    Philox4x32 rng = policy.stream(domain, static_cast<std::uint64_t>(p));
    std::vector<double> shuffled = pool;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::vector<double> pa(shuffled.begin(), shuffled.begin() + static_cast<long>(a.size()));
    std::vector<double> pb(shuffled.begin() + static_cast<long>(a.size()), shuffled.end());
    std::sort(pa.begin(), pa.end());
    std::sort(pb.begin(), pb.end());
    if (ks_statistic(pa, pb) >= r.statistic) ++at_least;
  }
  r.p_value = (1.0 + at_least) / (1.0 + n_permutations);
  return r;
}

TestReport energy_distance_test(const PathPool& a, const PathPool& b, int n_permutations,
                                const RngPolicy& policy, std::uint32_t domain) {
  if (a.times != b.times) throw GridMismatchError("energy test needs pools on the same grid");
  if (n_permutations < 200) throw DomainError("energy test needs at least 200 permutations");
  check_size(a.draws, 2, "energy_distance_test");
  check_size(b.draws, 2, "energy_distance_test");
  const auto na = static_cast<Eigen::Index>(a.draws);
  const auto nb = static_cast<Eigen::Index>(b.draws);
  const Eigen::Index n = na + nb;
  const auto dim = static_cast<Eigen::Index>(a.grid_size());

  Eigen::MatrixXd points(n, dim);
  for (Eigen::Index i = 0; i < na; ++i) {
    auto row = a.draw(static_cast<std::size_t>(i));
    for (Eigen::Index k = 0; k < dim; ++k) points(i, k) = row[static_cast<std::size_t>(k)];
  }
  for (Eigen::Index i = 0; i < nb; ++i) {
    auto row = b.draw(static_cast<std::size_t>(i));
    for (Eigen::Index k = 0; k < dim; ++k) points(na + i, k) = row[static_cast<std::size_t>(k)];
  }

  // Column 0 holds the observed labelling, column p the p-th permutation, the last column ones.
  const Eigen::Index cols = n_permutations + 2;
  Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(n, cols);
  labels.col(0).head(na).setOnes();
  labels.col(cols - 1).setOnes();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (int p = 0; p < n_permutations; ++p) {
    std::iota(order.begin(), order.end(), 0);
    Philox4x32 rng = policy.stream(domain, static_cast<std::uint64_t>(p));
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index i = 0; i < na; ++i) labels(order[static_cast<std::size_t>(i)], p + 1) = 1.0;
  }

  // quad[p] = l_p' D l_p, accumulated block by block so D is never stored whole.
  Eigen::VectorXd quad = Eigen::VectorXd::Zero(cols);
  Eigen::VectorXd row_sums(n);
  constexpr Eigen::Index kBlock = 512;
  const Eigen::MatrixXd cols_major = points.transpose();
  Eigen::MatrixXd dist(kBlock, n);
  for (Eigen::Index start = 0; start < n; start += kBlock) {
    const Eigen::Index rows = std::min(kBlock, n - start);
    dist.resize(rows, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        dist(i, j) = (cols_major.col(start + i) - cols_major.col(j)).norm();
      }
    }
    const Eigen::MatrixXd dl = dist * labels;
    quad += (labels.middleRows(start, rows).cwiseProduct(dl)).colwise().sum().transpose();
    row_sums.segment(start, rows) = dl.col(cols - 1);
  }
  // With l the indicator of the first group and D symmetric:
  //   sum_AA = l'Dl, sum_A* = l'D1, sum_AB = sum_A* - sum_AA, sum_BB = 1'D1 - 2 sum_A* + sum_AA.
  const double total = quad[cols - 1];
  const double fa = static_cast<double>(na);
  const double fb = static_cast<double>(nb);
  auto statistic = [&](Eigen::Index p) {
    const double aa = quad[p];
    const double a_all = labels.col(p).dot(row_sums);
    const double ab = a_all - aa;
    const double bb = total - 2.0 * a_all + aa;
    const double energy = 2.0 * ab / (fa * fb) - aa / (fa * fa) - bb / (fb * fb);
    return fa * fb / (fa + fb) * energy;
  };

  TestReport r;
  r.method = TestMethod::energy;
  r.n_a = a.draws;
  r.n_b = b.draws;
  r.seed = policy.master_seed();
  r.statistic = statistic(0);
  int at_least = 0;
  const double slack = 1e-9 * std::max(1.0, std::abs(r.statistic));
  for (int p = 1; p <= n_permutations; ++p) {
    if (statistic(p) >= r.statistic - slack) ++at_least;
  }
  r.p_value = (1.0 + at_least) / (1.0 + n_permutations);
  return r;
}

double histogram_tv(std::span<const double> samples, const RealFunction& density, int bins,
                    double lo, double hi, const Quadrature& q) {
  if (bins < 10) throw DomainError("histogram needs at least 10 bins");
  if (!(hi > lo)) throw DomainError("histogram window is empty");
  check_size(samples.size(), 1, "histogram_tv");
  const double width = (hi - lo) / bins;
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  double outside = 0.0;
  for (double s : samples) {
    if (s < lo || s >= hi) {
      outside += 1.0;
      continue;
    }
    const auto k = std::min(static_cast<std::size_t>((s - lo) / width),
                            static_cast<std::size_t>(bins - 1));
    counts[k] += 1.0;
  }
  const double n = static_cast<double>(samples.size());
  double tv = 0.0;
  double inside_mass = 0.0;
  for (int k = 0; k < bins; ++k) {
    const double mass = integrate(density, lo + k * width, lo + (k + 1) * width, q).value;
    inside_mass += mass;
    tv += std::abs(counts[static_cast<std::size_t>(k)] / n - mass);
  }
  tv += std::abs(outside / n - std::max(0.0, 1.0 - inside_mass));
  return 0.5 * tv;
}

MeanEstimate mc_mean_with_se(std::span<const double> samples) {
  check_size(samples.size(), 2, "mc_mean_with_se");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace bridgekit
