#include "bridgekit/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <variant>

#include "CLI11.hpp"

#include "bridgekit/bridge.hpp"
#include "bridgekit/catalog.hpp"
#include "bridgekit/chain.hpp"
#include "bridgekit/errors.hpp"
#include "bridgekit/residuals.hpp"
#include "bridgekit/sde.hpp"
#include "bridgekit/stats.hpp"

namespace bridgekit {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Records named checks; every failed check becomes one failure entry.
class Checks {
 public:
  void at_most(const std::string& invariant, double observed, double threshold) {
    record(invariant, observed, threshold, "<=", observed <= threshold);
  }
  void at_least(const std::string& invariant, double observed, double threshold) {
    record(invariant, observed, threshold, ">=", observed >= threshold);
  }
  const json& table() const { return table_; }
  const json& failures() const { return failures_; }

 private:
  void record(const std::string& invariant, double observed, double threshold,
              const char* relation, bool ok) {
    table_[invariant] = {{"observed", observed},
                         {"threshold", threshold},
                         {"relation", relation},
                         {"passed", ok}};
    if (!ok) {
      failures_.push_back({{"invariant", invariant}, {"observed", observed}, {"threshold", threshold}});
    }
  }

  json table_ = json::object();
  json failures_ = json::array();
};

CatalogEntry resolve(const std::string& id) {
  try {
    return parse_kernel_id(id);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

bool half_line(const TransitionKernel& k) { return k.measure().support().lo == 0.0; }

std::vector<double> grid_for(const RunConfig& c) {
  if (!c.grid_times.empty()) {
    std::vector<double> g = c.grid_times;
    if (g.front() != 0.0) g.insert(g.begin(), 0.0);
    if (g.back() != c.t) g.push_back(c.t);
    return g;
  }
  return uniform_grid(c.t, c.grid_points);
}

SamplerOptions sampler_for(const RunConfig& c, const TransitionKernel& k, bool compare) {
  SamplerOptions o;
  if (c.sampler == "generic") {
    o.method = SamplerOptions::Method::generic;
  } else if (c.sampler.empty() && compare &&
             std::holds_alternative<HTransformFamily>(k.family())) {
    // Comparisons sample h-transforms from their own densities so the test is not vacuous.
    o.method = SamplerOptions::Method::generic;
  }
  return o;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::ofstream open_csv(const RunConfig& c) {
  std::ofstream out(c.csv);
  if (!out) throw UsageError("cannot write csv file '" + c.csv + "'");
  out << std::setprecision(17);
  return out;
}

double ks99(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

// Sup distance between the empirical CDF and the bridge marginal CDF on a fine grid over the
// sample range.
double marginal_ks_distance(const BridgeSpec& spec, double s, std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const double lo = samples.front();
  const double hi = samples.back();
  const int points = 1500;
  double cdf = bridge_marginal_mass(spec, s, Interval{spec.kernel.measure().support().lo, lo, false, true});
  double prev = lo;
  double dist = 0.0;
  const double n = static_cast<double>(samples.size());
  for (int i = 0; i <= points; ++i) {
    const double z = lo + (hi - lo) * i / points;
    if (z > prev) cdf += bridge_marginal_mass(spec, s, Interval{prev, z, true, true});
    prev = z;
    const auto below = std::upper_bound(samples.begin(), samples.end(), z) - samples.begin();
    dist = std::max(dist, std::abs(static_cast<double>(below) / n - cdf));
  }
  return dist;
}

double fraction_positive(const std::vector<double>& v) {
  const auto k = std::count_if(v.begin(), v.end(), [](double a) { return a > 0.0; });
  return static_cast<double>(k) / static_cast<double>(v.size());
}

// Two-sided p-value of the pooled two-proportion z-test.
double two_proportion_p(double fa, std::size_t na, double fb, std::size_t nb) {
  const double a = static_cast<double>(na);
  const double b = static_cast<double>(nb);
  const double pooled = (fa * a + fb * b) / (a + b);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / a + 1.0 / b));
  if (se == 0.0) return fa == fb ? 1.0 : 0.0;
  return std::erfc(std::abs(fa - fb) / se / std::sqrt(2.0));
}

double relative_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(a)); }

// --- commands --------------------------------------------------------------------------------

void verify_kernels(const RunConfig& c, Checks& checks, json& results) {
  const CatalogEntry entry = resolve(c.kernel);
  const TransitionKernel& k = entry.kernel;
  const std::vector<double> states = half_line(k) ? std::vector<double>{0.0, 0.5, 2.0}
                                                  : std::vector<double>{-1.5, 0.0, 0.5, 2.0};
  const std::vector<double> times{0.25, 1.0, 4.0};
  double worst_norm = 0.0, worst_ck = 0.0, worst_eigen = 0.0, worst_dual = 0.0;
  json rows = json::array();
  for (double t : times) {
    for (double x : states) {
      const double r = normalization_residual(k, t, x);
      worst_norm = std::max(worst_norm, r);
      rows.push_back({{"check", "normalization"}, {"t", t}, {"x", x}, {"residual", r}});
      for (double y : states) {
        if (y == 0.0 && half_line(k)) continue;
        const double ck = chapman_kolmogorov_residual(k, 0.5 * t, 0.5 * t, x, y);
        worst_ck = std::max(worst_ck, ck);
        rows.push_back({{"check", "chapman_kolmogorov"}, {"t", t}, {"x", x}, {"y", y}, {"residual", ck}});
      }
    }
  }
  for (const Eigenpair& e : entry.eigenpairs) {
    for (double t : {0.5, 1.0}) {
      for (double x : states) {
        const double r = eigen_residual(k, e, t, x);
        worst_eigen = std::max(worst_eigen, r);
        rows.push_back({{"check", "eigen"}, {"eigenpair", e.label}, {"t", t}, {"x", x}, {"residual", r}});
      }
    }
  }
  const std::vector<std::pair<double, double>> sets =
      half_line(k) ? std::vector<std::pair<double, double>>{{0.2, 1.0}, {0.5, 2.0}}
                   : std::vector<std::pair<double, double>>{{-1.0, 0.0}, {0.5, 2.0}};
  for (auto [flo, fhi] : sets) {
    for (auto [glo, ghi] : sets) {
      const double r = duality_residual(k, 1.0, indicator(flo, fhi), indicator(glo, ghi));
      worst_dual = std::max(worst_dual, r);
      rows.push_back({{"check", "duality"}, {"t", 1.0}, {"f", {flo, fhi}}, {"g", {glo, ghi}}, {"residual", r}});
    }
  }
  results["kernel"] = entry.id;
  results["residuals"] = rows;
  checks.at_most("normalization", worst_norm, c.tol);
  checks.at_most("chapman_kolmogorov", worst_ck, c.tol);
  checks.at_most("duality", worst_dual, c.tol);
  if (!entry.eigenpairs.empty()) checks.at_most("eigen", worst_eigen, c.tol);
  if (!c.csv.empty()) {
    auto out = open_csv(c);
    out << "check,t,x,y,residual\n";
    for (const auto& r : rows) {
      out << r["check"].get<std::string>() << ',' << r["t"].get<double>() << ','
          << (r.contains("x") ? r["x"].get<double>() : NAN) << ','
          << (r.contains("y") ? r["y"].get<double>() : NAN) << ',' << r["residual"].get<double>() << '\n';
    }
  }
}

void verify_chain(const RunConfig& c, Checks& checks, json& results) {
  ChainModel p;
  try {
    p = load_chain(c.chain);
    p.validate();
  } catch (const std::exception& e) {
    throw UsageError(std::string("chain: ") + e.what());
  }
  const std::size_t n = p.size();
  const PerronPair e = perron_eigen(p);
  const ChainModel q = chain_h_transform(p, e.psi, e.lambda);
  std::vector<std::size_t> states;
  for (std::size_t i = 0; i < std::min<std::size_t>(n, 4); ++i) states.push_back(i);
  const std::vector<double> ts{0.25, 0.5, 1.0, 2.0};
  const std::vector<double> fr{0.25, 0.5, 0.75};
  const auto cmp = bridges_equal(p, q, bridge_grid(states, ts, states, fr), 1e-10);
  checks.at_most("bridge_invariance", cmp.max_deviation, 1e-10);

  const Eigen::VectorXd psi_hat = perron_eigen(dual_chain(p).generator).psi;
  const Eigen::VectorXd expected_m = p.weights.cwiseProduct(e.psi).cwiseProduct(psi_hat);
  checks.at_most("measure_relation",
                 (q.weights - expected_m).cwiseAbs().maxCoeff() / expected_m.cwiseAbs().maxCoeff(), 1e-9);

  const Eigen::MatrixXd pt = transition_matrix(p, 1.0);
  const Eigen::MatrixXd conj =
      std::exp(-e.lambda) * e.psi.cwiseInverse().asDiagonal() * pt * e.psi.asDiagonal();
  checks.at_most("conjugation", (transition_matrix(q, 1.0) - conj).cwiseAbs().maxCoeff(), 1e-12);
  checks.at_most("semigroup",
                 (transition_matrix(p, 0.5) * transition_matrix(p, 1.3) - transition_matrix(p, 1.8))
                     .cwiseAbs()
                     .maxCoeff(),
                 1e-10);
  const Eigen::MatrixXd m = p.weights.asDiagonal();
  checks.at_most("duality",
                 (m * pt - (m * transition_matrix(dual_chain(p), 1.0)).transpose()).cwiseAbs().maxCoeff(),
                 1e-11);

  const Recovery r = recover_from_single_bridge(p, q, 0, 1.0, n - 1);
  checks.at_least("single_bridge_recovery", r.verified ? 1.0 : 0.0, 1.0);
  const Eigen::ArrayXd ratio = r.psi.array() / e.psi.array();
  checks.at_most("recovered_psi", (ratio - ratio(0)).abs().maxCoeff() / std::abs(ratio(0)), 1e-9);
  checks.at_most("recovered_lambda", std::abs(r.lambda - e.lambda), 1e-9);

  results["states"] = n;
  results["conservative"] = p.conservative();
  results["lambda"] = e.lambda;
  results["psi"] = std::vector<double>(e.psi.data(), e.psi.data() + e.psi.size());
  results["psi_hat"] = std::vector<double>(psi_hat.data(), psi_hat.data() + psi_hat.size());
  results["bridge_max_deviation"] = cmp.max_deviation;
  results["recovery"] = {{"verified", r.verified},
                         {"lambda", r.lambda},
                         {"diagnostic", r.diagnostic},
                         {"bridge_deviation", r.bridge_deviation},
                         {"ratio_spread", r.ratio_spread},
                         {"lambda_spread", r.lambda_spread},
                         {"measure_deviation", r.measure_deviation},
                         {"transition_deviation", r.transition_deviation}};
  if (!c.csv.empty()) {
    auto out = open_csv(c);
    out << "state,psi,psi_hat,weight_p,weight_q\n";
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = static_cast<Eigen::Index>(i);
      out << i << ',' << e.psi(j) << ',' << psi_hat(j) << ',' << p.weights(j) << ',' << q.weights(j) << '\n';
    }
  }
}

void sample_bridge_command(const RunConfig& c, Checks& checks, json& results) {
  const CatalogEntry entry = resolve(c.kernel);
  const BridgeSpec spec{entry.kernel, c.x, c.t, c.y};
  const auto grid = grid_for(c);
  const PathPool pool = sample_bridges(spec, grid, c.n_samples, RngPolicy(c.seed), 1, c.threads,
                                       sampler_for(c, entry.kernel, false));
  double pin = 0.0;
  for (std::size_t i = 0; i < pool.draws; ++i) {
    const auto row = pool.draw(i);
    pin = std::max({pin, std::abs(row.front() - c.x), std::abs(row.back() - c.y)});
  }
  checks.at_most("pinned_endpoints", pin, 0.0);
  json marginals = json::array();
  double worst_ratio = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto col = pool.column(k);
    json row{{"time", grid[k]}};
    if (col.size() >= 2) {
      const auto est = mc_mean_with_se(col);
      row["mean"] = est.mean;
      row["standard_error"] = est.standard_error;
    }
    if (k > 0 && k + 1 < grid.size() && col.size() >= 50) {
      const double d = marginal_ks_distance(spec, grid[k], col);
      row["ks_distance"] = d;
      worst_ratio = std::max(worst_ratio, d / ks99(col.size()));
    }
    marginals.push_back(row);
  }
  if (c.n_samples >= 50 && grid.size() > 2) checks.at_most("sampler_consistency", worst_ratio, 1.0);
  results["kernel"] = entry.id;
  results["draws"] = pool.draws;
  results["marginals"] = marginals;
  if (!c.csv.empty()) {
    auto out = open_csv(c);
    write_csv(out, pool);
  }
}

void compare_bridges(const RunConfig& c, Checks& checks, json& results) {
  const CatalogEntry a = resolve(c.kernel_a);
  const CatalogEntry b = resolve(c.kernel_b);
  const BridgeSpec sa{a.kernel, c.x, c.t, c.y};
  const BridgeSpec sb{b.kernel, c.x, c.t, c.y};
  sa.validate();
  sb.validate();
  const SamplerOptions oa = sampler_for(c, a.kernel, true);
  const SamplerOptions ob = sampler_for(c, b.kernel, true);
  const RngPolicy policy(c.seed);

  // Pointwise bridge densities on a 9 x 9 (s, z) grid.
  double worst = 0.0;
  const bool half = half_line(a.kernel);
  for (int i = 1; i <= 9; ++i) {
    const double s = c.t * i / 10.0;
    for (int j = 0; j < 9; ++j) {
      const double z = half ? 0.1 + 2.9 * j / 8.0 : -3.0 + 6.0 * j / 8.0;
      worst = std::max(worst, relative_gap(bridge_transition_lebesgue_density(sa, c.x, 0.0, z, s),
                                           bridge_transition_lebesgue_density(sb, c.x, 0.0, z, s)));
    }
  }
  checks.at_most("bridge_density_equality", worst, 1e-12);

  const std::vector<double> mid_grid{0.0, 0.5 * c.t, c.t};
  const auto ma = sample_bridges(sa, mid_grid, c.n_samples, policy, 101, c.threads, oa).column(1);
  const auto mb = sample_bridges(sb, mid_grid, c.n_samples, policy, 102, c.threads, ob).column(1);
  const TestReport ks = c.ks_method == "permutation"
                            ? ks_permutation_test(ma, mb, c.permutations, policy)
                            : ks_two_sample(ma, mb, c.seed);
  checks.at_least("ks_mid_marginal", ks.p_value, c.alpha);

  const auto grid = grid_for(c);
  const std::size_t m = std::min(c.n_samples, c.energy_samples);
  const PathPool pa = sample_bridges(sa, grid, m, policy, 201, c.threads, oa);
  const PathPool pb = sample_bridges(sb, grid, m, policy, 202, c.threads, ob);
  const TestReport energy = energy_distance_test(pa, pb, c.permutations, policy);
  checks.at_least("energy_paths", energy.p_value, c.alpha);

  const double eps = 1e-9 * c.t;
  const std::vector<double> sign_grid{0.0, eps, 0.5 * c.t, c.t};
  const std::size_t ns = std::min<std::size_t>(c.n_samples, 10000);
  const double fa = fraction_positive(sample_bridges(sa, sign_grid, ns, policy, 301, c.threads, oa).column(1));
  const double fb = fraction_positive(sample_bridges(sb, sign_grid, ns, policy, 302, c.threads, ob).column(1));
  const double sign_p = two_proportion_p(fa, ns, fb, ns);
  checks.at_least("first_step_sign", sign_p, c.alpha);

  results["kernel_a"] = a.id;
  results["kernel_b"] = b.id;
  results["density_max_gap"] = worst;
  results["ks"] = ks;
  results["energy"] = energy;
  results["first_step_sign"] = {{"time", eps},
                                {"draws", ns},
                                {"fraction_positive_a", fa},
                                {"fraction_positive_b", fb},
                                {"p_value", sign_p}};
  if (!c.csv.empty()) {
    auto out = open_csv(c);
    out << "sample,time,value\n";
    for (double v : ma) out << "a," << 0.5 * c.t << ',' << v << '\n';
    for (double v : mb) out << "b," << 0.5 * c.t << ',' << v << '\n';
  }
}

void extract_psi(const RunConfig& c, Checks& checks, json& results) {
  const CatalogEntry a = resolve(c.kernel_a);
  const CatalogEntry b = resolve(c.kernel_b);
  const double end = c.y;
  const double h = c.t;
  const bool half = half_line(a.kernel);
  std::vector<double> zs;
  for (int j = 0; j < 25; ++j) zs.push_back(half ? 0.1 + 2.9 * j / 24.0 : -3.0 + 6.0 * j / 24.0);
  std::vector<double> ss;
  for (int i = 1; i <= 8; ++i) ss.push_back(h * i / 9.0);

  auto ratio = [&](double s, double z) {
    try {
      return extract_eigen_ratio(a.kernel, b.kernel, end, h, s, z);
    } catch (const MeasureMismatchError& e) {
      throw UsageError(e.what());
    }
  };
  const double base = ratio(0.0, end);
  std::vector<double> psi;
  for (double z : zs) psi.push_back(ratio(0.0, z) / base);

  double spread = 0.0;
  std::vector<double> lambda_over_s;
  for (double s : ss) {
    const double ref = base / ratio(s, end);
    for (double z : zs) spread = std::max(spread, std::abs(ratio(0.0, z) / ratio(s, z) / ref - 1.0));
    lambda_over_s.push_back(extract_lambda_s(a.kernel, b.kernel, end, h, s) / s);
  }
  const auto [lo, hi] = std::minmax_element(lambda_over_s.begin(), lambda_over_s.end());
  const double lambda = lambda_over_s.front();
  checks.at_most("ratio_s_independence", spread, 1e-10);
  checks.at_most("lambda_linearity", *hi - *lo, 1e-8);

  // Closed forms for the gaussian against its drift transforms.
  std::optional<Eigenpair> known;
  if (a.kernel.id() == "gaussian") {
    const std::string& id = c.kernel_b;
    if (id.starts_with("tanh:")) {
      const auto colon = id.find(':', 5);
      known = cosh_eigenpair(std::stod(id.substr(5, colon - 5)), std::stod(id.substr(colon + 1)));
    } else if (id.starts_with("drift:")) {
      known = exp_eigenpair(std::stod(id.substr(6)));
    } else if (id == "gaussian") {
      known = trivial_eigenpair();
    }
  }
  json table = json::array();
  double worst = 0.0;
  for (std::size_t j = 0; j < zs.size(); ++j) {
    json row{{"z", zs[j]}, {"psi", psi[j]}};
    if (known) {
      const double expected = known->psi(zs[j]) / known->psi(end);
      row["expected"] = expected;
      worst = std::max(worst, std::abs(psi[j] / expected - 1.0));
    }
    table.push_back(row);
  }
  if (known) {
    checks.at_most("psi_closed_form", worst, 1e-10);
    checks.at_most("lambda_closed_form", std::abs(lambda - known->lambda), 1e-10);
  }
  results["kernel_a"] = a.id;
  results["kernel_b"] = b.id;
  results["end_state"] = end;
  results["lambda"] = lambda;
  results["lambda_over_s"] = lambda_over_s;
  results["psi"] = table;
  if (!c.csv.empty()) {
    auto out = open_csv(c);
    out << "z,psi" << (known ? ",expected" : "") << '\n';
    for (const auto& row : table) {
      out << row["z"].get<double>() << ',' << row["psi"].get<double>();
      if (known) out << ',' << row["expected"].get<double>();
      out << '\n';
    }
  }
}

void bessel_demo(const RunConfig& c, Checks& checks, json& results) {
  const auto kx = flipped_bessel_kernel(FlipVariant::X);
  const auto ky = flipped_bessel_kernel(FlipVariant::Y);
  auto origin = [](double t, double y, bool plus) {
    const double parity = plus ? 1.0 + std::exp(-2.0 * t) : 1.0 - std::exp(-2.0 * t);
    return parity / std::sqrt(2.0 * std::numbers::pi * t * t * t) * std::exp(-y * y / (2.0 * t));
  };
  double formula = 0.0;
  double mirror = 0.0;
  for (double t : {0.5, 1.0, 2.0}) {
    for (double y : {0.5, 1.0, 2.0}) {
      const double plus = origin(t, y, true);
      const double minus = origin(t, y, false);
      formula = std::max({formula, std::abs(one_sided_density(kx, t, 0.0, +1, y) / plus - 1.0),
                          std::abs(one_sided_density(kx, t, 0.0, -1, y) / minus - 1.0),
                          std::abs(kx.density(t, 0.0, y) / plus - 1.0),
                          std::abs(ky.density(t, 0.0, y) / minus - 1.0)});
      mirror = std::max({mirror, std::abs(kx.density(t, 0.0, y) - ky.density(t, 0.0, -y)),
                         std::abs(kx.density(t, 0.0, -y) - ky.density(t, 0.0, y))});
    }
  }
  checks.at_most("origin_density_formula", formula, 1e-10);
  checks.at_most("variant_mirror", mirror, 0.0);

  const RngPolicy policy(c.seed);
  const auto ends = poisson_flip_endpoints(0.0, c.t, c.n_samples, FlipVariant::X, policy, 1, c.threads);
  std::vector<double> positive(ends.size());
  for (std::size_t i = 0; i < ends.size(); ++i) positive[i] = ends[i] > 0.0 ? 1.0 : 0.0;
  const double expected = 0.5 * (1.0 + std::exp(-2.0 * c.t));
  double frac_z = 0.0;
  if (positive.size() >= 2) {
    const auto est = mc_mean_with_se(positive);
    frac_z = std::abs(est.mean - expected) / est.standard_error;
    results["parity_fraction"] = {{"observed", est.mean}, {"expected", expected}, {"standard_error", est.standard_error}};
    checks.at_most("parity_fraction_z", frac_z, 3.0);
  }

  double off = 0.0;
  for (double x : {-1.0, 0.5}) {
    for (double y : {-0.5, 1.5}) {
      for (double z : {-0.3, 0.8}) {
        for (double z2 : {-1.2, 0.4}) {
          const double a = bridge_transition_density({kx, x, c.t, y}, z, 0.2 * c.t, z2, 0.6 * c.t);
          const double b = bridge_transition_density({ky, x, c.t, y}, z, 0.2 * c.t, z2, 0.6 * c.t);
          off = std::max(off, relative_gap(a, b));
        }
      }
    }
  }
  checks.at_most("off_origin_bridge_equality", off, 1e-10);

  const double end = c.y == 0.0 ? 1.0 : c.y;
  const double eps = 1e-9 * c.t;
  const std::vector<double> grid{0.0, eps, 0.5 * c.t, c.t};
  const std::size_t ns = std::min<std::size_t>(c.n_samples, 10000);
  const double fx = fraction_positive(sample_bridges({kx, 0.0, c.t, end}, grid, ns, policy, 2, c.threads).column(1));
  const double fy = fraction_positive(sample_bridges({ky, 0.0, c.t, end}, grid, ns, policy, 3, c.threads).column(1));
  checks.at_most("origin_bridge_separation", std::abs(fx - 1.0) + std::abs(fy), 0.0);
  results["origin_bridges"] = {{"end_state", end}, {"first_time", eps}, {"draws", ns},
                               {"fraction_positive_x", fx}, {"fraction_positive_y", fy}};
  results["wrong_sign_mass"] = {
      {"time", 0.01 * c.t},
      {"mass", bridge_marginal_mass({kx, 0.0, c.t, end}, 0.01 * c.t,
                                    end > 0.0 ? Interval{-kInf, 0.0, false, false} : Interval{0.0, kInf, false, false})}};
  if (!c.csv.empty()) {
    auto out = open_csv(c);
    out << "y,density_x,density_y\n";
    for (int j = 0; j <= 400; ++j) {
      const double y = -4.0 + 8.0 * j / 400.0;
      out << y << ',' << kx.density(c.t, 0.0, y) * y * y << ',' << ky.density(c.t, 0.0, y) * y * y << '\n';
    }
  }
}

void sde_crosscheck(const RunConfig& c, Checks& checks, json& results) {
  const CatalogEntry entry = resolve(c.kernel);
  const TransitionKernel& k = entry.kernel;
  const RngPolicy policy(c.seed);
  std::vector<double> ends;
  std::string method;
  if (const auto* f = std::get_if<FlippedBesselFamily>(&k.family())) {
    ends = poisson_flip_endpoints(c.x, c.t, c.n_samples, f->variant, policy, 1, c.threads);
    method = "poisson_flip";
  } else if (std::holds_alternative<Bessel3Family>(k.family())) {
    ends = poisson_flip_endpoints(c.x, c.t, c.n_samples, FlipVariant::X, policy, 1, c.threads);
    for (double& v : ends) v = std::abs(v);
    method = "bessel_radius";
  } else {
    RealFunction mu = [](double) { return 0.0; };
    if (entry.drift) {
      mu = *entry.drift;
    } else if (!std::holds_alternative<GaussianFamily>(k.family())) {
      throw UsageError("no simulation scheme for kernel '" + c.kernel + "'");
    }
    ends = euler_maruyama_endpoints(mu, c.x, c.t, c.dt, c.n_samples, policy, 1, c.threads);
    method = "euler_maruyama";
  }
  const Window w = mass_window(k, c.t, c.x);
  double lo = *std::min_element(w.centers.begin(), w.centers.end()) - 5.0 * w.scale;
  double hi = *std::max_element(w.centers.begin(), w.centers.end()) + 5.0 * w.scale;
  if (half_line(k)) lo = std::max(lo, 0.0);
  if (std::holds_alternative<Bessel3Family>(k.family())) hi += 3.0 * w.scale;
  const auto lebesgue = [&](double y) {
    return k.measure().contains(y) ? k.density(c.t, c.x, y) * k.measure().density(y) : 0.0;
  };
  const double tv = histogram_tv(ends, lebesgue, c.bins, lo, hi);
  checks.at_most("sde_density_tv", tv, c.tv_tol);
  results["kernel"] = entry.id;
  results["method"] = method;
  results["draws"] = ends.size();
  results["window"] = {lo, hi};
  results["total_variation"] = tv;
  if (!c.csv.empty()) {
    auto out = open_csv(c);
    out << "bin_lo,bin_hi,empirical,model\n";
    const double width = (hi - lo) / c.bins;
    std::vector<double> counts(static_cast<std::size_t>(c.bins), 0.0);
    for (double v : ends) {
      if (v >= lo && v < hi) counts[std::min<std::size_t>(static_cast<std::size_t>((v - lo) / width), counts.size() - 1)] += 1.0;
    }
    for (int i = 0; i < c.bins; ++i) {
      const double a = lo + i * width;
      out << a << ',' << a + width << ',' << counts[static_cast<std::size_t>(i)] / static_cast<double>(ends.size())
          << ',' << integrate(lebesgue, a, a + width, Quadrature{}).value << '\n';
    }
  }
}

void build_app(CLI::App& app, RunConfig& c) {
  app.description("Markov bridge and Doob h-transform experiments");
  app.set_config("--config", "", "file of `key = value` lines; command-line flags take precedence");
  app.add_option("command", c.command, "experiment to run")->required()->check(CLI::IsMember(command_names()));
  app.add_option("--kernel", c.kernel, "kernel id (gaussian, drift:k, tanh:k:c, bessel3, flipbessel:X|Y)");
  app.add_option("--a", c.kernel_a, "first kernel id for comparisons");
  app.add_option("--b", c.kernel_b, "second kernel id for comparisons");
  app.add_option("--x", c.x, "start state");
  app.add_option("--t", c.t, "horizon");
  app.add_option("--y", c.y, "end state");
  app.add_option("--grid-points", c.grid_points, "equispaced grid size including both ends");
  app.add_option("--grid-times", c.grid_times, "explicit grid times")->delimiter(',');
  app.add_option("--n", c.n_samples, "number of samples");
  app.add_option("--energy-n", c.energy_samples, "path draws per pool in the energy test");
  app.add_option("--seed", c.seed, "master seed");
  app.add_option("--threads", c.threads, "worker threads (0: machine parallelism)");
  app.add_option("--tol", c.tol, "tolerance of kernel residual checks");
  app.add_option("--alpha", c.alpha, "significance level of two-sample tests");
  app.add_option("--tv-tol", c.tv_tol, "total-variation tolerance of the SDE cross-check");
  app.add_option("--permutations", c.permutations, "permutations for permutation tests");
  app.add_option("--chain", c.chain, "chain file, random:n:seed or killed:n:seed");
  app.add_option("--dt", c.dt, "Euler-Maruyama step");
  app.add_option("--bins", c.bins, "histogram bins");
  app.add_option("--ks-method", c.ks_method, "asymptotic or permutation")
      ->check(CLI::IsMember({"asymptotic", "permutation"}));
  app.add_option("--sampler", c.sampler, "bridge sampler: automatic or generic")
      ->check(CLI::IsMember({"automatic", "generic"}));
  app.add_option("--output", c.output, "JSON report path (default: stdout)");
  app.add_option("--csv", c.csv, "CSV artifact path");
}

}  // namespace

void RunConfig::validate() const {
  if (std::find(command_names().begin(), command_names().end(), command) == command_names().end()) {
    throw UsageError("unknown command '" + command + "'");
  }
  if (!(t > 0.0) || !std::isfinite(t)) throw UsageError("--t must be > 0");
  if (!std::isfinite(x) || !std::isfinite(y)) throw UsageError("--x and --y must be finite");
  if (n_samples < 1) throw UsageError("--n must be >= 1");
  if (grid_points < 2) throw UsageError("--grid-points must be >= 2");
  for (std::size_t i = 0; i < grid_times.size(); ++i) {
    if (grid_times[i] < 0.0 || grid_times[i] > t || (i > 0 && !(grid_times[i] > grid_times[i - 1]))) {
      throw UsageError("--grid-times must increase inside [0, t]");
    }
  }
  if (!(tol > 0.0) || !(alpha > 0.0 && alpha < 1.0) || !(tv_tol > 0.0)) {
    throw UsageError("tolerances must be positive and alpha in (0, 1)");
  }
  if (!(dt > 0.0) || dt > t) throw UsageError("--dt must satisfy 0 < dt <= t");
  if (bins < 10) throw UsageError("--bins must be >= 10");
  if (permutations < 1) throw UsageError("--permutations must be >= 1");
  if (command == "compare-bridges" && permutations < 200) {
    throw UsageError("the energy test needs --permutations >= 200");
  }
  if (command == "compare-bridges" && std::min(n_samples, energy_samples) < 50) {
    throw UsageError("compare-bridges needs --n >= 50");
  }
  if (command == "verify-kernels" || command == "sample-bridge" || command == "sde-crosscheck") {
    resolve(kernel);
  }
  if (command == "compare-bridges" || command == "extract-psi") {
    resolve(kernel_a);
    resolve(kernel_b);
  }
}

json RunConfig::to_json() const {
  return {{"command", command},
          {"kernel", kernel},
          {"a", kernel_a},
          {"b", kernel_b},
          {"x", x},
          {"t", t},
          {"y", y},
          {"grid_points", grid_points},
          {"grid_times", grid_times},
          {"n", n_samples},
          {"energy_n", energy_samples},
          {"seed", seed},
          {"threads", threads},
          {"tol", tol},
          {"alpha", alpha},
          {"tv_tol", tv_tol},
          {"permutations", permutations},
          {"chain", chain},
          {"dt", dt},
          {"bins", bins},
          {"ks_method", ks_method},
          {"sampler", sampler}};
}

RunConfig parse_args(int argc, const char* const* argv) {
  CLI::App app;
  RunConfig c;
  build_app(app, c);
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success&) {
    std::cout << app.help();
    c.command.clear();
    return c;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  c.validate();
  return c;
}

RunResult run(const RunConfig& config) {
  config.validate();
  Checks checks;
  json results = json::object();
  const std::string& cmd = config.command;
  try {
    if (cmd == "verify-kernels") verify_kernels(config, checks, results);
    else if (cmd == "verify-chain") verify_chain(config, checks, results);
    else if (cmd == "sample-bridge") sample_bridge_command(config, checks, results);
    else if (cmd == "compare-bridges") compare_bridges(config, checks, results);
    else if (cmd == "extract-psi") extract_psi(config, checks, results);
    else if (cmd == "bessel-demo") bessel_demo(config, checks, results);
    else if (cmd == "sde-crosscheck") sde_crosscheck(config, checks, results);
  } catch (const UsageError&) {
    throw;
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  results["checks"] = checks.table();
  RunResult r;
  r.exit_code = checks.failures().empty() ? 0 : 1;
  r.report = {{"schema", 1},
              {"command", cmd},
              {"generated_at", timestamp()},
              {"config", config.to_json()},
              {"results", results},
              {"failures", checks.failures()},
              {"passed", r.exit_code == 0}};
  return r;
}

int cli_main(int argc, const char* const* argv) {
  try {
    const RunConfig config = parse_args(argc, argv);
    if (config.command.empty()) return 0;
    const RunResult r = run(config);
    const std::string text = r.report.dump(2);
    if (config.output.empty()) {
      std::cout << text << '\n';
    } else {
      std::ofstream out(config.output);
      if (!out) throw UsageError("cannot write report '" + config.output + "'");
      out << text << '\n';
    }
    if (r.exit_code != 0) {
      for (const auto& f : r.report["failures"]) {
        std::cerr << "check failed: " << f["invariant"].get<std::string>() << " observed "
                  << f["observed"].dump() << " threshold " << f["threshold"].dump() << '\n';
      }
    }
    return r.exit_code;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nrun with --help for options\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace bridgekit
