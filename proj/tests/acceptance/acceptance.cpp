// End-to-end acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Optional arguments select criteria by number.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bridgekit/bridge.hpp"
#include "bridgekit/catalog.hpp"
#include "bridgekit/chain.hpp"
#include "bridgekit/errors.hpp"
#include "bridgekit/residuals.hpp"
#include "bridgekit/sde.hpp"
#include "bridgekit/stats.hpp"

using namespace bridgekit;

namespace {

constexpr std::uint64_t kSeed = 7;
constexpr double kAlpha = 0.01;

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double relative_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(a)); }

double fraction_positive(const std::vector<double>& v) {
  const auto k = std::count_if(v.begin(), v.end(), [](double a) { return a > 0.0; });
  return static_cast<double>(k) / static_cast<double>(v.size());
}

std::vector<double> linspace(double lo, double hi, int points) {
  std::vector<double> v;
  for (int i = 0; i < points; ++i) v.push_back(lo + (hi - lo) * i / (points - 1));
  return v;
}

bool half_line(const TransitionKernel& k) { return k.measure().support().lo == 0.0; }

const std::vector<std::string> kCatalog{"gaussian",    "drift:1",      "drift:-0.5",
                                        "tanh:0.5:0",  "tanh:1:1",     "tanh:2:0",
                                        "bessel3",     "flipbessel:X", "flipbessel:Y"};

std::vector<double> states_for(const TransitionKernel& k) {
  return half_line(k) ? std::vector<double>{0.0, 0.5, 2.0} : std::vector<double>{-1.5, 0.0, 0.5, 2.0};
}

// Gaussian and tanh-drift bridges from (0, 1, 0.5) coincide.
void tanh_bridge_equality(Outcome& out) {
  const RngPolicy policy(kSeed);
  const double x = 0.0, t = 1.0, y = 0.5;
  const BridgeSpec gauss{gaussian_kernel(), x, t, y};
  SamplerOptions generic;
  generic.method = SamplerOptions::Method::generic;
  const std::vector<double> mid_grid{0.0, 0.5 * t, t};
  const auto path_grid = uniform_grid(t, 9);
  double worst_gap = 0.0, min_ks = 1.0, min_energy = 1.0;
  std::uint32_t domain = 100;
  for (double k : {0.5, 1.0, 2.0}) {
    for (double c : {0.0, 1.0}) {
      const BridgeSpec tanh{tanh_drift_kernel(k, c), x, t, y};
      for (int i = 1; i <= 9; ++i) {
        const double s = t * i / 10.0;
        for (double z : linspace(-3.0, 3.0, 9)) {
          worst_gap = std::max(worst_gap, relative_gap(bridge_transition_lebesgue_density(gauss, x, 0.0, z, s),
                                                       bridge_transition_lebesgue_density(tanh, x, 0.0, z, s)));
        }
      }
      const auto ma = sample_bridges(gauss, mid_grid, 100000, policy, domain + 1).column(1);
      const auto mb = sample_bridges(tanh, mid_grid, 100000, policy, domain + 2, 0, generic).column(1);
      const double ks = ks_two_sample(ma, mb, kSeed).p_value;
      const PathPool pa = sample_bridges(gauss, path_grid, 5000, policy, domain + 3);
      const PathPool pb = sample_bridges(tanh, path_grid, 5000, policy, domain + 4, 0, generic);
      const double energy = energy_distance_test(pa, pb, 500, policy, domain + 5).p_value;
      out.detail << " k=" << k << ",c=" << c << ":ks_p=" << ks << ",energy_p=" << energy;
      out.require(ks > kAlpha, "ks k=" + std::to_string(k) + " c=" + std::to_string(c));
      out.require(energy > kAlpha, "energy k=" + std::to_string(k) + " c=" + std::to_string(c));
      min_ks = std::min(min_ks, ks);
      min_energy = std::min(min_energy, energy);
      domain += 10;
    }
  }
  out.detail << " max_density_gap=" << worst_gap << " min_ks_p=" << min_ks << " min_energy_p=" << min_energy;
  out.require(worst_gap <= 1e-12, "density gap");
}

double origin_formula(double t, double y, bool plus) {
  const double parity = plus ? 1.0 + std::exp(-2.0 * t) : 1.0 - std::exp(-2.0 * t);
  return parity / std::sqrt(2.0 * std::numbers::pi * t * t * t) * std::exp(-y * y / (2.0 * t));
}

// Flipped Bessel densities from the origin and the parity of the sign.
void flipped_bessel_origin(Outcome& out) {
  const auto kx = flipped_bessel_kernel(FlipVariant::X);
  const auto ky = flipped_bessel_kernel(FlipVariant::Y);
  double formula = 0.0, swap = 0.0;
  for (double t : {0.5, 1.0, 2.0}) {
    for (double y : {0.5, 1.0, 2.0}) {
      const double plus = origin_formula(t, y, true);
      const double minus = origin_formula(t, y, false);
      formula = std::max({formula, std::abs(one_sided_density(kx, t, 0.0, +1, y) / plus - 1.0),
                          std::abs(one_sided_density(kx, t, 0.0, -1, y) / minus - 1.0),
                          std::abs(kx.density(t, 0.0, y) / plus - 1.0),
                          std::abs(ky.density(t, 0.0, y) / minus - 1.0)});
      swap = std::max({swap, std::abs(kx.density(t, 0.0, y) - one_sided_density(ky, t, 0.0, +1, y)),
                       std::abs(ky.density(t, 0.0, y) - one_sided_density(kx, t, 0.0, -1, y)),
                       std::abs(kx.density(t, 0.0, y) - ky.density(t, 0.0, -y)),
                       std::abs(kx.density(t, 0.0, -y) - ky.density(t, 0.0, y))});
    }
  }
  out.detail << " formula_rel_err=" << formula << " swap_err=" << swap;
  out.require(formula <= 1e-10, "origin formula");
  out.require(swap == 0.0, "variant swap");
  const RngPolicy policy(kSeed);
  std::uint32_t domain = 200;
  for (double t : {0.5, 1.0, 2.0}) {
    const auto ends = poisson_flip_endpoints(0.0, t, 1000000, FlipVariant::X, policy, domain++);
    std::vector<double> positive(ends.size());
    std::transform(ends.begin(), ends.end(), positive.begin(), [](double v) { return v > 0.0 ? 1.0 : 0.0; });
    const auto est = mc_mean_with_se(positive);
    const double z = std::abs(est.mean - 0.5 * (1.0 + std::exp(-2.0 * t))) / est.standard_error;
    out.detail << " t=" << t << ":fraction=" << est.mean << ",z=" << z;
    out.require(z <= 3.0, "fraction t=" + std::to_string(t));
  }
}

// X and Y variants share every bridge away from the origin and split at it.
void counterexample_separation(Outcome& out) {
  const auto kx = flipped_bessel_kernel(FlipVariant::X);
  const auto ky = flipped_bessel_kernel(FlipVariant::Y);
  const double t = 1.0;
  double off = 0.0;
  for (double x : {-1.0, 0.5, 1.5}) {
    for (double y : {-0.5, 1.0, 2.0}) {
      const BridgeSpec a{kx, x, t, y};
      const BridgeSpec b{ky, x, t, y};
      for (double s : {0.2, 0.5}) {
        for (double s2 : {0.6, 0.9}) {
          for (double z : {-1.3, -0.3, 0.8}) {
            for (double z2 : {-1.2, 0.4, 1.7}) {
              off = std::max(off, relative_gap(bridge_transition_density(a, z, s, z2, s2),
                                               bridge_transition_density(b, z, s, z2, s2)));
            }
          }
        }
        for (double z : {-2.0, -0.7, 0.3, 1.1}) {
          off = std::max(off, relative_gap(bridge_marginal_density(a, s, z), bridge_marginal_density(b, s, z)));
        }
      }
    }
  }
  const RngPolicy policy(kSeed);
  const std::vector<double> grid{0.0, 1e-9 * t, 0.5 * t, t};
  const double fx = fraction_positive(sample_bridges({kx, 0.0, t, 1.0}, grid, 10000, policy, 301).column(1));
  const double fy = fraction_positive(sample_bridges({ky, 0.0, t, 1.0}, grid, 10000, policy, 302).column(1));
  out.detail << " off_origin_gap=" << off << " first_step_positive_x=" << fx << " first_step_positive_y=" << fy;
  out.require(off <= 1e-10, "off-origin bridges");
  out.require(fx == 1.0 && fy == 0.0, "first-step sign");
}

// Eigenvector of the rightmost eigenvalue from a dense eigensolver, scaled so entry 0 is 1.
Eigen::VectorXd rightmost_eigenvector(const Eigen::MatrixXd& g, double& lambda) {
  const Eigen::EigenSolver<Eigen::MatrixXd> solver(g);
  Eigen::Index best = 0;
  solver.eigenvalues().real().maxCoeff(&best);
  lambda = solver.eigenvalues()(best).real();
  const Eigen::VectorXd v = solver.eigenvectors().col(best).real();
  return v / v(0);
}

std::vector<std::size_t> spread_states(std::size_t n) {
  return {0, n / 3, (2 * n) / 3, n - 1};
}

// h-transforms of finite chains share their bridges.
void chain_bridge_invariance(Outcome& out) {
  const std::vector<double> ts{0.25, 0.5, 1.0, 2.0};
  const std::vector<double> fractions{0.25, 0.5, 0.75};
  const std::size_t sizes[] = {3, 8, 16};
  double worst_bridge = 0.0, worst_measure = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const std::size_t n = sizes[seed % 3];
    const ChainModel p = random_killed_chain(n, seed);
    const PerronPair e = perron_eigen(p);
    const ChainModel q = chain_h_transform(p, e.psi, e.lambda);
    const auto states = spread_states(n);
    const auto cmp = bridges_equal(p, q, bridge_grid(states, ts, states, fractions), 1e-10);
    worst_bridge = std::max(worst_bridge, cmp.max_deviation);
    out.require(cmp.equal, "bridges seed " + std::to_string(seed));
    double lambda = 0.0, lambda_dual = 0.0;
    const Eigen::VectorXd psi = rightmost_eigenvector(p.generator, lambda);
    const Eigen::VectorXd psi_hat = rightmost_eigenvector(dual_chain(p).generator, lambda_dual);
    const Eigen::VectorXd expected = p.weights.cwiseProduct(psi).cwiseProduct(psi_hat);
    // Scale-free: the ratio m^Y / (psi psi_hat m^X) must be constant across states.
    const Eigen::ArrayXd ratio = q.weights.array() / expected.array();
    worst_measure = std::max(worst_measure, (ratio / ratio(0) - 1.0).abs().maxCoeff());
    // Densities with respect to the two measures: q_t = exp(-lambda t) p_t / (psi psi_hat).
    const Eigen::MatrixXd pt = transition_matrix(p, 1.0) * p.weights.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd qt = transition_matrix(q, 1.0) * q.weights.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd predicted = std::exp(-lambda) * psi.cwiseInverse().asDiagonal() * pt *
                                      (psi_hat.cwiseInverse() / ratio(0)).asDiagonal();
    worst_measure = std::max(worst_measure, ((qt - predicted).array() / predicted.array()).abs().maxCoeff());
    worst_measure = std::max(worst_measure, std::abs(lambda - lambda_dual));
  }
  out.detail << " chains=50 max_bridge_gap=" << worst_bridge << " max_measure_rel_err=" << worst_measure;
  out.require(worst_bridge <= 1e-10, "bridge tolerance");
  out.require(worst_measure <= 1e-9, "measure relation");
}

// One shared bridge determines the h-transform.
void chain_single_bridge_recovery(Outcome& out) {
  const std::size_t sizes[] = {3, 8, 16};
  int verified = 0;
  double worst_psi = 0.0, worst_lambda = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const std::size_t n = sizes[seed % 3];
    const ChainModel p = random_killed_chain(n, 1000 + seed);
    const PerronPair e = perron_eigen(p);
    const ChainModel q = chain_h_transform(p, e.psi, e.lambda);
    const Recovery r = recover_from_single_bridge(p, q, 0, 1.0, n - 1);
    if (r.verified) ++verified;
    const Eigen::ArrayXd ratio = r.psi.array() / e.psi.array();
    worst_psi = std::max(worst_psi, (ratio - ratio(0)).abs().maxCoeff() / std::abs(ratio(0)));
    worst_lambda = std::max(worst_lambda, std::abs(r.lambda - e.lambda));
  }
  int false_positives = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const std::size_t n = sizes[seed % 3];
    const ChainModel p = random_killed_chain(n, 2000 + seed);
    const ChainModel q = seed % 2 == 0 ? random_killed_chain(n, 3000 + seed) : random_chain(n, 3000 + seed);
    try {
      if (recover_from_single_bridge(p, q, 0, 1.0, n - 1).verified) ++false_positives;
    } catch (const LinearityViolationError&) {
    }
  }
  out.detail << " verified=" << verified << "/50 max_psi_ratio_spread=" << worst_psi
             << " max_lambda_err=" << worst_lambda << " false_positives=" << false_positives << "/100";
  out.require(verified == 50, "verification");
  out.require(worst_psi <= 1e-9, "psi up to scale");
  out.require(worst_lambda <= 1e-9, "lambda");
  out.require(false_positives == 0, "false positives");
}

// Euler-Maruyama endpoints of dY = dB + tanh(Y) dt against the h-transform density.
void sde_crosscheck(Outcome& out) {
  const TransitionKernel k = tanh_drift_kernel(1.0, 0.0);
  const double x0 = 0.0, t = 1.0;
  const auto ends = euler_maruyama_endpoints([](double y) { return std::tanh(y); }, x0, t, 1e-3, 1000000,
                                             RngPolicy(kSeed), 600);
  const Window w = mass_window(k, t, x0);
  const double lo = *std::min_element(w.centers.begin(), w.centers.end()) - 5.0 * w.scale;
  const double hi = *std::max_element(w.centers.begin(), w.centers.end()) + 5.0 * w.scale;
  const auto lebesgue = [&](double y) { return k.density(t, x0, y) * k.measure().density(y); };
  const double tv = histogram_tv(ends, lebesgue, 60, lo, hi);
  out.detail << " draws=" << ends.size() << " window=[" << lo << "," << hi << "] tv=" << tv;
  out.require(tv < 0.02, "total variation");
}

// Normalization, Chapman-Kolmogorov and duality for every catalog kernel.
void hypothesis_suite(Outcome& out) {
  for (const std::string& id : kCatalog) {
    const CatalogEntry entry = parse_kernel_id(id);
    const TransitionKernel& k = entry.kernel;
    const auto states = states_for(k);
    double norm = 0.0, ck = 0.0, dual = 0.0;
    for (double t : {0.25, 1.0, 4.0}) {
      for (double x : states) {
        norm = std::max(norm, normalization_residual(k, t, x));
        for (double y : states) {
          if (y == 0.0 && half_line(k)) continue;
          ck = std::max(ck, chapman_kolmogorov_residual(k, 0.5 * t, 0.5 * t, x, y));
        }
      }
    }
    const std::vector<std::pair<double, double>> sets =
        half_line(k) ? std::vector<std::pair<double, double>>{{0.2, 1.0}, {0.5, 2.0}}
                     : std::vector<std::pair<double, double>>{{-1.0, 0.0}, {0.5, 2.0}};
    for (auto [flo, fhi] : sets) {
      for (auto [glo, ghi] : sets) {
        dual = std::max(dual, duality_residual(k, 1.0, indicator(flo, fhi), indicator(glo, ghi)));
      }
    }
    const double worst = std::max({norm, ck, dual});
    out.detail << ' ' << id << '=' << worst;
    out.require(worst < 1e-6, id);
  }
}

// Eigenpairs of the catalog and the martingale they induce.
void eigen_martingale(Outcome& out) {
  double worst = 0.0;
  for (const std::string& id : kCatalog) {
    const CatalogEntry entry = parse_kernel_id(id);
    for (const Eigenpair& e : entry.eigenpairs) {
      for (double t : {0.5, 1.0, 2.0}) {
        for (double x : states_for(entry.kernel)) {
          const double r = eigen_residual(entry.kernel, e, t, x);
          worst = std::max(worst, r);
          out.require(r < 1e-8, id + " " + e.label);
        }
      }
    }
  }
  out.detail << " max_eigen_residual=" << worst;
  struct Case {
    std::string name;
    TransitionKernel kernel;
    Eigenpair eig;
    double x0;
  };
  const std::vector<Case> cases{{"gaussian/cosh", gaussian_kernel(), cosh_eigenpair(1.0, 0.5), 0.0},
                                {"gaussian/exp", gaussian_kernel(), exp_eigenpair(-0.7), 0.3},
                                {"bessel3/sinh", bessel3_kernel(), bessel3_eigenpair(1.0), 0.5}};
  const RngPolicy policy(kSeed);
  std::uint32_t domain = 800;
  for (const Case& c : cases) {
    for (double t : {0.5, 1.0, 2.0}) {
      const std::vector<double> grid{0.0, t};
      const PathPool pool = sample_paths(c.kernel, c.x0, grid, 100000, policy, domain++);
      std::vector<double> ratios(pool.draws);
      for (std::size_t i = 0; i < pool.draws; ++i) ratios[i] = h_likelihood_ratio(c.eig, pool.path(i), t);
      const auto est = mc_mean_with_se(ratios);
      const double z = std::abs(est.mean - 1.0) / est.standard_error;
      out.detail << ' ' << c.name << ",t=" << t << ":mean=" << est.mean << ",z=" << z;
      out.require(z <= 3.0, c.name + " t=" + std::to_string(t));
    }
  }
}

// Reversed (0, 1, 1) Brownian bridges against (1, 1, 0) bridges.
void time_reversal(Outcome& out) {
  const TransitionKernel g = gaussian_kernel();
  const BridgeSpec forward{g, 0.0, 1.0, 1.0};
  const BridgeSpec backward{g, 1.0, 1.0, 0.0};
  const auto grid = uniform_grid(1.0, 5);
  const RngPolicy policy(kSeed);
  const PathPool a = sample_bridges(forward, grid, 100000, policy, 901);
  const PathPool b = sample_bridges(backward, grid, 100000, policy, 902);
  std::vector<double> reversed_mid(a.draws);
  for (std::size_t i = 0; i < a.draws; ++i) reversed_mid[i] = reverse(a.path(i), 1.0).value_at(0.5);
  const double p = ks_two_sample(reversed_mid, b.column(2), kSeed).p_value;
  double gap = 0.0;
  for (double s : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    for (double z : linspace(-2.5, 3.5, 25)) {
      gap = std::max(gap, relative_gap(bridge_marginal_density(forward, 1.0 - s, z),
                                       bridge_marginal_density(backward, s, z)));
    }
  }
  const double mass_gap = std::abs(bridge_marginal_mass(forward, 0.5, Interval{-1.0, 0.3, true, true}) -
                                   bridge_marginal_mass(backward, 0.5, Interval{-1.0, 0.3, true, true}));
  out.detail << " ks_p=" << p << " density_gap=" << gap << " mass_gap=" << mass_gap;
  out.require(p > kAlpha, "ks");
  out.require(gap <= 1e-10 && mass_gap <= 1e-10, "marginal densities");
}

// cosh recovered from gaussian and tanh-drift densities alone.
void eigenfunction_extraction(Outcome& out) {
  const TransitionKernel p = gaussian_kernel();
  const TransitionKernel q = tanh_drift_kernel(1.0, 0.0);
  const double end = 0.0, horizon = 1.0;
  const auto zs = linspace(-3.0, 3.0, 25);
  const double base = extract_eigen_ratio(p, q, end, horizon, 0.0, end);
  double worst = 0.0;
  for (double z : zs) {
    worst = std::max(worst, std::abs(extract_eigen_ratio(p, q, end, horizon, 0.0, z) / base / std::cosh(z) - 1.0));
  }
  double spread = 0.0;
  for (int i = 1; i <= 8; ++i) {
    const double s = horizon * i / 9.0;
    const double ref = base / extract_eigen_ratio(p, q, end, horizon, s, end);
    for (double z : zs) {
      const double r = extract_eigen_ratio(p, q, end, horizon, 0.0, z) / extract_eigen_ratio(p, q, end, horizon, s, z);
      spread = std::max(spread, std::abs(r / ref - 1.0));
    }
  }
  out.detail << " psi_rel_err=" << worst << " s_spread=" << spread;
  out.require(worst <= 1e-10, "cosh");
  out.require(spread <= 1e-10, "s-independence");
}

struct Criterion {
  int number;
  const char* name;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "tanh_bridge_equality", tanh_bridge_equality},
      {2, "flipped_bessel_origin", flipped_bessel_origin},
      {3, "counterexample_separation", counterexample_separation},
      {4, "chain_bridge_invariance", chain_bridge_invariance},
      {5, "chain_single_bridge_recovery", chain_single_bridge_recovery},
      {6, "sde_crosscheck", sde_crosscheck},
      {7, "hypothesis_suite", hypothesis_suite},
      {8, "eigen_martingale", eigen_martingale},
      {9, "time_reversal", time_reversal},
      {10, "eigenfunction_extraction", eigenfunction_extraction},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.contains(c.number)) continue;
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.passed = false;
      out.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!out.passed) ++failed;
    std::printf("%s %2d %s (%.1f s):%s\n", out.passed ? "PASS" : "FAIL", c.number, c.name, secs,
                out.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d failed\n", failed);
  return failed == 0 ? 0 : 1;
}
