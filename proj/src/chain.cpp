#include "bridgekit/chain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "bridgekit/errors.hpp"
#include "bridgekit/rng.hpp"

namespace bridgekit {

namespace {

constexpr std::uint32_t kChainDomain = 0xC4A1u;

double inf_norm(const Eigen::MatrixXd& a) { return a.cwiseAbs().rowwise().sum().maxCoeff(); }

void check_state(const ChainModel& chain, std::size_t x) {
  if (x >= chain.size()) throw DomainError("state index outside the chain");
}

bool strongly_connected(const Eigen::MatrixXd& g) {
  const Eigen::Index n = g.rows();
  auto reach = [&](bool transpose) {
    std::vector<char> seen(n, 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const Eigen::Index i = stack.back();
      stack.pop_back();
      for (Eigen::Index j = 0; j < n; ++j) {
        const double rate = transpose ? g(j, i) : g(i, j);
        if (j != i && rate > 0.0 && !seen[j]) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reach(false) && reach(true);
}

double eigen_residual_inf(const Eigen::MatrixXd& g, const Eigen::VectorXd& v, double lambda) {
  return (g * v - lambda * v).cwiseAbs().maxCoeff();
}

double eigen_tolerance(const Eigen::MatrixXd& g, const Eigen::VectorXd& v) {
  return 1e-10 * std::max(1.0, inf_norm(g)) * v.cwiseAbs().maxCoeff();
}

ChainModel stationary_weighted(Eigen::MatrixXd g) {
  ChainModel chain{std::move(g), {}};
  const Eigen::MatrixXd gt = chain.generator.transpose();
  PerronPair pi = perron_eigen(gt);
  chain.weights = pi.psi / pi.psi.sum();
  return chain;
}

// Transition matrices of one chain, memoised by time.
class TransitionCache {
 public:
  explicit TransitionCache(const ChainModel& chain) : chain_(chain) {}
  const Eigen::MatrixXd& at(double t) {
    auto it = cache_.find(t);
    if (it == cache_.end()) it = cache_.emplace(t, transition_matrix(chain_, t)).first;
    return it->second;
  }

 private:
  const ChainModel& chain_;
  std::map<double, Eigen::MatrixXd> cache_;
};

}  // namespace

void ChainModel::validate() const {
  const Eigen::Index n = generator.rows();
  if (n == 0 || generator.cols() != n) throw DomainError("generator must be a non-empty square matrix");
  if (weights.size() != n) throw DomainError("weights must have one entry per state");
  if (!generator.allFinite() || !weights.allFinite()) throw DomainError("chain entries must be finite");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(weights[i] > 0.0)) throw DomainError("reference weights must be positive");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && generator(i, j) < 0.0) throw DomainError("off-diagonal rates must be >= 0");
    }
    const double scale = std::max(1.0, generator.row(i).cwiseAbs().sum());
    if (generator.row(i).sum() > 1e-12 * scale) throw DomainError("generator rows must sum to <= 0");
  }
  if (n > 1 && !strongly_connected(generator)) throw DomainError("chain is not irreducible");
}

bool ChainModel::conservative(double tol) const {
  for (Eigen::Index i = 0; i < generator.rows(); ++i) {
    if (std::abs(generator.row(i).sum()) > tol * std::max(1.0, generator.row(i).cwiseAbs().sum())) {
      return false;
    }
  }
  return true;
}

ChainModel random_chain(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw DomainError("random chains need at least two states");
  Philox4x32 rng = RngPolicy(seed).stream(kChainDomain, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (i != j) g(i, j) = u(rng);
    }
    g(i, i) = -(g.row(i).sum());
  }
  return stationary_weighted(std::move(g));
}

ChainModel random_killed_chain(std::size_t n, std::uint64_t seed) {
  ChainModel chain = random_chain(n, seed);
  Philox4x32 rng = RngPolicy(seed).stream(kChainDomain, 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < chain.generator.rows(); ++i) chain.generator(i, i) -= u(rng);
  return chain;
}

ChainModel read_chain(std::istream& in) {
  long n = 0;
  if (!(in >> n) || n < 1) throw std::invalid_argument("chain file must start with a positive state count");
  ChainModel chain{Eigen::MatrixXd(n, n), Eigen::VectorXd(n)};
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < n; ++j) {
      if (!(in >> chain.generator(i, j))) throw std::invalid_argument("chain file has too few generator entries");
    }
  }
  for (long i = 0; i < n; ++i) {
    if (!(in >> chain.weights[i])) throw std::invalid_argument("chain file has too few weights");
  }
  chain.validate();
  return chain;
}

void write_chain(std::ostream& out, const ChainModel& chain) {
  const Eigen::Index n = chain.generator.rows();
  out << n << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) out << (j ? " " : "") << chain.generator(i, j);
    out << '\n';
  }
  for (Eigen::Index i = 0; i < n; ++i) out << (i ? " " : "") << chain.weights[i];
  out << '\n';
}

ChainModel load_chain(std::string_view source) {
  const bool killed = source.starts_with("killed:");
  if (source.starts_with("random:") || killed) {
    const std::string_view rest = source.substr(7);
    const auto colon = rest.find(':');
    if (colon == std::string_view::npos) throw std::invalid_argument("expected random:n:seed");
    std::size_t n = 0;
    std::uint64_t seed = 0;
    const auto a = rest.substr(0, colon);
    const auto b = rest.substr(colon + 1);
    if (std::from_chars(a.data(), a.data() + a.size(), n).ptr != a.data() + a.size() ||
        std::from_chars(b.data(), b.data() + b.size(), seed).ptr != b.data() + b.size() ||
        a.empty() || b.empty()) {
      throw std::invalid_argument("malformed chain source '" + std::string(source) + "'");
    }
    return killed ? random_killed_chain(n, seed) : random_chain(n, seed);
  }
  std::ifstream in{std::string(source)};
  if (!in) throw std::invalid_argument("cannot open chain file '" + std::string(source) + "'");
  return read_chain(in);
}

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a) {
  const double norm = inf_norm(a);
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd b = a / std::ldexp(1.0, squarings);
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k < 64; ++k) {
    term = term * b / static_cast<double>(k);
    sum += term;
    if (inf_norm(term) <= 1e-16 * inf_norm(sum)) break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

Eigen::MatrixXd transition_matrix(const ChainModel& chain, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("transition time must be >= 0");
  if (t == 0.0) return Eigen::MatrixXd::Identity(chain.generator.rows(), chain.generator.cols());
  return matrix_exponential(t * chain.generator);
}

PerronPair perron_eigen(const Eigen::MatrixXd& g, double tol, std::size_t max_iterations) {
  const Eigen::Index n = g.rows();
  if (n == 0 || g.cols() != n) throw DomainError("perron_eigen needs a square matrix");
  const double shift = (-g.diagonal()).maxCoeff() + 1.0;
  const Eigen::MatrixXd a = g + shift * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    Eigen::VectorXd w = a * v;
    w /= w.sum();
    const double change = (w - v).cwiseAbs().maxCoeff();
    v = std::move(w);
    if (change <= tol * v.cwiseAbs().maxCoeff()) {
      PerronPair out;
      out.psi = v / v[0];
      const Eigen::VectorXd gp = g * out.psi;
      out.lambda = gp.dot(out.psi) / out.psi.squaredNorm();
      out.iterations = it;
      return out;
    }
  }
  throw ConvergenceError("power iteration did not converge", max_iterations);
}

PerronPair perron_eigen(const ChainModel& chain) { return perron_eigen(chain.generator); }

ChainModel dual_chain(const ChainModel& chain) {
  const Eigen::VectorXd& m = chain.weights;
  ChainModel dual{chain.generator.transpose(), m};
  for (Eigen::Index y = 0; y < m.size(); ++y) {
    for (Eigen::Index x = 0; x < m.size(); ++x) dual.generator(y, x) *= m[x] / m[y];
  }
  return dual;
}

Eigen::MatrixXd conjugate_generator(const Eigen::MatrixXd& g, const Eigen::VectorXd& psi,
                                    double lambda) {
  Eigen::MatrixXd out = psi.cwiseInverse().asDiagonal() * g * psi.asDiagonal();
  out.diagonal().array() -= lambda;
  return out;
}

ChainModel chain_h_transform(const ChainModel& chain, const Eigen::VectorXd& psi, double lambda) {
  if (psi.size() != chain.generator.rows()) throw DomainError("psi must have one entry per state");
  const double residual = eigen_residual_inf(chain.generator, psi, lambda);
  if (residual > eigen_tolerance(chain.generator, psi)) {
    throw EigenPreconditionError("psi is not an eigenvector of the generator for lambda", residual);
  }
  const PerronPair dual = perron_eigen(dual_chain(chain));
  return chain_h_transform(chain, psi, dual.psi, lambda);
}

ChainModel chain_h_transform(const ChainModel& chain, const Eigen::VectorXd& psi,
                             const Eigen::VectorXd& psi_hat, double lambda) {
  const Eigen::Index n = chain.generator.rows();
  if (psi.size() != n || psi_hat.size() != n) throw DomainError("eigenvectors must match the state count");
  if ((psi.array() <= 0.0).any() || (psi_hat.array() <= 0.0).any()) {
    throw DomainError("eigenvectors must be strictly positive");
  }
  const double residual = eigen_residual_inf(chain.generator, psi, lambda);
  if (residual > eigen_tolerance(chain.generator, psi)) {
    throw EigenPreconditionError("psi is not an eigenvector of the generator for lambda", residual);
  }
  const Eigen::MatrixXd g_hat = dual_chain(chain).generator;
  const double dual_residual = eigen_residual_inf(g_hat, psi_hat, lambda);
  if (dual_residual > eigen_tolerance(g_hat, psi_hat)) {
    throw EigenPreconditionError("psi_hat is not an eigenvector of the dual generator for lambda",
                                 dual_residual);
  }
  ChainModel out{conjugate_generator(chain.generator, psi, lambda), {}};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.generator(i, i) = 0.0;
    out.generator(i, i) = -out.generator.row(i).sum();
  }
  out.weights = chain.weights.cwiseProduct(psi).cwiseProduct(psi_hat);
  return out;
}

Eigen::VectorXd chain_bridge_distribution(const ChainModel& chain, std::size_t x, double t,
                                          std::size_t y, double s) {
  check_state(chain, x);
  check_state(chain, y);
  if (!(s > 0.0 && s < t)) throw DomainError("chain bridge needs 0 < s < t");
  const Eigen::MatrixXd ps = transition_matrix(chain, s);
  const Eigen::MatrixXd pr = transition_matrix(chain, t - s);
  const double norm = transition_matrix(chain, t)(x, y);
  return ps.row(x).transpose().cwiseProduct(pr.col(y)) / norm;
}

std::vector<BridgePoint> bridge_grid(std::span<const std::size_t> xs, std::span<const double> ts,
                                     std::span<const std::size_t> ys,
                                     std::span<const double> s_fractions) {
  std::vector<BridgePoint> out;
  for (std::size_t x : xs) {
    for (double t : ts) {
      for (std::size_t y : ys) {
        for (double f : s_fractions) out.push_back({x, t, y, f * t});
      }
    }
  }
  return out;
}

BridgeComparison bridges_equal(const ChainModel& a, const ChainModel& b,
                               std::span<const BridgePoint> grid, double tol) {
  if (a.size() != b.size()) throw DomainError("chains must have the same state count");
  TransitionCache ca(a);
  TransitionCache cb(b);
  BridgeComparison out;
  for (const BridgePoint& pt : grid) {
    check_state(a, pt.x);
    check_state(a, pt.y);
    if (!(pt.s > 0.0 && pt.s < pt.t)) throw DomainError("chain bridge needs 0 < s < t");
    auto bridge = [&](TransitionCache& c) {
      const double norm = c.at(pt.t)(pt.x, pt.y);
      Eigen::VectorXd v = c.at(pt.s).row(pt.x).transpose();
      return Eigen::VectorXd(v.cwiseProduct(c.at(pt.t - pt.s).col(pt.y)) / norm);
    };
    const double dev = (bridge(ca) - bridge(cb)).cwiseAbs().maxCoeff();
    if (dev >= out.max_deviation) {
      out.max_deviation = dev;
      out.worst = pt;
    }
  }
  out.equal = out.max_deviation <= tol;
  return out;
}

Recovery recover_from_single_bridge(const ChainModel& p, const ChainModel& q, std::size_t x0,
                                    double t0, std::size_t y0) {
  if (p.size() != q.size()) throw DomainError("chains must have the same state count");
  check_state(p, x0);
  check_state(p, y0);
  if (!(t0 > 0.0)) throw DomainError("bridge horizon must be > 0");
  constexpr int kGrid = 8;
  constexpr double kBridgeTol = 1e-10;
  constexpr double kRatioTol = 1e-9;
  constexpr double kLinearityTol = 1e-8;
  constexpr double kVerifyTol = 1e-9;

  TransitionCache cp(p);
  TransitionCache cq(q);
  std::vector<double> s_grid;
  for (int i = 1; i <= kGrid; ++i) s_grid.push_back(t0 * i / (kGrid + 1));

  Recovery out;
  std::ostringstream diag;

  // The single bridge: marginals and transitions on the s-grid.
  auto marginal = [&](TransitionCache& c, double s) {
    const double norm = c.at(t0)(x0, y0);
    return Eigen::VectorXd(c.at(s).row(x0).transpose().cwiseProduct(c.at(t0 - s).col(y0)) / norm);
  };
  auto transition = [&](TransitionCache& c, double s, double s2) {
    Eigen::MatrixXd m = c.at(s2 - s);
    for (Eigen::Index z = 0; z < m.rows(); ++z) {
      for (Eigen::Index z2 = 0; z2 < m.cols(); ++z2) {
        m(z, z2) *= c.at(t0 - s2)(z2, y0) / c.at(t0 - s)(z, y0);
      }
    }
    return m;
  };
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    out.bridge_deviation = std::max(
        out.bridge_deviation, (marginal(cp, s_grid[i]) - marginal(cq, s_grid[i])).cwiseAbs().maxCoeff());
    if (i + 1 < s_grid.size()) {
      out.bridge_deviation =
          std::max(out.bridge_deviation, (transition(cp, s_grid[i], s_grid[i + 1]) -
                                          transition(cq, s_grid[i], s_grid[i + 1]))
                                             .cwiseAbs()
                                             .maxCoeff());
    }
  }
  if (out.bridge_deviation > kBridgeTol) {
    diag << "bridges at (" << x0 << ", " << t0 << ", " << y0 << ") differ by "
         << out.bridge_deviation;
    out.diagnostic = diag.str();
    return out;
  }

  // psi_s = p_{t0-s}(., y0) / q_{t0-s}(., y0), both as densities against m_P.
  auto psi_s = [&](double s) {
    return Eigen::VectorXd(cp.at(t0 - s).col(y0).cwiseQuotient(cq.at(t0 - s).col(y0)));
  };
  const Eigen::VectorXd psi0 = psi_s(0.0);
  std::vector<double> rates;
  for (double s : s_grid) {
    const Eigen::VectorXd ps = psi_s(s);
    const Eigen::VectorXd ratio = psi0.cwiseQuotient(ps);
    out.ratio_spread = std::max(out.ratio_spread,
                                (ratio / ratio[y0]).array().abs().maxCoeff() - 1.0);
    out.ratio_spread = std::max(out.ratio_spread,
                                1.0 - (ratio / ratio[y0]).array().abs().minCoeff());
    rates.push_back(-std::log(ps[y0] / psi0[y0]) / s);
  }
  double lambda = 0.0;
  for (double r : rates) lambda += r;
  lambda /= static_cast<double>(rates.size());
  for (double r : rates) out.lambda_spread = std::max(out.lambda_spread, std::abs(r - lambda));
  if (out.lambda_spread > kLinearityTol) {
    throw LinearityViolationError("lambda_s / s is not constant across the s-grid",
                                  out.lambda_spread);
  }
  out.lambda = lambda;
  out.psi = psi0 / psi0[0];
  if (out.ratio_spread > kRatioTol) {
    diag << "psi_0 / psi_s depends on the state (spread " << out.ratio_spread << ")";
    out.diagnostic = diag.str();
    return out;
  }

  const PerronPair dual = perron_eigen(dual_chain(p));
  if (std::abs(dual.lambda - lambda) > kVerifyTol * std::max(1.0, std::abs(lambda))) {
    diag << "dual Perron root " << dual.lambda << " differs from lambda " << lambda;
    out.diagnostic = diag.str();
    return out;
  }
  const Eigen::VectorXd c =
      q.weights.cwiseQuotient(p.weights.cwiseProduct(out.psi).cwiseProduct(dual.psi));
  out.measure_deviation = (c / c[0]).array().abs().maxCoeff() - 1.0;
  out.measure_deviation = std::max(out.measure_deviation, 1.0 - (c / c[0]).array().abs().minCoeff());
  out.psi_hat = dual.psi * c[0];
  if (out.measure_deviation > kVerifyTol) {
    diag << "m_Q is not proportional to psi psi_hat m_P (deviation " << out.measure_deviation << ")";
    out.diagnostic = diag.str();
    return out;
  }

  try {
    const ChainModel rebuilt = chain_h_transform(p, out.psi, out.psi_hat, lambda);
    TransitionCache cr(rebuilt);
    for (double t : {0.5 * t0, t0, 2.0 * t0}) {
      out.transition_deviation =
          std::max(out.transition_deviation, (cr.at(t) - cq.at(t)).cwiseAbs().maxCoeff());
    }
    out.measure_deviation = std::max(
        out.measure_deviation,
        (rebuilt.weights - q.weights).cwiseQuotient(q.weights).cwiseAbs().maxCoeff());
  } catch (const EigenPreconditionError& e) {
    diag << "recovered pair fails the eigen check: " << e.what();
    out.diagnostic = diag.str();
    return out;
  }
  out.verified = out.transition_deviation <= kVerifyTol && out.measure_deviation <= kVerifyTol;
  if (!out.verified) {
    diag << "h-transform of P misses Q by " << out.transition_deviation;
    out.diagnostic = diag.str();
  }
  return out;
}

TransitionKernel chain_kernel(const ChainModel& chain) {
  chain.validate();
  auto forward = std::make_shared<const ChainModel>(chain);
  auto backward = std::make_shared<const ChainModel>(dual_chain(chain));
  auto density_of = [](std::shared_ptr<const ChainModel> c) {
    return [c](double t, double x, double y) {
      const auto i = static_cast<Eigen::Index>(x);
      const auto j = static_cast<Eigen::Index>(y);
      return transition_matrix(*c, t)(i, j) / c->weights[j];
    };
  };
  TransitionKernel::Options opts;
  opts.dual = density_of(backward);
  std::vector<double> w(chain.weights.data(), chain.weights.data() + chain.weights.size());
  return TransitionKernel("chain", ReferenceMeasure::finite(std::move(w)), density_of(forward),
                          std::move(opts));
}

}  // namespace bridgekit
