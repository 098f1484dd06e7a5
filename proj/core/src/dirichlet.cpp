#include "nlresolvent/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace nlresolvent {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
// Newton checks allowed once the stopping criteria hold.
constexpr int kMaxPolish = 100;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Potential / options

Potential Potential::constant(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw InvalidParameter("constant potential must be positive and finite, got " + fmt(c));
  }
  return Potential{[c](VertexId) { return c; }, c, "const:" + fmt(c)};
}

Potential Potential::degree_shifted(const WeightedGraph& g, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw InvalidParameter("potential shift must be positive and finite");
  }
  return Potential{[g, c](VertexId x) { return c + g.degree(x) / g.measure(x); },
                   c, "deg:" + fmt(c)};
}

void SolveOptions::check() const {
  if (!(sweep_tol > 0.0) || !(residual_tol > 0.0) || !(scalar_root_tol > 0.0)) {
    throw InvalidParameter("solver tolerances must be positive");
  }
  if (max_sweeps < 1) {
    throw InvalidParameter("max_sweeps must be at least 1");
  }
}

// ---------------------------------------------------------------------------
// Domain

Domain::Domain(const WeightedGraph& g, std::span<const VertexId> U)
    : vertices_(U.begin(), U.end()) {
  const std::size_t n = vertices_.size();
  sorted_index_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) sorted_index_.emplace_back(vertices_[i], i);
  std::sort(sorted_index_.begin(), sorted_index_.end());
  for (std::size_t i = 1; i < n; ++i) {
    if (sorted_index_[i].first == sorted_index_[i - 1].first) {
      throw InvalidParameter("vertex " + std::to_string(sorted_index_[i].first) +
                             " appears twice in U");
    }
  }

  degree_.resize(n);
  measure_.resize(n);
  offsets_.assign(n + 1, 0);
  std::vector<Neighbor> nbrs;
  for (std::size_t i = 0; i < n; ++i) {
    const VertexId x = vertices_[i];
    nbrs.clear();
    g.neighbors(x, nbrs);
    double deg = 0.0;
    for (const Neighbor& nb : nbrs) {
      deg += nb.weight;
      if (nb.id == x) continue;
      if (auto j = index_of(nb.id)) {
        edges_.push_back(Edge{*j, nb.weight});
      }
    }
    const double m = g.measure(x);
    if (!(m > 0.0) || !std::isfinite(m)) {
      throw GraphError("measure at " + std::to_string(x) + " must be positive and finite");
    }
    if (!std::isfinite(deg)) {
      throw GraphError("degree at " + std::to_string(x) + " is not finite");
    }
    degree_[i] = deg;
    measure_[i] = m;
    offsets_[i + 1] = edges_.size();
  }
}

std::optional<std::size_t> Domain::index_of(VertexId x) const {
  auto it = std::lower_bound(
      sorted_index_.begin(), sorted_index_.end(), x,
      [](const std::pair<VertexId, std::size_t>& e, VertexId key) { return e.first < key; });
  if (it == sorted_index_.end() || it->first != x) return std::nullopt;
  return it->second;
}

double Domain::laplacian(std::span<const double> u, std::size_t i) const {
  double inside = 0.0;
  double diff = 0.0;
  for (const Edge& e : edges(i)) {
    inside += e.weight;
    diff += e.weight * (u[i] - u[e.index]);
  }
  const double outside = degree_[i] - inside;
  return (diff + outside * u[i]) / measure_[i];
}

std::vector<std::size_t> Domain::bfs_order() const {
  const std::size_t n = size();
  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<char> seen(n, 0);
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start]) continue;
    seen[start] = 1;
    order.push_back(start);
    for (std::size_t head = order.size() - 1; head < order.size(); ++head) {
      for (const Edge& e : edges(order[head])) {
        if (!seen[e.index] && e.weight > 0.0) {
          seen[e.index] = 1;
          order.push_back(e.index);
        }
      }
    }
  }
  return order;
}

// ---------------------------------------------------------------------------
// Solver internals

namespace {

struct Problem {
  const Domain& dom;
  const Nonlinearity& phi;
  std::vector<double> W;
  std::vector<double> f;
  double bound;  // |u| <= bound for every iterate
};

// Stationarity defect L u(x) - phi(f(x) - W(x) u(x)).
double stationarity(const Problem& p, std::span<const double> u, std::size_t i) {
  return p.dom.laplacian(u, i) - p.phi.phi(p.f[i] - p.W[i] * u[i]);
}

// Magnitude of the terms that enter the stationarity defect at x; the
// stopping residual is measured relative to it.
double stationarity_scale(const Problem& p, std::span<const double> u, std::size_t i) {
  double inside = 0.0;
  double mass = 0.0;
  for (const Domain::Edge& e : p.dom.edges(i)) {
    inside += e.weight;
    mass += e.weight * (std::abs(u[i]) + std::abs(u[e.index]));
  }
  mass += (p.dom.degree(i) - inside) * std::abs(u[i]);
  const double arg = std::abs(p.f[i]) + p.W[i] * std::abs(u[i]);
  return 1.0 + mass / p.dom.measure(i) + std::abs(p.phi.phi(arg));
}

// Change of the stationarity defect when u(x) moves by a few ulps. With a
// steep phi and a large W this exceeds any relative tolerance, so residuals
// below it are rounding and do not count.
double rounding_floor(const Problem& p, std::span<const double> u, std::size_t i) {
  const double d = 4.0 * kEps * std::max(std::abs(u[i]), std::numeric_limits<double>::min());
  const double up = p.phi.phi(p.f[i] - p.W[i] * (u[i] - d));
  const double down = p.phi.phi(p.f[i] - p.W[i] * (u[i] + d));
  return (up - down) + 2.0 * p.dom.degree(i) * d / p.dom.measure(i);
}

double scaled_residual(const Problem& p, std::span<const double> u) {
  double worst = 0.0;
  for (std::size_t i = 0; i < p.dom.size(); ++i) {
    const double excess = std::abs(stationarity(p, u, i)) - rounding_floor(p, u, i);
    const double r = std::max(excess, 0.0) / stationarity_scale(p, u, i);
    worst = std::max(worst, std::isfinite(r) ? r : std::numeric_limits<double>::infinity());
  }
  return worst;
}

bool is_subsolution(const Problem& p, std::span<const double> u, double slack) {
  for (std::size_t i = 0; i < p.dom.size(); ++i) {
    if (stationarity(p, u, i) > slack * stationarity_scale(p, u, i)) return false;
  }
  return true;
}

double local_energy(const Problem& p, std::span<const double> u) {
  double q = 0.0;
  double kappa = 0.0;
  for (std::size_t i = 0; i < p.dom.size(); ++i) {
    double inside = 0.0;
    for (const Domain::Edge& e : p.dom.edges(i)) {
      inside += e.weight;
      const double d = u[i] - u[e.index];
      q += 0.5 * e.weight * d * d;
    }
    q += (p.dom.degree(i) - inside) * u[i] * u[i];
    kappa += p.phi.Phi(p.f[i] - p.W[i] * u[i]) * p.dom.measure(i) / p.W[i];
  }
  return q + kappa;
}

// Root in t of (deg t - S)/m - phi(f - W t), strictly increasing in t.
double scalar_root(const Problem& p, std::size_t i, double S, double t0, double tol) {
  const double deg = p.dom.degree(i);
  const double m = p.dom.measure(i);
  const double fi = p.f[i];
  const double wi = p.W[i];
  const auto g = [&](double t) { return (deg * t - S) / m - p.phi.phi(fi - wi * t); };

  double lo = -p.bound - 1.0;
  double hi = p.bound + 1.0;
  if (g(lo) > 0.0 || g(hi) < 0.0) {
    throw InternalError("scalar root at vertex " + std::to_string(p.dom.vertices()[i]) +
                        " is not bracketed by [" + fmt(lo) + ", " + fmt(hi) + "]");
  }
  const bool newton = p.phi.has_derivative();
  double t = std::clamp(t0, lo, hi);
  for (int it = 0; it < 400; ++it) {
    const double phi_t = p.phi.phi(fi - wi * t);
    const double gt = (deg * t - S) / m - phi_t;
    if (std::abs(gt) <= tol * ((deg * std::abs(t) + std::abs(S)) / m + std::abs(phi_t))) {
      return t;
    }
    if (gt < 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    double next = 0.5 * (lo + hi);
    if (newton) {
      const double d = deg / m + wi * p.phi.derivative(fi - wi * t);
      if (std::isfinite(d) && d > 0.0) {
        const double candidate = t - gt / d;
        if (candidate > lo && candidate < hi) next = candidate;
      }
    }
    if (next <= lo || next >= hi || hi - lo <= 2.0 * kEps * std::max(std::abs(lo), std::abs(hi))) {
      return t;
    }
    t = next;
  }
  return t;
}

// One Newton step on L u - phi(f - W u) = 0, symmetrized by the measure.
// Returns false when the factorization fails.
bool newton_direction(const Problem& p, std::span<const double> u, std::vector<double>& delta) {
  const std::size_t n = p.dom.size();
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    double dphi = p.phi.derivative(p.f[i] - p.W[i] * u[i]);
    double diag = p.dom.degree(i) + p.dom.measure(i) * p.W[i] * dphi;
    if (!std::isfinite(diag)) {
      // Infinite slope: pin this vertex for the step.
      diag = 1e30 * (1.0 + p.dom.degree(i) + p.dom.measure(i) * p.W[i]);
    }
    triplets.emplace_back(row, row, diag);
    for (const Domain::Edge& e : p.dom.edges(i)) {
      triplets.emplace_back(row, static_cast<Eigen::Index>(e.index), -e.weight);
    }
    rhs[row] = -p.dom.measure(i) * stationarity(p, u, i);
  }
  Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  A.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() != Eigen::Success) return false;
  Eigen::VectorXd x = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !x.allFinite()) return false;
  delta.assign(x.data(), x.data() + n);
  return true;
}

struct AccelerationOutcome {
  bool accepted = false;
  double step = 0.0;
};

// Tries u + theta * delta for decreasing theta. In monotone mode the candidate
// is max(u, u + theta delta) and must stay a subsolution, which keeps later
// sweeps non-decreasing. Otherwise it must lower the energy.
AccelerationOutcome accelerate(const Problem& p, std::vector<double>& u, bool monotone) {
  std::vector<double> delta;
  if (!newton_direction(p, u, delta)) return {};
  std::vector<double> candidate(u.size());
  const double base_energy = monotone ? 0.0 : local_energy(p, u);
  for (double theta = 1.0; theta >= 1.0 / 16.0; theta *= 0.5) {
    double step = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      double v = std::clamp(u[i] + theta * delta[i], -p.bound, p.bound);
      if (monotone) v = std::max(v, u[i]);
      candidate[i] = v;
      step = std::max(step, std::abs(v - u[i]));
    }
    if (step == 0.0) return {};
    const bool ok = monotone ? is_subsolution(p, candidate, 64.0 * kEps)
                             : local_energy(p, candidate) < base_energy;
    if (ok) {
      u.swap(candidate);
      return {true, step};
    }
  }
  return {};
}

SolveResult solve_on_domain(const WeightedGraph& g, const Potential& W,
                            const Nonlinearity& phi, const VertexField& f,
                            std::span<const VertexId> U, const SolveOptions& opts,
                            std::span<const double> initial) {
  opts.check();
  SolveResult result;
  result.vertices.assign(U.begin(), U.end());
  if (U.empty()) {
    result.converged = true;
    return result;
  }
  if (!initial.empty() && initial.size() != U.size()) {
    throw InvalidParameter("initial guess has " + std::to_string(initial.size()) +
                           " entries for " + std::to_string(U.size()) + " vertices");
  }

  const Domain dom(g, U);
  const std::size_t n = dom.size();
  Problem p{dom, phi, std::vector<double>(n), std::vector<double>(n), 0.0};
  bool nonnegative_data = true;
  for (std::size_t i = 0; i < n; ++i) {
    const VertexId x = U[i];
    const double w = W(x);
    if (!std::isfinite(w) || !(w > 0.0) || w < W.lower_bound) {
      throw InvalidParameter("potential at " + std::to_string(x) + " is " + fmt(w) +
                             ", below its declared lower bound " + fmt(W.lower_bound));
    }
    const double fx = f(x);
    if (!std::isfinite(fx)) {
      throw InvalidParameter("data f at " + std::to_string(x) + " is not finite");
    }
    p.W[i] = w;
    p.f[i] = fx;
    p.bound = std::max(p.bound, std::abs(fx) / w);
    nonnegative_data = nonnegative_data && fx >= 0.0;
  }

  std::vector<double> u(n, 0.0);
  if (!initial.empty()) {
    for (std::size_t i = 0; i < n; ++i) u[i] = std::clamp(initial[i], -p.bound, p.bound);
  }

  std::vector<std::size_t> order;
  if (opts.sweep_order == SweepOrder::bfs_from_root) {
    order = dom.bfs_order();
  } else {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
  }

  // Monotone regime: non-negative data and a subsolution start. Then every
  // Gauss-Seidel update moves up.
  const bool monotone = nonnegative_data && is_subsolution(p, u, 1e-12);

  double prev_inc = 0.0;
  bool prev_plain = false;
  int last_accel = -10;
  int polish_left = kMaxPolish;
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    double inc = 0.0;
    // True while every update is within rounding of the old value.
    bool stalled = true;
    for (std::size_t i : order) {
      double S = 0.0;
      for (const Domain::Edge& e : dom.edges(i)) S += e.weight * u[e.index];
      const double t = scalar_root(p, i, S, u[i], opts.scalar_root_tol);
      inc = std::max(inc, std::abs(t - u[i]));
      result.max_decrease = std::max(result.max_decrease, u[i] - t);
      stalled = stalled && std::abs(t - u[i]) <= 8.0 * kEps * std::max(std::abs(t), std::abs(u[i]));
      u[i] = t;
    }
    result.sweeps_used = sweep;
    result.final_increment = inc;

    bool stationary = stalled;
    if (!stationary && inc <= opts.sweep_tol && prev_plain && prev_inc > 0.0) {
      const double q = inc / prev_inc;
      if (q < 1.0) stationary = inc * q / (1.0 - q) <= opts.sweep_tol;
    }
    if (stationary) {
      result.scaled_residual = scaled_residual(p, u);
      if (result.scaled_residual <= opts.residual_tol) {
        // When phi'(0) = 0 a tiny residual can sit far from the root, so a
        // Newton step measures the remaining distance before accepting.
        if (polish_left > 0 && opts.accelerate && phi.has_derivative()) {
          --polish_left;
          std::vector<double> before = u;
          const AccelerationOutcome acc = accelerate(p, u, monotone);
          if (acc.accepted) {
            ++result.accelerations;
            for (std::size_t i = 0; i < n; ++i) {
              result.max_decrease = std::max(result.max_decrease, before[i] - u[i]);
            }
          }
          if (acc.accepted) result.scaled_residual = scaled_residual(p, u);
          if (acc.accepted &&
              (acc.step > opts.sweep_tol || result.scaled_residual > opts.residual_tol)) {
            last_accel = sweep;
            prev_plain = false;
            prev_inc = inc;
            continue;
          }
        }
        result.converged = true;
        break;
      }
      if (stalled) break;
    }

    const bool slow = prev_inc > 0.0 && inc > 0.5 * prev_inc;
    prev_plain = true;
    prev_inc = inc;
    if (opts.accelerate && phi.has_derivative() && slow && !stalled && sweep - last_accel >= 2) {
      std::vector<double> before = u;
      const AccelerationOutcome acc = accelerate(p, u, monotone);
      if (acc.accepted) {
        ++result.accelerations;
        last_accel = sweep;
        prev_plain = false;
        for (std::size_t i = 0; i < n; ++i) {
          result.max_decrease = std::max(result.max_decrease, before[i] - u[i]);
        }
      }
    }
  }
  if (!result.converged) {
    result.scaled_residual = scaled_residual(p, u);
  }

  result.values = u;
  for (std::size_t i = 0; i < n; ++i) {
    if (u[i] != 0.0) result.u.set(U[i], u[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double lu = dom.laplacian(u, i);
    if (!phi.range().contains(lu)) {
      ++result.range_violations;
      continue;
    }
    const double r = phi.phi_inv(lu) + p.W[i] * u[i] - p.f[i];
    result.residual_inf = std::max(result.residual_inf, std::abs(r));
  }
  result.energy_value = local_energy(p, u);
  return result;
}

}  // namespace

SolveResult solve_dirichlet(const WeightedGraph& g, const Potential& W,
                            const Nonlinearity& phi, const VertexField& f,
                            std::span<const VertexId> U, const SolveOptions& opts,
                            std::span<const double> initial) {
  return solve_on_domain(g, W, phi, f, U, opts, initial);
}

SolveResult solve_dirichlet(const WeightedGraph& g, const Potential& W,
                            const Nonlinearity& phi, const VertexFunction& f,
                            std::span<const VertexId> U, const SolveOptions& opts,
                            std::span<const double> initial) {
  return solve_on_domain(g, W, phi, f.field(), U, opts, initial);
}

double energy_functional(const WeightedGraph& g, const Potential& W,
                         const Nonlinearity& phi, const VertexFunction& f,
                         const VertexFunction& u, std::span<const VertexId> U) {
  for (const auto& [x, v] : u.values()) {
    if (v != 0.0 && std::find(U.begin(), U.end(), x) == U.end()) {
      throw InvalidParameter("u is not supported in U (vertex " + std::to_string(x) + ")");
    }
  }
  std::vector<VertexId> terms(U.begin(), U.end());
  for (const auto& [x, v] : f.values()) terms.push_back(x);
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

  double kappa = 0.0;
  for (VertexId x : terms) {
    const double w = W(x);
    kappa += phi.Phi(f(x) - w * u(x)) * g.measure(x) / w;
  }
  return energy(g, u, u) + kappa;
}

ResidualReport residual(const WeightedGraph& g, const Potential& W,
                        const Nonlinearity& phi, const VertexField& f,
                        const VertexField& u, std::span<const VertexId> U) {
  ResidualReport report;
  report.entries.reserve(U.size());
  for (VertexId x : U) {
    ResidualEntry entry{x, std::nullopt, laplacian_apply(g, u, x)};
    if (phi.range().contains(entry.laplacian)) {
      const double r = phi.phi_inv(entry.laplacian) + W(x) * u(x) - f(x);
      entry.value = r;
      report.sup = std::max(report.sup, std::abs(r));
    } else {
      ++report.range_violations;
    }
    report.entries.push_back(entry);
  }
  return report;
}

ResidualReport residual(const WeightedGraph& g, const Potential& W,
                        const Nonlinearity& phi, const VertexFunction& f,
                        const VertexFunction& u, std::span<const VertexId> U) {
  return residual(g, W, phi, f.field(), u.field(), U);
}

}  // namespace nlresolvent
