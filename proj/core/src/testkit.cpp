#include "nlresolvent/testkit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <vector>
#include <set>
#include <unordered_map>

#include <Eigen/Dense>

namespace nlresolvent::testkit {

BirthDeath BirthDeath::geometric(double base) {
  if (!(base > 0.0) || !std::isfinite(base)) {
    throw InvalidParameter("birth-death base must be positive and finite");
  }
  BirthDeath bd;
  bd.b_rule = [base](VertexId k) { return std::pow(base, static_cast<double>(k)); };
  bd.m_rule = [](VertexId) { return 1.0; };
  bd.label = "birth-death:" + std::to_string(base);
  return bd;
}

SymmetricTree SymmetricTree::regular(int children) {
  if (children < 1) throw InvalidParameter("tree branching must be at least 1");
  return SymmetricTree{[children](int) { return children; }, "tree:" + std::to_string(children)};
}

double Rng::uniform(double lo, double hi) {
  const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw InvalidParameter("Rng::below needs n > 0");
  // Rejection keeps the result unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return r % n;
}

namespace {

void require_size(int n, const char* what) {
  if (n < 1) throw InvalidParameter(std::string(what) + " needs n >= 1");
}

WeightedGraph make_path(const FinitePath& p) {
  require_size(p.n, "finite path");
  GraphBuilder b;
  for (int i = 0; i < p.n; ++i) b.add_vertex(i, 1.0);
  for (int i = 0; i + 1 < p.n; ++i) b.add_edge(i, i + 1, 1.0);
  return b.build("path:" + std::to_string(p.n));
}

WeightedGraph make_complete(const Complete& c) {
  require_size(c.n, "complete graph");
  GraphBuilder b;
  for (int i = 0; i < c.n; ++i) b.add_vertex(i, 1.0);
  for (int i = 0; i < c.n; ++i) {
    for (int j = i + 1; j < c.n; ++j) b.add_edge(i, j, 1.0);
  }
  return b.build("complete:" + std::to_string(c.n));
}

WeightedGraph make_star(const Star& s) {
  require_size(s.k, "star");
  GraphBuilder b;
  b.add_vertex(0, 1.0);
  for (int i = 1; i <= s.k; ++i) {
    b.add_vertex(i, 1.0);
    b.add_edge(0, i, 1.0);
  }
  return b.build("star:" + std::to_string(s.k));
}

WeightedGraph make_random(const RandomSparse& r) {
  require_size(r.n, "random sparse graph");
  if (!(r.density > 0.0 && r.density <= 1.0)) {
    throw InvalidParameter("random sparse density must lie in (0, 1]");
  }
  if (!(r.weight_lo > 0.0 && r.weight_hi >= r.weight_lo && std::isfinite(r.weight_hi))) {
    throw InvalidParameter("random sparse weights need 0 < lo <= hi < inf");
  }
  if (!(r.measure_lo > 0.0 && r.measure_hi >= r.measure_lo && std::isfinite(r.measure_hi))) {
    throw InvalidParameter("random sparse measures need 0 < lo <= hi < inf");
  }
  Rng rng(r.seed);
  GraphBuilder b;
  for (int i = 0; i < r.n; ++i) b.add_vertex(i, rng.uniform(r.measure_lo, r.measure_hi));

  std::vector<int> order(static_cast<std::size_t>(r.n));
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  std::set<std::pair<int, int>> used;
  auto connect = [&](int u, int v) {
    used.emplace(std::min(u, v), std::max(u, v));
    b.add_edge(u, v, rng.uniform(r.weight_lo, r.weight_hi));
  };
  for (std::size_t i = 1; i < order.size(); ++i) {
    connect(order[i], order[rng.below(i)]);
  }
  for (int u = 0; u < r.n; ++u) {
    for (int v = u + 1; v < r.n; ++v) {
      if (used.count({u, v}) == 0 && rng.bernoulli(r.density)) connect(u, v);
    }
  }
  return b.build("random:" + std::to_string(r.n) + ":" + std::to_string(r.seed));
}

WeightedGraph make_lattice() {
  return WeightedGraph::procedural(
      "lattice-z", 0, [](VertexId) { return true; },
      [](VertexId x, std::vector<Neighbor>& out) {
        out.push_back({x - 1, 1.0});
        out.push_back({x + 1, 1.0});
      },
      [](VertexId) { return 1.0; });
}

WeightedGraph make_birth_death(const BirthDeath& bd) {
  if (!bd.b_rule || !bd.m_rule) throw InvalidParameter("birth-death needs weight and measure rules");
  auto b_rule = bd.b_rule;
  auto m_rule = bd.m_rule;
  return WeightedGraph::procedural(
      bd.label, 0, [](VertexId x) { return x >= 0; },
      [b_rule](VertexId x, std::vector<Neighbor>& out) {
        if (x > 0) out.push_back({x - 1, b_rule(x - 1)});
        out.push_back({x + 1, b_rule(x)});
      },
      m_rule);
}

// Breadth-first numbering: level k occupies [start[k], start[k+1]).
struct TreeLayout {
  std::vector<VertexId> start;
  std::vector<int> branching;

  int level_of(VertexId x) const {
    auto it = std::upper_bound(start.begin(), start.end(), x);
    return static_cast<int>(it - start.begin()) - 1;
  }
};

std::shared_ptr<const TreeLayout> tree_layout(const SymmetricTree& t) {
  auto layout = std::make_shared<TreeLayout>();
  constexpr VertexId kLimit = VertexId{1} << 60;
  constexpr int kMaxLevels = 1 << 16;
  VertexId start = 0;
  VertexId count = 1;
  for (int level = 0;; ++level) {
    layout->start.push_back(start);
    const int c = t.branching(level);
    if (c < 1) throw InvalidParameter("tree branching must be at least 1 at every level");
    layout->branching.push_back(c);
    if (level >= kMaxLevels || count > (kLimit - start) || count > kLimit / c) break;
    start += count;
    count *= c;
  }
  return layout;
}

WeightedGraph make_tree(const SymmetricTree& t) {
  if (!t.branching) throw InvalidParameter("tree needs a branching rule");
  auto layout = tree_layout(t);
  // The deepest recorded level has no children, so the id range stays finite.
  const VertexId end = layout->start.back();
  return WeightedGraph::procedural(
      t.label, 0, [end](VertexId x) { return x >= 0 && x < end; },
      [layout](VertexId x, std::vector<Neighbor>& out) {
        const int k = layout->level_of(x);
        const VertexId i = x - layout->start[static_cast<std::size_t>(k)];
        if (k > 0) {
          const auto up = static_cast<std::size_t>(k - 1);
          out.push_back({layout->start[up] + i / layout->branching[up], 1.0});
        }
        const auto here = static_cast<std::size_t>(k);
        if (here + 2 < layout->start.size()) {
          const int c = layout->branching[here];
          for (int j = 0; j < c; ++j) out.push_back({layout->start[here + 1] + i * c + j, 1.0});
        }
      },
      [](VertexId) { return 1.0; });
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

WeightedGraph generate(const GraphFamily& family) {
  return std::visit(overloaded{
                        [](const FinitePath& p) { return make_path(p); },
                        [](const BirthDeath& bd) { return make_birth_death(bd); },
                        [](const SymmetricTree& t) { return make_tree(t); },
                        [](const LatticeZ&) { return make_lattice(); },
                        [](const Complete& c) { return make_complete(c); },
                        [](const Star& s) { return make_star(s); },
                        [](const RandomSparse& r) { return make_random(r); },
                    },
                    family);
}

PathGenerator ray(const GraphFamily& family) {
  if (std::holds_alternative<BirthDeath>(family) || std::holds_alternative<LatticeZ>(family)) {
    return [](std::size_t k) { return static_cast<VertexId>(k); };
  }
  if (const auto* p = std::get_if<FinitePath>(&family)) {
    const int n = p->n;
    return [n](std::size_t k) {
      if (k >= static_cast<std::size_t>(n)) {
        throw InvalidPath("finite path has only " + std::to_string(n) + " vertices");
      }
      return static_cast<VertexId>(k);
    };
  }
  if (const auto* t = std::get_if<SymmetricTree>(&family)) {
    auto layout = tree_layout(*t);
    return [layout](std::size_t k) {
      if (k + 1 >= layout->start.size()) throw InvalidPath("tree ray exceeds the id range");
      return layout->start[k];
    };
  }
  throw InvalidParameter("family has no canonical ray");
}

VertexFunction linear_oracle(const WeightedGraph& g, const Potential& W,
                             const VertexFunction& f, std::span<const VertexId> U,
                             std::size_t cap) {
  if (U.size() > cap) {
    throw CapError("linear oracle set of " + std::to_string(U.size()) +
                       " vertices exceeds the dense cap of " + std::to_string(cap),
                   cap);
  }
  const auto n = static_cast<Eigen::Index>(U.size());
  std::unordered_map<VertexId, Eigen::Index> index;
  for (Eigen::Index i = 0; i < n; ++i) index.emplace(U[static_cast<std::size_t>(i)], i);

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const VertexId x = U[static_cast<std::size_t>(i)];
    const double m = g.measure(x);
    double deg = 0.0;
    for (const Neighbor& nb : g.neighbors(x)) {
      deg += nb.weight;
      auto it = index.find(nb.id);
      if (it != index.end()) A(i, it->second) -= nb.weight / m;
    }
    A(i, i) += deg / m + W(x);
    rhs(i) = f(x);
  }
  const Eigen::VectorXd u = A.partialPivLu().solve(rhs);
  VertexFunction out;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(u(i))) throw InternalError("linear oracle produced a non-finite value");
    out.set(U[static_cast<std::size_t>(i)], u(i));
  }
  return out;
}

namespace {

// Energy restricted to functions supported in U, dropping the constant
// contribution of f outside U.
class LocalEnergy {
 public:
  LocalEnergy(const WeightedGraph& g, const Potential& W, const Nonlinearity& phi,
              const VertexFunction& f, std::span<const VertexId> U)
      : phi_(phi), k_(U.size()) {
    for (std::size_t i = 0; i < k_; ++i) {
      const VertexId x = U[i];
      double inside = 0.0;
      for (std::size_t j = 0; j < k_; ++j) {
        pair_[i][j] = j == i ? 0.0 : g.weight(x, U[j]);
        inside += pair_[i][j];
      }
      outside_[i] = g.degree(x) - inside;
      f_[i] = f(x);
      w_[i] = W(x);
      m_[i] = g.measure(x);
    }
  }

  double operator()(const std::array<double, 3>& u) const {
    double e = 0.0;
    for (std::size_t i = 0; i < k_; ++i) {
      for (std::size_t j = i + 1; j < k_; ++j) {
        const double d = u[i] - u[j];
        e += pair_[i][j] * d * d;
      }
      e += outside_[i] * u[i] * u[i];
      e += phi_.Phi(f_[i] - w_[i] * u[i]) * m_[i] / w_[i];
    }
    return e;
  }

 private:
  const Nonlinearity& phi_;
  std::size_t k_;
  double pair_[3][3] = {};
  double outside_[3] = {};
  double f_[3] = {};
  double w_[3] = {};
  double m_[3] = {};
};

}  // namespace

VertexFunction brute_force_minimizer(const WeightedGraph& g, const Potential& W,
                                     const Nonlinearity& phi, const VertexFunction& f,
                                     std::span<const VertexId> U, const BruteForceGrid& grid) {
  if (U.size() > 3) throw InvalidParameter("brute force minimizer handles at most 3 vertices");
  if (!(W.lower_bound > 0.0)) throw InvalidParameter("potential needs a positive lower bound");
  VertexFunction out;
  if (U.empty()) return out;

  const double bound = f.sup_norm() / W.lower_bound;
  const double box = grid.box > 0.0 ? grid.box : 2.0 * bound + 1.0;
  if (box < bound) {
    throw InvalidParameter("brute force box " + std::to_string(box) +
                           " does not contain the a priori bound " + std::to_string(bound));
  }
  const double step = grid.step > 0.0 ? grid.step : box / 20.0;
  const auto ticks = static_cast<int>(std::ceil(box / step));
  const std::size_t k = U.size();
  const LocalEnergy energy(g, W, phi, f, U);

  std::array<double, 3> best{};
  std::array<int, 3> best_tick{};
  double best_e = std::numeric_limits<double>::infinity();
  std::array<int, 3> t{};
  for (std::size_t i = 0; i < k; ++i) t[i] = -ticks;
  while (true) {
    std::array<double, 3> u{};
    for (std::size_t i = 0; i < k; ++i) u[i] = std::clamp(t[i] * step, -box, box);
    const double e = energy(u);
    if (e < best_e) {
      best_e = e;
      best = u;
      best_tick = t;
    }
    std::size_t i = 0;
    while (i < k && ++t[i] > ticks) t[i++] = -ticks;
    if (i == k) break;
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (std::abs(best_tick[i]) == ticks) {
      throw InvalidParameter("brute force minimum lies on the box edge; enlarge the box");
    }
  }

  // Golden-section line searches around the current point, cycling until no
  // search moves more than tol. Coordinates alone crawl along flat valleys
  // such as the constant direction of a graph without boundary, so the
  // pairwise and diagonal directions are searched as well.
  std::vector<std::array<double, 3>> directions;
  for (std::size_t i = 0; i < k; ++i) {
    std::array<double, 3> d{};
    d[i] = 1.0;
    directions.push_back(d);
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      std::array<double, 3> d{};
      d[i] = 1.0;
      d[j] = 1.0;
      directions.push_back(d);
      d[j] = -1.0;
      directions.push_back(d);
    }
  }
  if (k == 3) directions.push_back({1.0, 1.0, 1.0});

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double radius = step;
  for (int cycle = 0; cycle < 10'000; ++cycle) {
    double moved = 0.0;
    for (const auto& d : directions) {
      auto point = [&](double s) {
        std::array<double, 3> u = best;
        for (std::size_t i = 0; i < k; ++i) u[i] = std::clamp(u[i] + s * d[i], -box, box);
        return u;
      };
      auto at = [&](double s) { return energy(point(s)); };
      double lo = -radius;
      double hi = radius;
      double a = hi - inv_phi * (hi - lo);
      double b = lo + inv_phi * (hi - lo);
      double fa = at(a);
      double fb = at(b);
      while (hi - lo > 0.1 * grid.tol) {
        if (fa < fb) {
          hi = b;
          b = a;
          fb = fa;
          a = hi - inv_phi * (hi - lo);
          fa = at(a);
        } else {
          lo = a;
          a = b;
          fa = fb;
          b = lo + inv_phi * (hi - lo);
          fb = at(b);
        }
      }
      const double s = 0.5 * (lo + hi);
      if (at(s) <= energy(best)) {
        const std::array<double, 3> next = point(s);
        for (std::size_t i = 0; i < k; ++i) moved = std::max(moved, std::abs(next[i] - best[i]));
        best = next;
      }
    }
    if (moved <= grid.tol) break;
    radius = std::max(4.0 * moved, 10.0 * grid.tol);
  }
  for (std::size_t i = 0; i < k; ++i) out.set(U[i], best[i]);
  return out;
}

}  // namespace nlresolvent::testkit
