#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <variant>

#include "nlresolvent/completeness.hpp"
#include "nlresolvent/dirichlet.hpp"
#include "nlresolvent/graph.hpp"
#include "nlresolvent/nonlinearity.hpp"

namespace nlresolvent::testkit {

/// Path 0 - 1 - ... - (n-1), unit weights and measure.
struct FinitePath {
  int n = 1;
};

/// Chain on {0, 1, 2, ...} with b(k, k+1) = b_rule(k) and m(k) = m_rule(k).
struct BirthDeath {
  std::function<double(VertexId)> b_rule;
  std::function<double(VertexId)> m_rule;
  std::string label = "birth-death";

  /// b(k, k+1) = base^k, m = 1.
  static BirthDeath geometric(double base);
};

/// Rooted tree where every vertex at level k has branching(k) children;
/// unit weights and measure. Vertices are numbered breadth-first.
struct SymmetricTree {
  std::function<int(int)> branching;
  std::string label = "tree";

  static SymmetricTree regular(int children);
};

/// The integer lattice with unit weights and measure.
struct LatticeZ {};

/// Complete graph on 0..n-1, unit weights and measure.
struct Complete {
  int n = 1;
};

/// Star with center 0 and leaves 1..k, unit weights and measure.
struct Star {
  int k = 1;
};

/// Connected random graph on 0..n-1: a random spanning tree plus every other
/// pair independently with probability `density`. Weights uniform in
/// [weight_lo, weight_hi], measures uniform in [measure_lo, measure_hi].
struct RandomSparse {
  int n = 1;
  double density = 0.1;
  double weight_lo = 1.0;
  double weight_hi = 1.0;
  std::uint64_t seed = 0;
  double measure_lo = 1.0;
  double measure_hi = 1.0;
};

using GraphFamily =
    std::variant<FinitePath, BirthDeath, SymmetricTree, LatticeZ, Complete, Star, RandomSparse>;

/// Procedural graph for birth-death, lattice and tree families, explicit
/// otherwise. Deterministic for a fixed seed. Throws InvalidParameter on bad
/// parameters.
WeightedGraph generate(const GraphFamily& family);

/// Canonical ray from the root: k -> k on chains and the lattice, the
/// leftmost branch on trees. Throws InvalidParameter for other families.
PathGenerator ray(const GraphFamily& family);

/// Uniform doubles and integers from a seeded mt19937_64, mapped by hand so
/// the stream is the same on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }

 private:
  std::mt19937_64 engine_;
};

inline constexpr std::size_t kDenseCap = 2000;

/// Solves (L + W) u = f on U with u = 0 off U by dense partially pivoted
/// elimination: the phi = identity resolvent.
VertexFunction linear_oracle(const WeightedGraph& g, const Potential& W,
                             const VertexFunction& f, std::span<const VertexId> U,
                             std::size_t cap = kDenseCap);

struct BruteForceGrid {
  /// Half-width of the search box per coordinate; 0 picks 2 ||f|| / W0 + 1.
  double box = 0.0;
  /// Coarse grid spacing; 0 picks box / 20.
  double step = 0.0;
  /// Final accuracy per coordinate.
  double tol = 1e-9;
};

/// Minimizes the energy functional over functions supported in U (|U| <= 3)
/// by a coarse grid scan followed by cyclic golden-section coordinate
/// searches. Throws InvalidParameter when the minimum sits on the box edge.
VertexFunction brute_force_minimizer(const WeightedGraph& g, const Potential& W,
                                     const Nonlinearity& phi, const VertexFunction& f,
                                     std::span<const VertexId> U,
                                     const BruteForceGrid& grid = {});

}  // namespace nlresolvent::testkit
