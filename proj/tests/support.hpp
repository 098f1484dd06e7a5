#pragma once

#include <cmath>
#include <vector>

#include "nlresolvent/graph.hpp"
#include "nlresolvent/testkit.hpp"

namespace nlresolvent::test {

// Vertices a = 0 and b = 1 joined by a unit edge, m = 1.
inline WeightedGraph two_vertex_graph() {
  return GraphBuilder().add_vertex(0, 1.0).add_vertex(1, 1.0).add_edge(0, 1, 1.0).build("two");
}

inline testkit::RandomSparse random_family(int n, std::uint64_t seed, double density = 0.2) {
  testkit::RandomSparse r;
  r.n = n;
  r.density = density;
  r.weight_lo = 0.1;
  r.weight_hi = 2.0;
  r.measure_lo = 0.5;
  r.measure_hi = 2.0;
  r.seed = seed;
  return r;
}

inline VertexFunction random_function(std::span<const VertexId> support, testkit::Rng& rng,
                                      double lo, double hi) {
  VertexFunction f;
  for (VertexId x : support) f.set(x, rng.uniform(lo, hi));
  return f;
}

inline std::vector<VertexId> all_vertices(const WeightedGraph& g) {
  return {g.vertices().begin(), g.vertices().end()};
}

// Random subset containing each vertex with probability p (never empty).
inline std::vector<VertexId> random_subset(std::span<const VertexId> from, testkit::Rng& rng,
                                           double p) {
  std::vector<VertexId> out;
  for (VertexId x : from) {
    if (rng.bernoulli(p)) out.push_back(x);
  }
  if (out.empty()) out.push_back(from[rng.below(from.size())]);
  return out;
}

inline double sup_diff(const VertexFunction& a, const VertexFunction& b,
                       std::span<const VertexId> on) {
  double d = 0.0;
  for (VertexId x : on) d = std::max(d, std::abs(a(x) - b(x)));
  return d;
}

}  // namespace nlresolvent::test
