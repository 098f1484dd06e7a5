#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "nlresolvent/dirichlet.hpp"
#include "nlresolvent/graph.hpp"
#include "nlresolvent/nonlinearity.hpp"

namespace nlresolvent {

/// Radii schedule for an exhaustion by balls.
struct Schedule {
  std::vector<int> radii;

  /// start, 2 start, 4 start, ... (`steps` entries).
  static Schedule doubling(int start, int steps);
  static Schedule explicit_list(std::vector<int> radii);
};

/// Nested balls K_n = ball(root, radii[n]).
struct Exhaustion {
  VertexId root = 0;
  std::vector<int> radii;
  /// K_n in breadth-first order; K_n is a prefix of K_{n+1}.
  std::vector<std::vector<VertexId>> sets;
  /// Distance from the root for each vertex of the last set (aligned).
  std::vector<int> depth;

  std::size_t steps() const { return radii.size(); }
  /// Graph distance of x from the root, or -1 when x is outside the last set.
  int depth_of(VertexId x) const;
};

/// Throws InvalidParameter for a schedule that is empty, negative, or not
/// strictly increasing, and CapError naming the first radius whose ball
/// exceeds `max_vertices`.
Exhaustion make_exhaustion(const WeightedGraph& g, VertexId root,
                           const Schedule& schedule,
                           std::size_t max_vertices = max_vertices_from_env());

struct ResolventStep {
  std::size_t n = 0;
  int radius = 0;
  std::size_t size = 0;
  int sweeps = 0;
  double residual = 0.0;
  double scaled_residual = 0.0;
  bool solver_converged = false;
  double max_decrease = 0.0;
};

struct ProbeSeries {
  VertexId probe = 0;
  /// R_{K_n}(f 1_{K_n})(probe) for every step n.
  std::vector<double> values;
  /// values[n] - values[n-1]; the first entry is measured against R_∅ = 0.
  std::vector<double> increments;
  bool converged = false;
  /// First step from which every increment stays within tolerance.
  std::size_t converged_at = 0;
  /// Largest observed decrease along the sequence (should be rounding-level).
  double max_decrease = 0.0;

  double final_value() const { return values.empty() ? 0.0 : values.back(); }
  double last_increment() const { return increments.empty() ? 0.0 : increments.back(); }
};

struct ResolventEstimate {
  std::vector<ResolventStep> steps;
  std::vector<ProbeSeries> probes;
  /// Every probe converged.
  bool converged = false;
  /// Every Dirichlet solve converged.
  bool solver_converged = true;
  double max_observed_decrease = 0.0;
  /// The solve on the last set K_N.
  SolveResult last;
  double tol = 0.0;
};

/// Approximates the extended Dirichlet resolvent R f at the probes by the
/// monotone limit R_{K_n}(f 1_{K_n}). Each solve is warm started from the
/// previous one extended by zero. `f` must be bounded and non-negative on the
/// exhaustion; violations throw InvalidParameter. A probe converges when its
/// last increment is at most `tol`.
ResolventEstimate extended_resolvent(const WeightedGraph& g, const Potential& W,
                                     const Nonlinearity& phi, const VertexField& f,
                                     const Exhaustion& ex,
                                     std::span<const VertexId> probes, double tol,
                                     const SolveOptions& opts = {});

/// Writes `n,radius,size,probe_id,value,increment,sweeps,residual` rows.
void write_resolvent_csv(std::ostream& out, const ResolventEstimate& est,
                         bool header = true);

}  // namespace nlresolvent
