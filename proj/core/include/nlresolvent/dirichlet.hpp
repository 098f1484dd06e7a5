#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlresolvent/graph.hpp"
#include "nlresolvent/nonlinearity.hpp"

namespace nlresolvent {

/// Potential W with a certified lower bound W0 = inf W > 0.
struct Potential {
  VertexField value;
  double lower_bound = 0.0;
  std::string description;

  static Potential constant(double c);
  /// W(x) = c + deg(x)/m(x); lower bound c.
  static Potential degree_shifted(const WeightedGraph& g, double c);

  double operator()(VertexId x) const { return value(x); }
};

enum class SweepOrder { natural, bfs_from_root };

struct SolveOptions {
  double sweep_tol = 1e-10;
  double residual_tol = 1e-9;
  int max_sweeps = 100'000;
  double scalar_root_tol = 1e-12;
  SweepOrder sweep_order = SweepOrder::bfs_from_root;
  /// Monotone-safe Newton steps between sweeps when Gauss-Seidel stalls.
  bool accelerate = true;

  /// Throws InvalidParameter unless every tolerance is positive and
  /// max_sweeps >= 1.
  void check() const;
};

/// The finite set U materialized for the solver: per-vertex degree and
/// measure plus the edges that stay inside U (values off U are zero).
class Domain {
 public:
  struct Edge {
    std::size_t index;
    double weight;
  };

  Domain(const WeightedGraph& g, std::span<const VertexId> U);

  std::size_t size() const { return vertices_.size(); }
  std::span<const VertexId> vertices() const { return vertices_; }
  std::optional<std::size_t> index_of(VertexId x) const;
  double degree(std::size_t i) const { return degree_[i]; }
  double measure(std::size_t i) const { return measure_[i]; }
  std::span<const Edge> edges(std::size_t i) const {
    return {edges_.data() + offsets_[i], edges_.data() + offsets_[i + 1]};
  }
  /// (deg(x) u(x) - sum_{y in U} b(x,y) u(y)) / m(x), i.e. L u with u = 0 off U.
  double laplacian(std::span<const double> u, std::size_t i) const;
  /// Breadth-first order from the first vertex; unreached vertices follow in
  /// natural order.
  std::vector<std::size_t> bfs_order() const;

 private:
  std::vector<VertexId> vertices_;
  std::vector<double> degree_;
  std::vector<double> measure_;
  std::vector<std::size_t> offsets_;
  std::vector<Edge> edges_;
  std::vector<std::pair<VertexId, std::size_t>> sorted_index_;
};

struct SolveResult {
  /// R_U f, support inside U.
  VertexFunction u;
  /// Values aligned with `vertices` (the order of U as given).
  std::vector<VertexId> vertices;
  std::vector<double> values;
  /// max over U of |phi^{-1}(L u) + W u - f| where L u is in ran phi.
  double residual_inf = 0.0;
  /// Vertices where L u left ran phi (residual_inf excludes them).
  std::size_t range_violations = 0;
  /// max over U of the part of |L u - phi(f - W u)| above rounding level, over
  /// scale(x); the stopping residual.
  double scaled_residual = 0.0;
  int sweeps_used = 0;
  int accelerations = 0;
  double final_increment = 0.0;
  /// Largest pointwise decrease observed between consecutive iterates.
  double max_decrease = 0.0;
  double energy_value = 0.0;
  bool converged = false;
};

/// Solves phi^{-1}(L u) + W u = f on U, u = 0 off U, by nonlinear
/// Gauss-Seidel with exact scalar roots. `initial` (aligned with U) warm
/// starts the iteration; it is clamped to the a priori bound. Never reports
/// a run that hit max_sweeps as converged.
SolveResult solve_dirichlet(const WeightedGraph& g, const Potential& W,
                            const Nonlinearity& phi, const VertexField& f,
                            std::span<const VertexId> U,
                            const SolveOptions& opts = {},
                            std::span<const double> initial = {});

SolveResult solve_dirichlet(const WeightedGraph& g, const Potential& W,
                            const Nonlinearity& phi, const VertexFunction& f,
                            std::span<const VertexId> U,
                            const SolveOptions& opts = {},
                            std::span<const double> initial = {});

/// E_f(u) = Q(u) + sum_{x in U ∪ supp f} Phi(f(x) - W(x) u(x)) m(x) / W(x).
double energy_functional(const WeightedGraph& g, const Potential& W,
                         const Nonlinearity& phi, const VertexFunction& f,
                         const VertexFunction& u, std::span<const VertexId> U);

struct ResidualEntry {
  VertexId x;
  /// phi^{-1}(L u(x)) + W(x) u(x) - f(x); unset when L u(x) is outside ran phi.
  std::optional<double> value;
  double laplacian;
};

struct ResidualReport {
  std::vector<ResidualEntry> entries;
  double sup = 0.0;
  std::size_t range_violations = 0;
};

ResidualReport residual(const WeightedGraph& g, const Potential& W,
                        const Nonlinearity& phi, const VertexField& f,
                        const VertexField& u, std::span<const VertexId> U);
ResidualReport residual(const WeightedGraph& g, const Potential& W,
                        const Nonlinearity& phi, const VertexFunction& f,
                        const VertexFunction& u, std::span<const VertexId> U);

}  // namespace nlresolvent
