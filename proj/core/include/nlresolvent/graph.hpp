#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlresolvent/error.hpp"

namespace nlresolvent {

/// Opaque vertex identifier. Procedural families define their own coding
/// (lattice offset, birth-death index, breadth-first tree numbering).
using VertexId = std::int64_t;

struct Neighbor {
  VertexId id;
  double weight;
};

/// Read-only real function on vertices, used for data that is not finitely
/// supported (e.g. f = alpha * W on an infinite graph).
using VertexField = std::function<double(VertexId)>;

/// Default cap on the number of vertices a single materialization may touch.
inline constexpr std::size_t kDefaultMaxVertices = 5'000'000;

/// Reads NLRESOLVENT_MAX_VERTICES, falling back to kDefaultMaxVertices.
std::size_t max_vertices_from_env();

class GraphBackend;

/// Weighted graph b over (X, m). Either an explicit finite edge list or a
/// procedural family described by a root and a neighbor rule. Immutable and
/// cheap to copy (shared backend).
class WeightedGraph {
 public:
  using NeighborRule = std::function<void(VertexId, std::vector<Neighbor>&)>;
  using MeasureRule = std::function<double(VertexId)>;
  using MembershipRule = std::function<bool(VertexId)>;

  /// Procedural graph. `contains` decides membership in X; `neighbors`
  /// appends every y with b(x, y) > 0 together with b(x, y).
  static WeightedGraph procedural(std::string name, VertexId root,
                                  MembershipRule contains,
                                  NeighborRule neighbors, MeasureRule measure);

  bool is_finite() const;
  const std::string& name() const;
  std::optional<VertexId> root() const;
  bool contains(VertexId x) const;

  /// Vertex list of a finite graph, in insertion order. Empty for
  /// procedural graphs.
  std::span<const VertexId> vertices() const;

  double measure(VertexId x) const;
  std::vector<Neighbor> neighbors(VertexId x) const;
  void neighbors(VertexId x, std::vector<Neighbor>& out) const;
  /// b(x, y); zero when y is not listed as a neighbor of x.
  double weight(VertexId x, VertexId y) const;
  double degree(VertexId x) const;

 private:
  friend class GraphBuilder;
  explicit WeightedGraph(std::shared_ptr<const GraphBackend> backend);
  std::shared_ptr<const GraphBackend> backend_;
};

/// Collects vertices and edges of a finite graph. `add_edge` sets b(u,v) and,
/// unless the reverse direction is listed explicitly, b(v,u) to the same
/// value. Conflicting explicit directions are kept as given so `validate`
/// can report them.
class GraphBuilder {
 public:
  GraphBuilder& add_vertex(VertexId id, double m);
  GraphBuilder& add_edge(VertexId u, VertexId v, double b);
  WeightedGraph build(std::string name = "explicit") const;

 private:
  struct Entry {
    double weight;
    bool explicit_direction;
  };
  std::vector<std::pair<VertexId, double>> vertices_;
  std::map<std::pair<VertexId, VertexId>, Entry> entries_;
};

/// Loads `{"vertices":[{"id":..,"m":..}], "edges":[{"u":..,"v":..,"b":..}]}`.
/// Throws GraphError with a JSON location on malformed input.
WeightedGraph load_graph_json(std::istream& in, std::string name = "json");
WeightedGraph load_graph_json_file(const std::string& path);
void write_graph_json(std::ostream& out, const WeightedGraph& g,
                      std::span<const VertexId> vertices);

/// Finitely supported function; zero off its support.
class VertexFunction {
 public:
  VertexFunction() = default;
  static VertexFunction delta(VertexId x, double value = 1.0);
  static VertexFunction constant_on(std::span<const VertexId> support,
                                    double value);

  double operator()(VertexId x) const;
  /// Throws InvalidParameter for non-finite values.
  void set(VertexId x, double value);
  bool empty() const { return values_.empty(); }
  std::size_t size() const { return values_.size(); }

  const std::map<VertexId, double>& values() const { return values_; }
  std::vector<VertexId> support() const;
  double sup_norm() const;
  /// Declared sup-norm bound if one was given, else the computed sup norm.
  double bound() const;
  void declare_bound(double bound) { declared_bound_ = bound; }
  VertexField field() const;

 private:
  std::map<VertexId, double> values_;
  std::optional<double> declared_bound_;
};

enum class ViolationKind {
  symmetry,
  diagonal,
  measure,
  negative_weight,
  non_finite,
  unknown_vertex,
};

std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  VertexId x;
  VertexId y;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks symmetry, zero diagonal, non-negative finite weights, finite degree
/// and positive measure on the probed vertices.
ValidationReport validate(const WeightedGraph& g,
                          std::span<const VertexId> probe);
/// Probes every vertex of a finite graph.
ValidationReport validate(const WeightedGraph& g);

double weighted_degree(const WeightedGraph& g, VertexId x);

/// Formal Laplacian (1/m(x)) sum_y b(x,y) (u(x) - u(y)).
double laplacian_apply(const WeightedGraph& g, const VertexField& u, VertexId x);
double laplacian_apply(const WeightedGraph& g, const VertexFunction& u,
                       VertexId x);

/// Bilinear graph energy Q(u, v) for finitely supported u, v.
double energy(const WeightedGraph& g, const VertexFunction& u,
              const VertexFunction& v);

/// Vertices within `radius` edges of `root`, in breadth-first order.
/// Throws CapError when more than `max_vertices` would be materialized.
std::vector<VertexId> ball(const WeightedGraph& g, VertexId root, int radius,
                           std::size_t max_vertices = max_vertices_from_env());

/// Breadth-first distances from `root` up to `radius`, in visit order.
std::vector<std::pair<VertexId, int>> ball_with_depth(
    const WeightedGraph& g, VertexId root, int radius,
    std::size_t max_vertices = max_vertices_from_env());

}  // namespace nlresolvent
