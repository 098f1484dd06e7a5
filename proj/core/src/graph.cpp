#include "nlresolvent/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace nlresolvent {

std::size_t max_vertices_from_env() {
  const char* raw = std::getenv("NLRESOLVENT_MAX_VERTICES");
  if (raw == nullptr || *raw == '\0') {
    return kDefaultMaxVertices;
  }
  char* end = nullptr;
  const unsigned long long value = std::strtoull(raw, &end, 10);
  if (end == raw || *end != '\0' || value == 0) {
    throw InvalidParameter("NLRESOLVENT_MAX_VERTICES must be a positive integer, got '" +
                           std::string(raw) + "'");
  }
  return static_cast<std::size_t>(value);
}

class GraphBackend {
 public:
  virtual ~GraphBackend() = default;
  virtual bool is_finite() const = 0;
  virtual const std::string& name() const = 0;
  virtual std::optional<VertexId> root() const = 0;
  virtual bool contains(VertexId x) const = 0;
  virtual std::span<const VertexId> vertices() const = 0;
  virtual double measure(VertexId x) const = 0;
  virtual void neighbors(VertexId x, std::vector<Neighbor>& out) const = 0;
  virtual double degree(VertexId x) const = 0;
};

namespace {

class ExplicitBackend final : public GraphBackend {
 public:
  ExplicitBackend(std::string name, std::vector<VertexId> ids,
                  std::vector<double> measures,
                  std::vector<std::vector<Neighbor>> adjacency)
      : name_(std::move(name)),
        ids_(std::move(ids)),
        measures_(std::move(measures)),
        adjacency_(std::move(adjacency)) {
    index_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      index_.emplace(ids_[i], i);
    }
    degrees_.resize(ids_.size(), 0.0);
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      for (const Neighbor& nb : adjacency_[i]) {
        degrees_[i] += nb.weight;
      }
    }
  }

  bool is_finite() const override { return true; }
  const std::string& name() const override { return name_; }
  std::optional<VertexId> root() const override {
    if (ids_.empty()) return std::nullopt;
    return ids_.front();
  }
  bool contains(VertexId x) const override { return index_.contains(x); }
  std::span<const VertexId> vertices() const override { return ids_; }
  double measure(VertexId x) const override { return measures_[at(x)]; }
  void neighbors(VertexId x, std::vector<Neighbor>& out) const override {
    const auto& list = adjacency_[at(x)];
    out.insert(out.end(), list.begin(), list.end());
  }
  double degree(VertexId x) const override { return degrees_[at(x)]; }

 private:
  std::size_t at(VertexId x) const {
    auto it = index_.find(x);
    if (it == index_.end()) {
      throw GraphError("vertex " + std::to_string(x) + " is not in graph '" +
                       name_ + "'");
    }
    return it->second;
  }

  std::string name_;
  std::vector<VertexId> ids_;
  std::vector<double> measures_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<double> degrees_;
  std::unordered_map<VertexId, std::size_t> index_;
};

class ProceduralBackend final : public GraphBackend {
 public:
  ProceduralBackend(std::string name, VertexId root,
                    WeightedGraph::MembershipRule contains,
                    WeightedGraph::NeighborRule neighbors,
                    WeightedGraph::MeasureRule measure)
      : name_(std::move(name)),
        root_(root),
        contains_(std::move(contains)),
        neighbors_(std::move(neighbors)),
        measure_(std::move(measure)) {}

  bool is_finite() const override { return false; }
  const std::string& name() const override { return name_; }
  std::optional<VertexId> root() const override { return root_; }
  bool contains(VertexId x) const override { return contains_(x); }
  std::span<const VertexId> vertices() const override { return {}; }
  double measure(VertexId x) const override {
    check(x);
    return measure_(x);
  }
  void neighbors(VertexId x, std::vector<Neighbor>& out) const override {
    check(x);
    neighbors_(x, out);
  }
  double degree(VertexId x) const override {
    std::vector<Neighbor> list;
    neighbors(x, list);
    double deg = 0.0;
    for (const Neighbor& nb : list) deg += nb.weight;
    return deg;
  }

 private:
  void check(VertexId x) const {
    if (!contains_(x)) {
      throw GraphError("vertex " + std::to_string(x) + " is not in graph '" +
                       name_ + "'");
    }
  }

  std::string name_;
  VertexId root_;
  WeightedGraph::MembershipRule contains_;
  WeightedGraph::NeighborRule neighbors_;
  WeightedGraph::MeasureRule measure_;
};

}  // namespace

// ---------------------------------------------------------------------------
// WeightedGraph

WeightedGraph::WeightedGraph(std::shared_ptr<const GraphBackend> backend)
    : backend_(std::move(backend)) {}

WeightedGraph WeightedGraph::procedural(std::string name, VertexId root,
                                        MembershipRule contains,
                                        NeighborRule neighbors,
                                        MeasureRule measure) {
  if (!contains || !neighbors || !measure) {
    throw InvalidParameter("procedural graph '" + name + "' needs membership, neighbor and measure rules");
  }
  if (!contains(root)) {
    throw InvalidParameter("root of procedural graph '" + name + "' is not a vertex");
  }
  return WeightedGraph(std::make_shared<ProceduralBackend>(
      std::move(name), root, std::move(contains), std::move(neighbors),
      std::move(measure)));
}

bool WeightedGraph::is_finite() const { return backend_->is_finite(); }
const std::string& WeightedGraph::name() const { return backend_->name(); }
std::optional<VertexId> WeightedGraph::root() const { return backend_->root(); }
bool WeightedGraph::contains(VertexId x) const { return backend_->contains(x); }
std::span<const VertexId> WeightedGraph::vertices() const {
  return backend_->vertices();
}
double WeightedGraph::measure(VertexId x) const { return backend_->measure(x); }

std::vector<Neighbor> WeightedGraph::neighbors(VertexId x) const {
  std::vector<Neighbor> out;
  backend_->neighbors(x, out);
  return out;
}

void WeightedGraph::neighbors(VertexId x, std::vector<Neighbor>& out) const {
  backend_->neighbors(x, out);
}

double WeightedGraph::weight(VertexId x, VertexId y) const {
  double b = 0.0;
  for (const Neighbor& nb : neighbors(x)) {
    if (nb.id == y) b += nb.weight;
  }
  return b;
}

double WeightedGraph::degree(VertexId x) const { return backend_->degree(x); }

// ---------------------------------------------------------------------------
// GraphBuilder

GraphBuilder& GraphBuilder::add_vertex(VertexId id, double m) {
  vertices_.emplace_back(id, m);
  return *this;
}

GraphBuilder& GraphBuilder::add_edge(VertexId u, VertexId v, double b) {
  auto forward = entries_.find({u, v});
  if (forward != entries_.end() && forward->second.explicit_direction) {
    if (forward->second.weight != b) {
      throw GraphError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                       ") listed twice with different weights");
    }
    return *this;
  }
  entries_[{u, v}] = Entry{b, true};
  auto reverse = entries_.find({v, u});
  if (reverse == entries_.end()) {
    entries_[{v, u}] = Entry{b, false};
  } else if (!reverse->second.explicit_direction) {
    reverse->second.weight = b;
  }
  return *this;
}

WeightedGraph GraphBuilder::build(std::string name) const {
  std::vector<VertexId> ids;
  std::vector<double> measures;
  std::unordered_map<VertexId, std::size_t> index;
  for (const auto& [id, m] : vertices_) {
    if (!index.emplace(id, ids.size()).second) {
      throw GraphError("vertex " + std::to_string(id) + " listed twice");
    }
    ids.push_back(id);
    measures.push_back(m);
  }
  std::vector<std::vector<Neighbor>> adjacency(ids.size());
  for (const auto& [key, entry] : entries_) {
    const auto [u, v] = key;
    auto iu = index.find(u);
    auto iv = index.find(v);
    if (iu == index.end() || iv == index.end()) {
      const VertexId missing = iu == index.end() ? u : v;
      throw GraphError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                       ") references unknown vertex " + std::to_string(missing));
    }
    adjacency[iu->second].push_back(Neighbor{v, entry.weight});
  }
  return WeightedGraph(std::make_shared<ExplicitBackend>(
      std::move(name), std::move(ids), std::move(measures),
      std::move(adjacency)));
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;

const json& require(const json& obj, const std::string& key,
                    const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw GraphError(where + ": missing key '" + key + "'");
  }
  return obj.at(key);
}

double require_number(const json& obj, const std::string& key,
                      const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number()) {
    throw GraphError(where + "." + key + ": expected a number");
  }
  return v.get<double>();
}

VertexId require_id(const json& obj, const std::string& key,
                    const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number_integer()) {
    throw GraphError(where + "." + key + ": expected an integer vertex id");
  }
  return v.get<VertexId>();
}

}  // namespace

WeightedGraph load_graph_json(std::istream& in, std::string name) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw GraphError("malformed graph JSON at byte " + std::to_string(e.byte) +
                     ": " + e.what());
  }
  const json& vertices = require(doc, "vertices", "$");
  const json& edges = require(doc, "edges", "$");
  if (!vertices.is_array()) throw GraphError("$.vertices: expected an array");
  if (!edges.is_array()) throw GraphError("$.edges: expected an array");

  GraphBuilder builder;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const std::string where = "$.vertices[" + std::to_string(i) + "]";
    builder.add_vertex(require_id(vertices[i], "id", where),
                       require_number(vertices[i], "m", where));
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string where = "$.edges[" + std::to_string(i) + "]";
    const VertexId u = require_id(edges[i], "u", where);
    const VertexId v = require_id(edges[i], "v", where);
    const double b = require_number(edges[i], "b", where);
    try {
      builder.add_edge(u, v, b);
    } catch (const GraphError& e) {
      throw GraphError(where + ": " + e.what());
    }
  }
  return builder.build(std::move(name));
}

WeightedGraph load_graph_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw GraphError("cannot open graph file '" + path + "'");
  }
  try {
    return load_graph_json(in, path);
  } catch (const GraphError& e) {
    throw GraphError(path + ": " + e.what());
  }
}

void write_graph_json(std::ostream& out, const WeightedGraph& g,
                      std::span<const VertexId> vertices) {
  std::unordered_set<VertexId> inside(vertices.begin(), vertices.end());
  json doc;
  doc["vertices"] = json::array();
  doc["edges"] = json::array();
  for (VertexId x : vertices) {
    doc["vertices"].push_back({{"id", x}, {"m", g.measure(x)}});
  }
  for (VertexId x : vertices) {
    for (const Neighbor& nb : g.neighbors(x)) {
      if (nb.id > x && inside.contains(nb.id)) {
        doc["edges"].push_back({{"u", x}, {"v", nb.id}, {"b", nb.weight}});
      }
    }
  }
  out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// VertexFunction

VertexFunction VertexFunction::delta(VertexId x, double value) {
  VertexFunction f;
  f.set(x, value);
  return f;
}

VertexFunction VertexFunction::constant_on(std::span<const VertexId> support,
                                           double value) {
  VertexFunction f;
  for (VertexId x : support) f.set(x, value);
  return f;
}

double VertexFunction::operator()(VertexId x) const {
  auto it = values_.find(x);
  return it == values_.end() ? 0.0 : it->second;
}

void VertexFunction::set(VertexId x, double value) {
  if (!std::isfinite(value)) {
    throw InvalidParameter("vertex function value at " + std::to_string(x) +
                           " is not finite");
  }
  values_[x] = value;
}

std::vector<VertexId> VertexFunction::support() const {
  std::vector<VertexId> out;
  out.reserve(values_.size());
  for (const auto& [x, v] : values_) out.push_back(x);
  return out;
}

double VertexFunction::sup_norm() const {
  double s = 0.0;
  for (const auto& [x, v] : values_) s = std::max(s, std::abs(v));
  return s;
}

double VertexFunction::bound() const {
  return declared_bound_.value_or(sup_norm());
}

VertexField VertexFunction::field() const {
  return [values = values_](VertexId x) {
    auto it = values.find(x);
    return it == values.end() ? 0.0 : it->second;
  };
}

// ---------------------------------------------------------------------------
// Validation and formal objects

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::symmetry: return "symmetry";
    case ViolationKind::diagonal: return "diagonal";
    case ViolationKind::measure: return "measure positivity";
    case ViolationKind::negative_weight: return "negative weight";
    case ViolationKind::non_finite: return "non-finite value";
    case ViolationKind::unknown_vertex: return "unknown vertex";
  }
  return "unknown";
}

namespace {

std::string pair_label(VertexId x, VertexId y) {
  return "(" + std::to_string(x) + "," + std::to_string(y) + ")";
}

}  // namespace

ValidationReport validate(const WeightedGraph& g,
                          std::span<const VertexId> probe) {
  ValidationReport report;
  auto add = [&](ViolationKind kind, VertexId x, VertexId y,
                 std::string message) {
    report.violations.push_back(Violation{kind, x, y, std::move(message)});
  };

  for (VertexId x : probe) {
    if (!g.contains(x)) {
      add(ViolationKind::unknown_vertex, x, x,
          "vertex " + std::to_string(x) + " is not in the graph");
      continue;
    }
    const double m = g.measure(x);
    if (!std::isfinite(m)) {
      add(ViolationKind::non_finite, x, x,
          "measure at " + std::to_string(x) + " is not finite");
    } else if (!(m > 0.0)) {
      add(ViolationKind::measure, x, x,
          "measure positivity at " + std::to_string(x) + ": m = " +
              std::to_string(m));
    }
    double deg = 0.0;
    for (const Neighbor& nb : g.neighbors(x)) {
      deg += nb.weight;
      if (!std::isfinite(nb.weight)) {
        add(ViolationKind::non_finite, x, nb.id,
            "weight at " + pair_label(x, nb.id) + " is not finite");
        continue;
      }
      if (nb.weight < 0.0) {
        add(ViolationKind::negative_weight, x, nb.id,
            "negative weight at " + pair_label(x, nb.id));
      }
      if (nb.id == x) {
        if (nb.weight != 0.0) {
          add(ViolationKind::diagonal, x, x,
              "diagonal at " + pair_label(x, x) + ": b = " +
                  std::to_string(nb.weight));
        }
        continue;
      }
      if (!g.contains(nb.id)) {
        add(ViolationKind::unknown_vertex, x, nb.id,
            "edge " + pair_label(x, nb.id) + " leaves the vertex set");
        continue;
      }
      const double back = g.weight(nb.id, x);
      if (back != g.weight(x, nb.id)) {
        add(ViolationKind::symmetry, x, nb.id,
            "symmetry at " + pair_label(x, nb.id) + ": b(x,y) = " +
                std::to_string(nb.weight) + ", b(y,x) = " +
                std::to_string(back));
      }
    }
    if (!std::isfinite(deg)) {
      add(ViolationKind::non_finite, x, x,
          "degree at " + std::to_string(x) + " is not finite");
    }
  }
  return report;
}

ValidationReport validate(const WeightedGraph& g) {
  return validate(g, g.vertices());
}

double weighted_degree(const WeightedGraph& g, VertexId x) {
  return g.degree(x);
}

double laplacian_apply(const WeightedGraph& g, const VertexField& u,
                       VertexId x) {
  const double ux = u(x);
  double sum = 0.0;
  for (const Neighbor& nb : g.neighbors(x)) {
    sum += nb.weight * (ux - u(nb.id));
  }
  return sum / g.measure(x);
}

double laplacian_apply(const WeightedGraph& g, const VertexFunction& u,
                       VertexId x) {
  const double ux = u(x);
  double sum = 0.0;
  for (const Neighbor& nb : g.neighbors(x)) {
    sum += nb.weight * (ux - u(nb.id));
  }
  return sum / g.measure(x);
}

double energy(const WeightedGraph& g, const VertexFunction& u,
              const VertexFunction& v) {
  // Pairs with both endpoints off supp u ∪ supp v contribute nothing. A pair
  // inside the union is visited from both ends (factor 1/2 each); a pair with
  // one end outside is visited once and carries the full weight.
  std::unordered_set<VertexId> support;
  for (const auto& [x, val] : u.values()) support.insert(x);
  for (const auto& [x, val] : v.values()) support.insert(x);

  std::vector<VertexId> ordered(support.begin(), support.end());
  std::sort(ordered.begin(), ordered.end());

  double total = 0.0;
  std::vector<Neighbor> nbrs;
  for (VertexId x : ordered) {
    nbrs.clear();
    g.neighbors(x, nbrs);
    const double ux = u(x);
    const double vx = v(x);
    for (const Neighbor& nb : nbrs) {
      const double du = ux - u(nb.id);
      const double dv = vx - v(nb.id);
      const double factor = support.contains(nb.id) ? 0.5 : 1.0;
      total += factor * nb.weight * du * dv;
    }
  }
  return total;
}

std::vector<std::pair<VertexId, int>> ball_with_depth(const WeightedGraph& g,
                                                      VertexId root, int radius,
                                                      std::size_t max_vertices) {
  if (radius < 0) {
    throw InvalidParameter("ball radius must be non-negative");
  }
  if (!g.contains(root)) {
    throw GraphError("ball root " + std::to_string(root) + " is not a vertex");
  }
  std::vector<std::pair<VertexId, int>> order;
  std::unordered_set<VertexId> seen;
  order.emplace_back(root, 0);
  seen.insert(root);
  std::vector<Neighbor> nbrs;
  for (std::size_t head = 0; head < order.size(); ++head) {
    const auto [x, depth] = order[head];
    if (depth == radius) continue;
    nbrs.clear();
    g.neighbors(x, nbrs);
    for (const Neighbor& nb : nbrs) {
      if (!(nb.weight > 0.0) || seen.contains(nb.id)) continue;
      if (order.size() >= max_vertices) {
        throw CapError("ball of radius " + std::to_string(radius) + " around " +
                           std::to_string(root) + " exceeds the vertex cap of " +
                           std::to_string(max_vertices) +
                           " (NLRESOLVENT_MAX_VERTICES)",
                       max_vertices);
      }
      seen.insert(nb.id);
      order.emplace_back(nb.id, depth + 1);
    }
  }
  return order;
}

std::vector<VertexId> ball(const WeightedGraph& g, VertexId root, int radius,
                           std::size_t max_vertices) {
  std::vector<VertexId> out;
  for (const auto& [x, d] : ball_with_depth(g, root, radius, max_vertices)) {
    out.push_back(x);
  }
  return out;
}

}  // namespace nlresolvent
