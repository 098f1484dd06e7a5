#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

#include "CLI11.hpp"
#include "json.hpp"
#include "nlresolvent/format.hpp"
#include "nlresolvent/resolvent.hpp"
#include "nlresolvent/testkit.hpp"

namespace nlresolvent::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kModes = {"validate", "solve",           "resolve", "classify",
                                         "path-criterion", "verify-liouville", "gen"};

struct OptionSpec {
  const char* key;
  const char* help;
};

// One entry per RunConfig field; the same names are accepted as JSON keys.
const std::vector<OptionSpec> kOptions = {
    {"graph", "lattice-z | path:N | birth-death:BASE | tree:K | complete:N | star:K | "
              "random:N:DENSITY:WLO:WHI | file:PATH"},
    {"phi", "identity | power:P | log | atan"},
    {"W", "const:C | deg:C | large"},
    {"f", "delta:X[:VALUE] | const:C"},
    {"U", "all | ball:R | list:X,Y,..."},
    {"root", "root vertex of the exhaustion"},
    {"radii", "comma separated exhaustion radii"},
    {"doubling", "START,STEPS doubling schedule"},
    {"alpha", "comma separated alpha values (classify defaults to 0.25,0.5,1,2,4)"},
    {"probes", "comma separated probe vertices"},
    {"random-probes", "number of seeded random probes added to the root"},
    {"complete-tol", "defect threshold for complete-at-infinity"},
    {"stabilization-tol", "threshold on the last defect change"},
    {"incomplete-floor", "defect threshold for incomplete-at-infinity"},
    {"sweep-tol", "solver increment tolerance"},
    {"residual-tol", "solver scaled residual tolerance"},
    {"max-sweeps", "solver sweep budget"},
    {"resolvent-tol", "probe increment tolerance of the exhaustion limit"},
    {"length", "number of path vertices"},
    {"path", "explicit comma separated path"},
    {"radius", "ball radius for validate and gen on infinite graphs"},
    {"out", "output directory"},
    {"seed", "seed for random graphs and probes"},
    {"serial", "true to run alpha values sequentially"},
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("--" + key + ": cannot parse '" + raw + "' as a number");
  }
  return value;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& raw) {
  std::vector<T> out;
  for (const std::string& part : split(raw, ',')) out.push_back(parse_number<T>(key, part));
  return out;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string t = trim(raw);
  if (t == "true" || t == "1" || t.empty()) return true;
  if (t == "false" || t == "0") return false;
  throw ConfigError("--" + key + ": expected true or false, got '" + raw + "'");
}

std::string json_to_raw(const json& v, const std::string& location) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  if (v.is_array()) {
    std::string joined;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() && !v[i].is_string()) {
        throw ConfigError(location + "[" + std::to_string(i) + "]: expected a number");
      }
      if (i > 0) joined += ',';
      joined += json_to_raw(v[i], location);
    }
    return joined;
  }
  throw ConfigError(location + ": unsupported value type");
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config: cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": malformed JSON at byte " + std::to_string(e.byte));
  }
  if (!doc.is_object()) throw ConfigError(path + ": $ must be an object");
  std::map<std::string, std::string> raw;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string location = path + ": $." + it.key();
    const bool known = it.key() == "mode" ||
                       std::any_of(kOptions.begin(), kOptions.end(),
                                   [&](const OptionSpec& o) { return it.key() == o.key; });
    if (!known) throw ConfigError(location + ": unknown key");
    raw[it.key()] = json_to_raw(it.value(), location);
  }
  return raw;
}

RunConfig build_config(const std::string& mode, const std::map<std::string, std::string>& raw) {
  RunConfig c;
  c.mode = mode;
  auto get = [&](const char* key) -> const std::string* {
    auto it = raw.find(key);
    return it == raw.end() ? nullptr : &it->second;
  };
  if (auto v = get("graph")) c.graph = *v;
  if (auto v = get("phi")) c.phi = *v;
  if (auto v = get("W")) c.potential = *v;
  if (auto v = get("f")) c.data = *v;
  if (auto v = get("U")) c.domain = *v;
  if (auto v = get("root")) c.root = parse_number<VertexId>("root", *v);
  if (auto v = get("radii")) c.radii = parse_list<int>("radii", *v);
  if (auto v = get("doubling")) {
    if (!c.radii.empty()) throw ConfigError("--radii and --doubling are mutually exclusive");
    const auto parts = parse_list<int>("doubling", *v);
    if (parts.size() != 2) throw ConfigError("--doubling: expected START,STEPS");
    try {
      c.radii = Schedule::doubling(parts[0], parts[1]).radii;
    } catch (const InvalidParameter& e) {
      throw ConfigError(std::string("--doubling: ") + e.what());
    }
  }
  if (auto v = get("alpha")) c.alpha = parse_list<double>("alpha", *v);
  if (c.alpha.empty() && mode == "classify") c.alpha = kDefaultAlphaGrid;
  if (auto v = get("probes")) c.probes = parse_list<VertexId>("probes", *v);
  if (auto v = get("random-probes")) c.random_probes = parse_number<int>("random-probes", *v);
  if (auto v = get("complete-tol"))
    c.thresholds.complete_tol = parse_number<double>("complete-tol", *v);
  if (auto v = get("stabilization-tol"))
    c.thresholds.stabilization_tol = parse_number<double>("stabilization-tol", *v);
  if (auto v = get("incomplete-floor"))
    c.thresholds.incomplete_floor = parse_number<double>("incomplete-floor", *v);
  if (auto v = get("sweep-tol")) c.solve.sweep_tol = parse_number<double>("sweep-tol", *v);
  if (auto v = get("residual-tol"))
    c.solve.residual_tol = parse_number<double>("residual-tol", *v);
  if (auto v = get("max-sweeps")) c.solve.max_sweeps = parse_number<int>("max-sweeps", *v);
  if (auto v = get("resolvent-tol"))
    c.resolvent_tol = parse_number<double>("resolvent-tol", *v);
  if (auto v = get("length")) c.length = parse_number<std::size_t>("length", *v);
  if (auto v = get("path")) c.path = parse_list<VertexId>("path", *v);
  if (auto v = get("radius")) c.radius = parse_number<int>("radius", *v);
  if (auto v = get("out")) c.out_dir = *v;
  if (auto v = get("seed")) c.seed = parse_number<std::uint64_t>("seed", *v);
  if (auto v = get("serial")) c.parallel = !parse_bool("serial", *v);
  c.check();
  return c;
}

struct GraphSpec {
  WeightedGraph graph;
  std::optional<testkit::GraphFamily> family;
};

std::pair<std::string, std::string> head_tail(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) return {spec, ""};
  return {spec.substr(0, colon), spec.substr(colon + 1)};
}

GraphSpec make_graph(const RunConfig& c) {
  const auto [kind, arg] = head_tail(c.graph);
  auto family = [&]() -> std::optional<testkit::GraphFamily> {
    if (kind == "lattice-z") return testkit::LatticeZ{};
    if (kind == "path") return testkit::FinitePath{parse_number<int>("graph", arg)};
    if (kind == "birth-death")
      return testkit::BirthDeath::geometric(parse_number<double>("graph", arg));
    if (kind == "tree") return testkit::SymmetricTree::regular(parse_number<int>("graph", arg));
    if (kind == "complete") return testkit::Complete{parse_number<int>("graph", arg)};
    if (kind == "star") return testkit::Star{parse_number<int>("graph", arg)};
    if (kind == "random") {
      const auto parts = split(arg, ':');
      if (parts.size() != 4) throw ConfigError("--graph random:N:DENSITY:WLO:WHI expected");
      testkit::RandomSparse r;
      r.n = parse_number<int>("graph", parts[0]);
      r.density = parse_number<double>("graph", parts[1]);
      r.weight_lo = parse_number<double>("graph", parts[2]);
      r.weight_hi = parse_number<double>("graph", parts[3]);
      r.seed = c.seed;
      return r;
    }
    if (kind == "file") return std::nullopt;
    throw ConfigError("--graph: unknown family '" + kind + "'");
  }();
  if (!family) return GraphSpec{load_graph_json_file(arg), std::nullopt};
  return GraphSpec{testkit::generate(*family), family};
}

Potential make_potential(const RunConfig& c, const WeightedGraph& g, const Nonlinearity& phi) {
  const auto [kind, arg] = head_tail(c.potential);
  if (kind == "const") return Potential::constant(parse_number<double>("W", arg));
  if (kind == "deg") return Potential::degree_shifted(g, parse_number<double>("W", arg));
  if (kind == "large") return large_potential(g, phi);
  throw ConfigError("--W: unknown potential '" + c.potential + "'");
}

struct DataSpec {
  bool is_delta = false;
  VertexId at = 0;
  double value = 0.0;
};

DataSpec make_data(const RunConfig& c) {
  const auto [kind, arg] = head_tail(c.data);
  DataSpec d;
  if (kind == "delta") {
    const auto parts = split(arg, ':');
    if (parts.empty() || parts.size() > 2) throw ConfigError("--f: expected delta:X[:VALUE]");
    d.is_delta = true;
    d.at = parse_number<VertexId>("f", parts[0]);
    d.value = parts.size() == 2 ? parse_number<double>("f", parts[1]) : 1.0;
    return d;
  }
  if (kind == "const") {
    d.value = parse_number<double>("f", arg);
    return d;
  }
  throw ConfigError("--f: unknown data '" + c.data + "'");
}

VertexId root_of(const RunConfig& c, const WeightedGraph& g) {
  if (c.root) return *c.root;
  if (auto r = g.root()) return *r;
  throw ConfigError("--root is required for this graph");
}

std::vector<VertexId> make_domain(const RunConfig& c, const WeightedGraph& g,
                                  const std::string& fallback) {
  const std::string spec = c.domain.empty() ? fallback : c.domain;
  const auto [kind, arg] = head_tail(spec);
  if (kind == "all") {
    if (!g.is_finite()) throw ConfigError("--U all needs a finite graph; use ball:R");
    const auto v = g.vertices();
    return {v.begin(), v.end()};
  }
  if (kind == "ball") return ball(g, root_of(c, g), parse_number<int>("U", arg));
  if (kind == "list") {
    auto list = parse_list<VertexId>("U", arg);
    for (VertexId x : list) {
      if (!g.contains(x)) throw ConfigError("--U: vertex " + std::to_string(x) + " is not in the graph");
    }
    return list;
  }
  throw ConfigError("--U: unknown set '" + spec + "'");
}

std::vector<VertexId> pick_probes(const RunConfig& c, const Exhaustion& ex) {
  if (!c.probes.empty()) return c.probes;
  std::vector<VertexId> probes{ex.root};
  std::unordered_map<VertexId, int> depth;
  for (std::size_t i = 0; i < ex.sets.back().size(); ++i) depth.emplace(ex.sets.back()[i], ex.depth[i]);
  std::vector<VertexId> candidates;
  for (VertexId x : ex.sets.front()) {
    if (x != ex.root && depth.at(x) <= ex.radii.front() - 2) candidates.push_back(x);
  }
  testkit::Rng rng(c.seed);
  const auto want = std::min<std::size_t>(static_cast<std::size_t>(std::max(c.random_probes, 0)),
                                          candidates.size());
  for (std::size_t i = 0; i < want; ++i) {
    std::swap(candidates[i], candidates[i + rng.below(candidates.size() - i)]);
    probes.push_back(candidates[i]);
  }
  return probes;
}

class Outputs {
 public:
  explicit Outputs(const RunConfig& c) : dir_(c.out_dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("--out: cannot create '" + dir_.string() + "': " + ec.message());
  }

  std::ofstream trace() const { return open("trace.csv"); }

  void result(const RunConfig& c, const std::string& graph_name, json result) const {
    json doc;
    doc["mode"] = c.mode;
    doc["config"] = config_json(c, graph_name);
    doc["result"] = std::move(result);
    auto out = open("result.json");
    out << doc.dump(2) << '\n';
  }

  std::ofstream open(const std::string& name) const {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + (dir_ / name).string() + "'");
    return out;
  }

 private:
  static json config_json(const RunConfig& c, const std::string& graph_name) {
    return json{
        {"graph", c.graph},
        {"graph_name", graph_name},
        {"phi", c.phi},
        {"W", c.potential},
        {"f", c.data},
        {"U", c.domain},
        {"radii", c.radii},
        {"alpha", c.alpha},
        {"seed", c.seed},
        {"thresholds",
         {{"complete_tol", c.thresholds.complete_tol},
          {"stabilization_tol", c.thresholds.stabilization_tol},
          {"incomplete_floor", c.thresholds.incomplete_floor}}},
        {"solver",
         {{"sweep_tol", c.solve.sweep_tol},
          {"residual_tol", c.solve.residual_tol},
          {"max_sweeps", c.solve.max_sweeps}}},
    };
  }

  fs::path dir_;
};

std::string four_places(double v) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

int run_validate(const RunConfig& c, const GraphSpec& spec, std::ostream& out, std::ostream& err) {
  const WeightedGraph& g = spec.graph;
  const std::vector<VertexId> probe =
      g.is_finite() ? std::vector<VertexId>(g.vertices().begin(), g.vertices().end())
                    : ball(g, root_of(c, g), c.radius);
  const ValidationReport report = validate(g, probe);
  Outputs io(c);
  auto trace = io.trace();
  trace << "kind,x,y,message\n";
  json violations = json::array();
  for (const Violation& v : report.violations) {
    trace << to_string(v.kind) << ',' << v.x << ',' << v.y << ",\"" << v.message << "\"\n";
    violations.push_back({{"kind", to_string(v.kind)}, {"x", v.x}, {"y", v.y}, {"message", v.message}});
    err << "validation: " << v.message
        << '\n';
  }
  io.result(c, g.name(), json{{"ok", report.ok()}, {"violations", violations}});
  out << (report.ok() ? "graph ok" : "graph invalid") << " (" << probe.size()
      << " vertices checked)\n";
  return report.ok() ? kOk : kConfigError;
}

int run_solve(const RunConfig& c, const GraphSpec& spec, std::ostream& out) {
  const WeightedGraph& g = spec.graph;
  const Nonlinearity phi = Nonlinearity::parse(c.phi);
  const Potential W = make_potential(c, g, phi);
  const std::vector<VertexId> U = make_domain(c, g, "all");
  const DataSpec d = make_data(c);
  const VertexFunction f = d.is_delta ? VertexFunction::delta(d.at, d.value)
                                      : VertexFunction::constant_on(U, d.value);
  const SolveResult r = solve_dirichlet(g, W, phi, f, U, c.solve);
  const ResidualReport res = residual(g, W, phi, f, r.u, U);

  Outputs io(c);
  auto trace = io.trace();
  trace << "vertex,value,residual,abs_residual,sweeps,energy,final_increment,scaled_residual\n";
  double sup = 0.0;
  for (std::size_t i = 0; i < U.size(); ++i) {
    const auto& e = res.entries[i];
    const double rv = e.value.value_or(std::nan(""));
    if (e.value) sup = std::max(sup, std::abs(rv));
    trace << r.vertices[i] << ',' << format_number(r.values[i]) << ',' << format_number(rv) << ','
          << format_number(std::abs(rv)) << ',' << r.sweeps_used << ','
          << format_number(r.energy_value) << ',' << format_number(r.final_increment) << ','
          << format_number(r.scaled_residual) << '\n';
  }
  io.result(c, g.name(),
            json{{"vertices", r.vertices},
                 {"values", r.values},
                 {"residual_inf", sup},
                 {"range_violations", res.range_violations},
                 {"scaled_residual", r.scaled_residual},
                 {"sweeps", r.sweeps_used},
                 {"energy", r.energy_value},
                 {"final_increment", r.final_increment},
                 {"converged", r.converged}});
  for (std::size_t i = 0; i < U.size(); ++i) {
    out << "u(" << r.vertices[i] << ") = " << four_places(r.values[i]) << '\n';
  }
  return r.converged ? kOk : kNotConverged;
}

Exhaustion exhaustion_for(const RunConfig& c, const WeightedGraph& g) {
  return make_exhaustion(g, root_of(c, g), Schedule::explicit_list(c.radii));
}

int run_resolve(const RunConfig& c, const GraphSpec& spec, std::ostream& out) {
  const WeightedGraph& g = spec.graph;
  const Nonlinearity phi = Nonlinearity::parse(c.phi);
  const Potential W = make_potential(c, g, phi);
  const DataSpec d = make_data(c);
  const VertexField f = [d](VertexId x) {
    return d.is_delta ? (x == d.at ? d.value : 0.0) : d.value;
  };
  const Exhaustion ex = exhaustion_for(c, g);
  const std::vector<VertexId> probes = pick_probes(c, ex);
  const ResolventEstimate est = extended_resolvent(g, W, phi, f, ex, probes, c.resolvent_tol, c.solve);

  Outputs io(c);
  auto trace = io.trace();
  write_resolvent_csv(trace, est);
  json rows = json::array();
  for (const ProbeSeries& s : est.probes) {
    rows.push_back({{"probe", s.probe},
                    {"value", s.values.back()},
                    {"increment", s.increments.back()},
                    {"converged", s.converged},
                    {"converged_at", s.converged ? json(s.converged_at) : json(nullptr)}});
    out << "R f(" << s.probe << ") ~ " << format_number(s.values.back())
        << (s.converged ? "" : " (not converged)") << '\n';
  }
  io.result(c, g.name(),
            json{{"probes", rows},
                 {"radius", est.steps.back().radius},
                 {"size", est.steps.back().size},
                 {"converged", est.converged},
                 {"solver_converged", est.solver_converged}});
  return est.solver_converged ? kOk : kNotConverged;
}

int run_classify(const RunConfig& c, const GraphSpec& spec, std::ostream& out, std::ostream& err) {
  const WeightedGraph& g = spec.graph;
  const Nonlinearity phi = Nonlinearity::parse(c.phi);
  const Potential W = make_potential(c, g, phi);
  const Exhaustion ex = exhaustion_for(c, g);
  const std::vector<VertexId> probes = pick_probes(c, ex);
  const ClassificationReport report =
      classify(g, W, phi, c.alpha, ex, probes, c.thresholds, c.solve, c.parallel);

  Outputs io(c);
  {
    auto trace = io.trace();
    write_classification_csv(trace, report);
  }
  std::stringstream buffer;
  write_classification_json(buffer, report);
  json doc = json::parse(buffer);
  // Thresholds echo configuration and live under "config".
  doc.erase("thresholds");
  io.result(c, g.name(), std::move(doc));

  for (const AlphaSummary& a : report.summaries) {
    out << "alpha " << format_number(a.alpha) << ": defect " << format_number(a.defect)
        << ", stabilization " << format_number(a.stabilization) << ", " << to_string(a.verdict)
        << '\n';
  }
  out << "verdict: " << to_string(report.verdict) << '\n';
  for (const std::string& v : report.violations) err << "invariant: " << v << '\n';
  return report.solver_converged ? kOk : kNotConverged;
}

int run_path_criterion(const RunConfig& c, const GraphSpec& spec, std::ostream& out) {
  const WeightedGraph& g = spec.graph;
  const Nonlinearity phi = Nonlinearity::parse(c.phi);
  const Potential W = make_potential(c, g, phi);
  if (c.alpha.size() != 1) throw ConfigError("path-criterion needs exactly one --alpha");
  PathGenerator path;
  std::size_t length = c.length;
  if (!c.path.empty()) {
    auto list = c.path;
    length = list.size();
    path = [list](std::size_t k) { return list.at(k); };
  } else if (spec.family) {
    path = testkit::ray(*spec.family);
  } else {
    throw ConfigError("path-criterion needs --path for graphs loaded from a file");
  }
  const PathCriterionReport r = path_criterion(g, W, phi, path, c.alpha.front(), length);

  Outputs io(c);
  auto trace = io.trace();
  trace << "k,vertex,term,partial_sum,max_degree_ratio,term_lower_bound\n";
  for (std::size_t k = 0; k < r.terms.size(); ++k) {
    trace << k + 1 << ',' << path(k) << ',' << format_number(r.terms[k]) << ','
          << format_number(r.partial_sums[k]) << ',' << format_number(r.max_degree_ratio) << ','
          << format_number(r.term_lower_bound) << '\n';
  }
  io.result(c, g.name(),
            json{{"length", r.length},
                 {"sum", r.sum},
                 {"max_degree_ratio", r.max_degree_ratio},
                 {"term_lower_bound", r.term_lower_bound},
                 {"diagnosis", to_string(r.diagnosis)}});
  out << "S_" << r.length << " = " << format_number(r.sum) << " (" << to_string(r.diagnosis)
      << ")\n";
  return kOk;
}

int run_verify_liouville(const RunConfig& c, const GraphSpec& spec, std::ostream& out) {
  const WeightedGraph& g = spec.graph;
  const Nonlinearity phi = Nonlinearity::parse(c.phi);
  const Potential W = make_potential(c, g, phi);
  if (c.alpha.size() != 1) throw ConfigError("verify-liouville needs exactly one --alpha");
  const Exhaustion ex = exhaustion_for(c, g);
  const std::vector<VertexId> probes = pick_probes(c, ex);
  const LiouvilleReport r = verify_liouville(g, W, phi, ex, c.alpha.front(), probes, c.solve);

  Outputs io(c);
  auto trace = io.trace();
  trace << "radius,vertex,depth,interior,w,residual,abs_residual\n";
  double max_w = 0.0;
  for (const LiouvilleProbe& p : r.probes) {
    trace << r.radius << ',' << p.x << ',' << p.depth << ',' << (p.interior ? 1 : 0) << ',' << format_number(p.w)
          << ',' << format_number(p.residual) << ',' << format_number(std::abs(p.residual)) << '\n';
    max_w = std::max(max_w, p.w);
  }
  io.result(c, g.name(),
            json{{"radius", r.radius},
                 {"max_interior_residual", r.max_interior_residual},
                 {"max_probe_w", max_w},
                 {"bounds_ok", r.bounds_ok},
                 {"solver_converged", r.solver_converged}});
  out << "max interior residual " << format_number(r.max_interior_residual) << ", max w "
      << format_number(max_w) << (r.bounds_ok ? "" : ", bounds violated") << '\n';
  return r.solver_converged ? kOk : kNotConverged;
}

int run_gen(const RunConfig& c, const GraphSpec& spec, std::ostream& out) {
  const WeightedGraph& g = spec.graph;
  const std::vector<VertexId> vertices =
      g.is_finite() ? std::vector<VertexId>(g.vertices().begin(), g.vertices().end())
                    : ball(g, root_of(c, g), c.radius);
  Outputs io(c);
  {
    auto file = io.open("graph.json");
    write_graph_json(file, g, vertices);
  }
  auto trace = io.trace();
  trace << "vertex,measure,degree\n";
  for (VertexId x : vertices) {
    trace << x << ',' << format_number(g.measure(x)) << ',' << format_number(g.degree(x)) << '\n';
  }
  io.result(c, g.name(), json{{"vertices", vertices.size()}});
  out << "wrote " << vertices.size() << " vertices to " << (fs::path(c.out_dir) / "graph.json").string()
      << '\n';
  return kOk;
}

}  // namespace

void RunConfig::check() const {
  if (std::find(kModes.begin(), kModes.end(), mode) == kModes.end()) {
    throw ConfigError("unknown mode '" + mode + "'");
  }
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string("--") + name + " must be positive");
  };
  positive(thresholds.complete_tol, "complete-tol");
  positive(thresholds.stabilization_tol, "stabilization-tol");
  positive(thresholds.incomplete_floor, "incomplete-floor");
  positive(solve.sweep_tol, "sweep-tol");
  positive(solve.residual_tol, "residual-tol");
  positive(resolvent_tol, "resolvent-tol");
  if (solve.max_sweeps < 1) throw ConfigError("--max-sweeps must be at least 1");
  if (radius < 0) throw ConfigError("--radius must be non-negative");
  const bool needs_radii = mode == "resolve" || mode == "classify" || mode == "verify-liouville";
  if (needs_radii && radii.empty()) {
    throw ConfigError(mode + " needs --radii or --doubling");
  }
  const bool needs_alpha = mode == "classify" || mode == "path-criterion" || mode == "verify-liouville";
  if (needs_alpha && alpha.empty()) throw ConfigError(mode + " needs --alpha");
  if (mode == "path-criterion" && length == 0 && path.empty()) {
    throw ConfigError("--length must be positive");
  }
}

std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out,
                                    std::ostream& err) {
  CLI::App app{"Nonlinear Dirichlet resolvents and completeness at infinity on weighted graphs",
               "nlresolvent"};
  app.require_subcommand(1);
  std::map<std::string, std::string> flag_values;
  std::string config_path;
  std::vector<std::pair<CLI::App*, std::vector<std::pair<std::string, CLI::Option*>>>> subs;
  for (const std::string& mode : kModes) {
    CLI::App* sub = app.add_subcommand(mode, "run the " + mode + " mode");
    std::vector<std::pair<std::string, CLI::Option*>> opts;
    for (const OptionSpec& o : kOptions) {
      opts.emplace_back(o.key, sub->add_option(std::string("--") + o.key, flag_values[o.key], o.help));
    }
    sub->add_option("--config", config_path, "JSON file with the same keys as the flags");
    subs.emplace_back(sub, std::move(opts));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  for (auto& [sub, opts] : subs) {
    if (!sub->parsed()) continue;
    std::map<std::string, std::string> raw;
    if (!config_path.empty()) raw = load_config_file(config_path);
    if (auto it = raw.find("mode"); it != raw.end()) {
      if (it->second != sub->get_name()) {
        err << "warning: config mode '" << it->second << "' overridden by '" << sub->get_name()
            << "'\n";
      }
      raw.erase(it);
    }
    for (const auto& [key, opt] : opts) {
      if (opt->count() == 0) continue;
      auto it = raw.find(key);
      if (it != raw.end() && it->second != flag_values[key]) {
        err << "warning: --" << key << " " << flag_values[key] << " overrides config value "
            << it->second << '\n';
      }
      raw[key] = flag_values[key];
    }
    return build_config(sub->get_name(), raw);
  }
  throw ConfigError("no mode given");
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  config.check();
  const GraphSpec spec = make_graph(config);
  const std::string& m = config.mode;
  if (m == "validate") return run_validate(config, spec, out, err);
  if (m == "solve") return run_solve(config, spec, out);
  if (m == "resolve") return run_resolve(config, spec, out);
  if (m == "classify") return run_classify(config, spec, out, err);
  if (m == "path-criterion") return run_path_criterion(config, spec, out);
  if (m == "verify-liouville") return run_verify_liouville(config, spec, out);
  return run_gen(config, spec, out);
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    const auto config = parse_args(argc, argv, out, err);
    if (!config) return kOk;
    return run(*config, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const GraphError& e) {
    err << "graph error: " << e.what() << '\n';
  } catch (const CapError& e) {
    err << "cap error: " << e.what() << '\n';
  } catch (const RangeError& e) {
    err << "range error: " << e.what() << '\n';
  } catch (const InvalidPath& e) {
    err << "path error: " << e.what() << '\n';
  } catch (const InvalidParameter& e) {
    err << "invalid parameter: " << e.what() << '\n';
  } catch (const InternalError& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kConfigError;
}

}  // namespace nlresolvent::cli
