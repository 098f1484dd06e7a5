// Acceptance runs. Prints one PASS/FAIL line per criterion and exits non-zero
// when any selected criterion fails. Usage: nlresolvent_acceptance [AC1 ... AC8]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "json.hpp"
#include "nlresolvent/completeness.hpp"
#include "nlresolvent/format.hpp"
#include "nlresolvent/testkit.hpp"

namespace nlresolvent {
namespace {

namespace fs = std::filesystem;
using testkit::Rng;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::vector<VertexId> all_of(const WeightedGraph& g) {
  return {g.vertices().begin(), g.vertices().end()};
}

Potential random_potential(const WeightedGraph& g, Rng& rng, double lo, double hi) {
  auto table = std::make_shared<std::map<VertexId, double>>();
  for (VertexId x : g.vertices()) (*table)[x] = rng.uniform(lo, hi);
  Potential W;
  W.value = [table](VertexId x) { return table->at(x); };
  W.lower_bound = lo;
  W.description = "random";
  return W;
}

VertexFunction random_data(std::span<const VertexId> on, Rng& rng, double lo, double hi) {
  VertexFunction f;
  for (VertexId x : on) f.set(x, rng.uniform(lo, hi));
  return f;
}

std::vector<VertexId> random_subset(std::span<const VertexId> from, Rng& rng, double p) {
  std::vector<VertexId> out;
  for (VertexId x : from) {
    if (rng.bernoulli(p)) out.push_back(x);
  }
  if (out.empty()) out.push_back(from[rng.below(from.size())]);
  return out;
}

testkit::RandomSparse random_family(Rng& rng, int max_n, std::uint64_t seed) {
  testkit::RandomSparse r;
  r.n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_n)));
  r.density = rng.uniform(0.02, 0.4);
  r.weight_lo = 0.1;
  r.weight_hi = 2.0;
  r.measure_lo = 0.5;
  r.measure_hi = 2.0;
  r.seed = seed;
  return r;
}

double sup_diff(const VertexFunction& a, const VertexFunction& b, std::span<const VertexId> on) {
  double d = 0.0;
  for (VertexId x : on) d = std::max(d, std::abs(a(x) - b(x)));
  return d;
}

// phi scaled by c in (0, 1], so that c phi <= phi on [0, inf).
Nonlinearity scaled(const Nonlinearity& phi, double c) {
  Nonlinearity::Parts p;
  p.name = phi.name() + "*" + format_number(c);
  p.phi = [phi, c](double t) { return c * phi.phi(t); };
  p.inverse = [phi, c](double s) { return phi.phi_inv(s / c); };
  p.antiderivative = [phi, c](double s) { return c * phi.Phi(s); };
  p.range = Range{c * phi.range().lo, c * phi.range().hi};
  return Nonlinearity(p);
}

std::vector<Nonlinearity> builtins() {
  return {Nonlinearity::identity(), Nonlinearity::odd_power(3.0), Nonlinearity::odd_power(0.5),
          Nonlinearity::odd_log(), Nonlinearity::bounded_atan()};
}

Outcome ac1() {
  double worst = 0.0;
  int unconverged = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const WeightedGraph g = testkit::generate(random_family(rng, 50, seed));
    const auto all = all_of(g);
    const auto U = seed % 2 == 0 ? all : random_subset(all, rng, 0.7);
    const Potential W = random_potential(g, rng, 0.5, 3.0);
    const VertexFunction f = random_data(all, rng, -1.0, 1.0);
    const SolveResult s = solve_dirichlet(g, W, Nonlinearity::identity(), f, U);
    if (!s.converged) ++unconverged;
    worst = std::max(worst, sup_diff(s.u, testkit::linear_oracle(g, W, f, U), U));
  }
  return {worst <= 1e-9 && unconverged == 0,
          "max sup diff " + sci(worst) + " over 100 graphs, " + std::to_string(unconverged) +
              " unconverged"};
}

Outcome ac2() {
  struct Instance {
    WeightedGraph g;
    std::vector<VertexId> U;
  };
  std::vector<Instance> suite;
  suite.push_back({GraphBuilder().add_vertex(0, 1.0).build(), {0}});
  suite.push_back({testkit::generate(testkit::FinitePath{2}), {0, 1}});
  suite.push_back({testkit::generate(testkit::FinitePath{3}), {0, 1, 2}});
  suite.push_back({testkit::generate(testkit::Complete{3}), {0, 1, 2}});
  suite.push_back({testkit::generate(testkit::Star{4}), {0, 1, 2}});
  // U in the middle of a longer path: the boundary enters through deg.
  suite.push_back({testkit::generate(testkit::FinitePath{5}), {1, 2, 3}});
  suite.push_back({GraphBuilder()
                       .add_vertex(0, 0.5)
                       .add_vertex(1, 2.0)
                       .add_vertex(2, 1.5)
                       .add_edge(0, 1, 0.3)
                       .add_edge(1, 2, 1.7)
                       .build(),
                   {0, 1, 2}});
  suite.push_back({testkit::generate(testkit::LatticeZ{}), {-1, 0, 1}});

  const std::vector<Nonlinearity> phis{Nonlinearity::odd_power(3.0), Nonlinearity::odd_log(),
                                       Nonlinearity::bounded_atan()};
  double worst = 0.0;
  int cases = 0;
  Rng rng(2024);
  for (const Instance& inst : suite) {
    for (const Nonlinearity& phi : phis) {
      for (double w : {0.5, 1.0, 2.5}) {
        for (int k = 0; k < 3; ++k) {
          const VertexFunction f = random_data(inst.U, rng, -1.0, 1.0);
          const Potential W = Potential::constant(w);
          const SolveResult s = solve_dirichlet(inst.g, W, phi, f, inst.U);
          const VertexFunction bf = testkit::brute_force_minimizer(inst.g, W, phi, f, inst.U);
          worst = std::max(worst, sup_diff(s.u, bf, inst.U));
          ++cases;
        }
      }
    }
  }
  return {worst <= 1e-4, "max sup diff " + sci(worst) + " over " + std::to_string(cases) + " cases"};
}

Outcome ac3() {
  const double slack = 1e-9;
  const auto phis = builtins();
  int violations = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(10'000 + seed);
    const WeightedGraph g = testkit::generate(random_family(rng, 30, 10'000 + seed));
    const auto all = all_of(g);
    const auto V = random_subset(all, rng, 0.8);
    const auto U = random_subset(V, rng, 0.6);
    const Potential W = random_potential(g, rng, 0.5, 3.0);
    const Nonlinearity& phi = phis[seed % phis.size()];
    const VertexFunction f = random_data(all, rng, 0.0, 1.0);
    VertexFunction h;
    for (VertexId x : all) h.set(x, f(x) + rng.uniform(0.0, 1.0));
    const SolveResult uf = solve_dirichlet(g, W, phi, f, U);
    const SolveResult uh = solve_dirichlet(g, W, phi, h, U);
    const SolveResult vf = solve_dirichlet(g, W, phi, f, V);
    for (VertexId x : all) {
      if (uf.u(x) < -slack) ++violations;
      if (uf.u(x) > uh.u(x) + slack) ++violations;
      if (uf.u(x) > vf.u(x) + slack) ++violations;
    }
  }
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(20'000 + seed);
    const WeightedGraph g = testkit::generate(random_family(rng, 30, 20'000 + seed));
    const auto all = all_of(g);
    const auto U = random_subset(all, rng, 0.8);
    const Potential W = random_potential(g, rng, 0.5, 3.0);
    auto extra = std::make_shared<std::map<VertexId, double>>();
    for (VertexId x : all) (*extra)[x] = rng.uniform(0.0, 2.0);
    Potential larger;
    larger.value = [W, extra](VertexId x) { return W(x) + extra->at(x); };
    larger.lower_bound = W.lower_bound;
    const Nonlinearity& phi = phis[seed % phis.size()];
    // psi <= phi on [0, inf): a scaled copy, or log and atan under identity.
    Nonlinearity psi = scaled(phi, rng.uniform(0.2, 1.0));
    if (seed % 5 == 0) psi = seed % 2 == 0 ? Nonlinearity::odd_log() : Nonlinearity::bounded_atan();
    const Nonlinearity& top = seed % 5 == 0 ? phis[0] : phi;
    const VertexFunction f = random_data(all, rng, 0.0, 1.0);
    const SolveResult small = solve_dirichlet(g, larger, psi, f, U);
    const SolveResult big = solve_dirichlet(g, W, top, f, U);
    for (VertexId x : all) {
      if (small.u(x) > big.u(x) + slack) ++violations;
    }
  }
  return {violations == 0, std::to_string(violations) + " violations over 200 triples and 100 pairs"};
}

const std::vector<double> kAlphaGrid{0.5, 1.0, 2.0};

Outcome ac4() {
  const WeightedGraph z = testkit::generate(testkit::LatticeZ{});
  const Exhaustion ex = make_exhaustion(z, 0, Schedule::doubling(25, 5));
  const std::vector<VertexId> root{0};
  Outcome o;
  for (const char* spec : {"identity", "power:3", "log"}) {
    const ClassificationReport r =
        classify(z, Potential::constant(1.0), Nonlinearity::parse(spec), kAlphaGrid, ex, root);
    double defect = 0.0;
    for (const AlphaSummary& a : r.summaries) defect = std::max(defect, a.defect);
    const bool ok = r.verdict == Verdict::complete_at_infinity && defect <= 1e-4;
    o.pass = o.pass && ok;
    o.detail += std::string(o.detail.empty() ? "" : "; ") + spec + " " + to_string(r.verdict) +
                " root defect " + sci(defect);
  }
  return o;
}

Outcome ac5() {
  const WeightedGraph g = testkit::generate(testkit::BirthDeath::geometric(4.0));
  const Exhaustion ex = make_exhaustion(g, 0, Schedule::doubling(10, 4));
  const std::vector<VertexId> probes{0, 1, 2, 3};
  const std::vector<double> alpha{1.0};
  const Potential W = Potential::constant(1.0);
  const Nonlinearity id = Nonlinearity::identity();
  const ClassificationReport r = classify(g, W, id, alpha, ex, probes);
  const AlphaSummary& s = r.summaries.front();
  const LiouvilleReport l = verify_liouville(g, W, id, ex, r.series.front(), probes);
  double w_min = 1.0;
  for (const LiouvilleProbe& p : l.probes) w_min = std::min(w_min, p.w);

  std::ifstream in(NLRESOLVENT_GOLDEN_DIR "/birth_death_defect.json");
  const double golden = in ? nlohmann::json::parse(in).at("defect").get<double>() : NAN;
  const double root_defect = r.series.front().defects.front().back();

  const bool ok = s.stabilization <= 1e-6 && s.defect >= 1e-2 &&
                  r.verdict == Verdict::incomplete_at_infinity && l.bounds_ok && w_min > 0.0 &&
                  l.max_w <= 1.0 && l.max_interior_residual < 1e-6 &&
                  std::abs(root_defect - golden) <= 1e-9;
  return {ok, "root defect " + format_number(root_defect) + " (golden " + format_number(golden) +
                  "), stabilization " + sci(s.stabilization) + ", " + to_string(r.verdict) +
                  ", w in [" + sci(w_min) + ", " + sci(l.max_w) + "], interior residual " +
                  sci(l.max_interior_residual)};
}

Outcome ac6() {
  const WeightedGraph g = testkit::generate(testkit::BirthDeath::geometric(4.0));
  const Exhaustion ex = make_exhaustion(g, 0, Schedule::doubling(10, 4));
  const std::vector<VertexId> root{0};
  const Nonlinearity phi = Nonlinearity::odd_power(0.5);
  const ClassificationReport r = classify(g, large_potential(g, phi), phi, kAlphaGrid, ex, root);
  double defect = 0.0;
  for (const AlphaSummary& a : r.summaries) defect = std::max(defect, a.defect);
  return {r.verdict == Verdict::complete_at_infinity && defect <= 1e-4,
          to_string(r.verdict) + ", root defect " + sci(defect)};
}

Outcome ac7() {
  int violations = 0;
  std::size_t runs = 0;
  const auto phis = builtins();

  // Defect bounds and monotonicity on every canonical family.
  struct Family {
    testkit::GraphFamily family;
    std::vector<int> radii;
  };
  const std::vector<Family> families{
      {testkit::LatticeZ{}, {10, 20, 40}},
      {testkit::BirthDeath::geometric(4.0), {5, 10, 20}},
      {testkit::BirthDeath::geometric(1.5), {5, 10, 20}},
      {testkit::SymmetricTree::regular(2), {3, 6, 9}},
      {testkit::FinitePath{12}, {4, 8, 16}},
  };
  for (const Family& fam : families) {
    const WeightedGraph g = testkit::generate(fam.family);
    const Exhaustion ex = make_exhaustion(g, 0, Schedule::explicit_list(fam.radii));
    const std::vector<VertexId> probes{0, ex.sets.front()[ex.sets.front().size() / 2]};
    for (const Nonlinearity& phi : phis) {
      const std::vector<double> grid{0.25, 1.0, 3.0};
      const ClassificationReport r = classify(g, Potential::constant(1.0), phi, grid, ex, probes);
      violations += static_cast<int>(r.violations.size());
      ++runs;
    }
  }

  // Sup bound, Green's formula and local minimality on random instances.
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    Rng rng(30'000 + seed);
    const WeightedGraph g = testkit::generate(random_family(rng, 25, 30'000 + seed));
    const auto all = all_of(g);
    const auto U = random_subset(all, rng, 0.8);
    const Potential W = random_potential(g, rng, 0.5, 3.0);
    const Nonlinearity& phi = phis[seed % phis.size()];
    const VertexFunction f = random_data(all, rng, -1.0, 1.0);
    const SolveResult s = solve_dirichlet(g, W, phi, f, U);
    ++runs;
    if (!s.converged) ++violations;
    const double bound = f.sup_norm() / W.lower_bound;
    for (VertexId x : U) {
      if (std::abs(s.u(x)) > bound + 1e-9) ++violations;
    }

    const VertexFunction v = random_data(random_subset(all, rng, 0.5), rng, -1.0, 1.0);
    double green = 0.0;
    for (VertexId x : all) green += laplacian_apply(g, s.u, x) * v(x) * g.measure(x);
    if (std::abs(green - energy(g, s.u, v)) > 1e-10 * (1.0 + energy(g, s.u, s.u))) ++violations;

    const double e0 = energy_functional(g, W, phi, f, s.u, U);
    for (VertexId x : U) {
      for (double eps : {1e-3, -1e-3, 1e-2, -1e-2}) {
        VertexFunction p = s.u;
        p.set(x, s.u(x) + eps);
        if (energy_functional(g, W, phi, f, p, U) < e0 - 1e-12 * (1.0 + std::abs(e0))) ++violations;
      }
    }
  }
  return {violations == 0,
          std::to_string(violations) + " violations over " + std::to_string(runs) + " runs"};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome ac8() {
  const fs::path base = fs::temp_directory_path() / "nlresolvent-acceptance-ac8";
  fs::remove_all(base);
  Outcome o;
  int case_id = 0;
  for (const char* spec : {"identity", "power:3", "log"}) {
    ++case_id;
    std::string traces[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = base / (std::to_string(case_id) + "-" + std::to_string(rep));
      const std::vector<std::string> args{
          "nlresolvent", "classify", "--graph", "lattice-z", "--phi", spec, "--W", "const:1",
          "--alpha", "0.5,1,2", "--doubling", "25,5", "--seed", "7", "--out", out.string()};
      std::vector<const char*> argv;
      for (const std::string& a : args) argv.push_back(a.c_str());
      std::ostringstream sink;
      const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), sink, sink);
      if (code != cli::kOk) {
        o.pass = false;
        o.detail += std::string(spec) + " exit " + std::to_string(code) + "; ";
      }
      traces[rep] = read_file(out / "trace.csv");
    }
    const bool same = !traces[0].empty() && traces[0] == traces[1];
    o.pass = o.pass && same;
    o.detail += std::string(spec) + (same ? " identical" : " differs") + " (" +
                std::to_string(traces[0].size()) + " bytes); ";
  }
  fs::remove_all(base);
  o.detail.resize(o.detail.size() - 2);
  return o;
}

struct Criterion {
  const char* id;
  const char* title;
  std::function<Outcome()> run;
  double budget_seconds;
};

}  // namespace
}  // namespace nlresolvent

int main(int argc, char** argv) {
  using namespace nlresolvent;
  const std::vector<Criterion> criteria{
      {"AC1", "linear oracle equivalence", ac1, 10.0},
      {"AC2", "nonlinear micro-oracle", ac2, 30.0},
      {"AC3", "comparison, monotonicity and domination", ac3, 0.0},
      {"AC4", "complete case on the lattice", ac4, 120.0},
      {"AC5", "incomplete case on the 4^n chain", ac5, 0.0},
      {"AC6", "large potential on the 4^n chain", ac6, 0.0},
      {"AC7", "structural invariants", ac7, 0.0},
      {"AC8", "determinism of the lattice run", ac8, 0.0},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0.0 && secs > c.budget_seconds) {
      o.pass = false;
      o.detail += "; over the " + sci(c.budget_seconds) + " s budget";
    }
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.2f s", secs);
    std::cout << c.id << ' ' << (o.pass ? "PASS" : "FAIL") << "  " << c.title << ": " << o.detail
              << " [" << timing << "]" << std::endl;
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
