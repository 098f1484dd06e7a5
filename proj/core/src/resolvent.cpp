#include "nlresolvent/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>

#include "nlresolvent/format.hpp"

namespace nlresolvent {

Schedule Schedule::doubling(int start, int steps) {
  if (start < 1 || steps < 1) {
    throw InvalidParameter("doubling schedule needs start >= 1 and steps >= 1");
  }
  Schedule s;
  long long r = start;
  for (int i = 0; i < steps; ++i) {
    if (r > std::numeric_limits<int>::max()) {
      throw InvalidParameter("doubling schedule overflows the radius range");
    }
    s.radii.push_back(static_cast<int>(r));
    r *= 2;
  }
  return s;
}

Schedule Schedule::explicit_list(std::vector<int> radii) {
  return Schedule{std::move(radii)};
}

int Exhaustion::depth_of(VertexId x) const {
  if (sets.empty()) return -1;
  const auto& last = sets.back();
  auto it = std::find(last.begin(), last.end(), x);
  if (it == last.end()) return -1;
  return depth[static_cast<std::size_t>(it - last.begin())];
}

Exhaustion make_exhaustion(const WeightedGraph& g, VertexId root,
                           const Schedule& schedule, std::size_t max_vertices) {
  if (schedule.radii.empty()) {
    throw InvalidParameter("exhaustion schedule is empty");
  }
  for (std::size_t i = 0; i < schedule.radii.size(); ++i) {
    if (schedule.radii[i] < 0) {
      throw InvalidParameter("exhaustion radii must be non-negative");
    }
    if (i > 0 && schedule.radii[i] <= schedule.radii[i - 1]) {
      throw InvalidParameter("exhaustion radii must be strictly increasing");
    }
  }

  Exhaustion ex;
  ex.root = root;
  ex.radii = schedule.radii;
  std::vector<std::pair<VertexId, int>> visited;
  for (int radius : schedule.radii) {
    try {
      visited = ball_with_depth(g, root, radius, max_vertices);
    } catch (const CapError& e) {
      throw CapError("exhaustion step with radius " + std::to_string(radius) +
                         " exceeds the vertex cap of " + std::to_string(max_vertices),
                     max_vertices);
    }
    std::vector<VertexId> set;
    set.reserve(visited.size());
    for (const auto& [x, d] : visited) set.push_back(x);
    ex.sets.push_back(std::move(set));
  }
  ex.depth.reserve(visited.size());
  for (const auto& [x, d] : visited) ex.depth.push_back(d);
  return ex;
}

ResolventEstimate extended_resolvent(const WeightedGraph& g, const Potential& W,
                                     const Nonlinearity& phi, const VertexField& f,
                                     const Exhaustion& ex,
                                     std::span<const VertexId> probes, double tol,
                                     const SolveOptions& opts) {
  if (!(tol > 0.0)) {
    throw InvalidParameter("resolvent tolerance must be positive");
  }
  if (ex.sets.empty()) {
    throw InvalidParameter("exhaustion has no steps");
  }
  ResolventEstimate est;
  est.tol = tol;
  for (VertexId p : probes) {
    ProbeSeries series;
    series.probe = p;
    est.probes.push_back(std::move(series));
  }

  std::unordered_map<VertexId, double> previous;
  for (std::size_t n = 0; n < ex.sets.size(); ++n) {
    const std::vector<VertexId>& K = ex.sets[n];
    for (VertexId x : K) {
      const double v = f(x);
      if (!std::isfinite(v) || v < 0.0) {
        throw InvalidParameter("resolvent data must be finite and non-negative; f(" +
                               std::to_string(x) + ") = " + format_number(v));
      }
    }
    std::vector<double> warm(K.size(), 0.0);
    for (std::size_t i = 0; i < K.size(); ++i) {
      auto it = previous.find(K[i]);
      if (it != previous.end()) warm[i] = it->second;
    }

    SolveResult solve = solve_dirichlet(g, W, phi, f, K, opts, warm);

    previous.clear();
    for (std::size_t i = 0; i < K.size(); ++i) previous.emplace(K[i], solve.values[i]);

    est.steps.push_back(ResolventStep{
        .n = n,
        .radius = ex.radii[n],
        .size = K.size(),
        .sweeps = solve.sweeps_used,
        .residual = solve.residual_inf,
        .scaled_residual = solve.scaled_residual,
        .solver_converged = solve.converged,
        .max_decrease = solve.max_decrease,
    });
    est.solver_converged = est.solver_converged && solve.converged;

    for (ProbeSeries& series : est.probes) {
      auto it = previous.find(series.probe);
      const double value = it == previous.end() ? 0.0 : it->second;
      const double before = series.values.empty() ? 0.0 : series.values.back();
      series.values.push_back(value);
      series.increments.push_back(value - before);
      series.max_decrease = std::max(series.max_decrease, before - value);
    }
    if (n + 1 == ex.sets.size()) est.last = std::move(solve);
  }

  est.converged = true;
  for (ProbeSeries& series : est.probes) {
    std::size_t at = series.increments.size();
    while (at > 0 && std::abs(series.increments[at - 1]) <= tol) --at;
    series.converged = at < series.increments.size();
    series.converged_at = at;
    est.converged = est.converged && series.converged;
    est.max_observed_decrease = std::max(est.max_observed_decrease, series.max_decrease);
  }
  return est;
}

void write_resolvent_csv(std::ostream& out, const ResolventEstimate& est, bool header) {
  if (header) {
    out << "n,radius,size,probe_id,value,increment,sweeps,residual\n";
  }
  for (const ResolventStep& step : est.steps) {
    for (const ProbeSeries& series : est.probes) {
      out << step.n << ',' << step.radius << ',' << step.size << ',' << series.probe << ','
          << format_number(series.values[step.n]) << ','
          << format_number(series.increments[step.n]) << ',' << step.sweeps << ','
          << format_number(step.residual) << '\n';
    }
  }
}

}  // namespace nlresolvent
