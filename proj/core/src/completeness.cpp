#include "nlresolvent/completeness.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <ostream>
#include <unordered_map>

#include "json.hpp"
#include "nlresolvent/format.hpp"

namespace nlresolvent {

const char* const kTruncationNote =
    "Finite exhaustion steps under-estimate the resolvent R(alpha W) and so "
    "over-estimate the conservation defect. An incomplete-at-infinity verdict "
    "therefore requires a stabilized defect; a complete-at-infinity verdict is "
    "conservative. Verdicts are relative to the finite alpha grid.";

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::complete_at_infinity: return "complete-at-infinity";
    case Verdict::incomplete_at_infinity: return "incomplete-at-infinity";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

std::string to_string(PathDiagnosis d) {
  switch (d) {
    case PathDiagnosis::diverges: return "diverges";
    case PathDiagnosis::summable: return "summable";
    case PathDiagnosis::undetermined: return "undetermined";
  }
  return "undetermined";
}

void Thresholds::check() const {
  if (!(complete_tol > 0.0) || !(stabilization_tol > 0.0) || !(incomplete_floor > 0.0)) {
    throw InvalidParameter("classification thresholds must be positive");
  }
}

DefectSeries conservation_defect(const WeightedGraph& g, const Potential& W,
                                 const Nonlinearity& phi, double alpha,
                                 const Exhaustion& ex, std::span<const VertexId> probes,
                                 const SolveOptions& opts) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw InvalidParameter("alpha must be a finite non-negative number");
  }
  const VertexField data = [&W, alpha](VertexId x) { return alpha * W(x); };

  DefectSeries out;
  out.alpha = alpha;
  // The resolvent tolerance only drives the per-probe convergence flag here;
  // classification applies its own thresholds to the defects.
  out.estimate = extended_resolvent(g, W, phi, data, ex, probes, 1e-9, opts);
  for (const ProbeSeries& s : out.estimate.probes) {
    std::vector<double> d;
    d.reserve(s.values.size());
    for (std::size_t n = 0; n < s.values.size(); ++n) {
      const double defect = alpha - s.values[n];
      if (defect < -kDefectSlack || defect > alpha + kDefectSlack) {
        out.violations.push_back("defect " + format_number(defect) + " at probe " +
                                 std::to_string(s.probe) + ", step " + std::to_string(n) +
                                 " is outside [0, alpha]");
      }
      if (n > 0 && defect > d.back() + kDefectSlack) {
        out.violations.push_back("defect increases at probe " + std::to_string(s.probe) +
                                 ", step " + std::to_string(n) + ": " +
                                 format_number(d.back()) + " -> " + format_number(defect));
      }
      d.push_back(defect);
    }
    out.defects.push_back(std::move(d));
  }
  return out;
}

namespace {

double stabilization_at(const std::vector<double>& defects, double alpha, std::size_t n) {
  const double before = n == 0 ? alpha : defects[n - 1];
  return std::abs(defects[n] - before);
}

AlphaSummary summarize(const DefectSeries& s, std::span<const VertexId> probes,
                       const Thresholds& t) {
  AlphaSummary a;
  a.alpha = s.alpha;
  if (probes.empty()) return a;
  bool first = true;
  for (std::size_t p = 0; p < s.defects.size(); ++p) {
    const auto& d = s.defects[p];
    const double final_defect = d.back();
    const double stab = stabilization_at(d, s.alpha, d.size() - 1);
    if (first || final_defect > a.defect) {
      a.defect = final_defect;
      a.probe = probes[p];
    }
    a.stabilization = first ? stab : std::max(a.stabilization, stab);
    first = false;
  }
  const bool stable = a.stabilization <= t.stabilization_tol;
  if (stable && a.defect <= t.complete_tol) {
    a.verdict = Verdict::complete_at_infinity;
  } else if (stable && a.defect >= t.incomplete_floor) {
    a.verdict = Verdict::incomplete_at_infinity;
  } else {
    a.verdict = Verdict::inconclusive;
  }
  return a;
}

}  // namespace

ClassificationReport classify(const WeightedGraph& g, const Potential& W,
                              const Nonlinearity& phi, std::span<const double> alpha_grid,
                              const Exhaustion& ex, std::span<const VertexId> probes,
                              const Thresholds& thresholds, const SolveOptions& opts,
                              bool parallel) {
  thresholds.check();
  if (alpha_grid.empty()) throw InvalidParameter("alpha grid is empty");
  for (double a : alpha_grid) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw InvalidParameter("alpha grid entries must be positive and finite");
    }
  }
  if (probes.empty()) throw InvalidParameter("classification needs at least one probe");

  ClassificationReport report;
  report.alpha_grid.assign(alpha_grid.begin(), alpha_grid.end());
  report.probes.assign(probes.begin(), probes.end());
  report.thresholds = thresholds;

  if (parallel && alpha_grid.size() > 1) {
    std::vector<std::future<DefectSeries>> jobs;
    for (double a : alpha_grid) {
      jobs.push_back(std::async(std::launch::async, [&, a] {
        return conservation_defect(g, W, phi, a, ex, probes, opts);
      }));
    }
    for (auto& job : jobs) report.series.push_back(job.get());
  } else {
    for (double a : alpha_grid) {
      report.series.push_back(conservation_defect(g, W, phi, a, ex, probes, opts));
    }
  }

  bool all_complete = true;
  bool any_incomplete = false;
  for (const DefectSeries& s : report.series) {
    report.summaries.push_back(summarize(s, probes, thresholds));
    const Verdict v = report.summaries.back().verdict;
    all_complete = all_complete && v == Verdict::complete_at_infinity;
    any_incomplete = any_incomplete || v == Verdict::incomplete_at_infinity;
    report.solver_converged = report.solver_converged && s.estimate.solver_converged;
    report.violations.insert(report.violations.end(), s.violations.begin(), s.violations.end());
  }
  if (!report.solver_converged) {
    report.verdict = Verdict::inconclusive;
  } else if (any_incomplete) {
    report.verdict = Verdict::incomplete_at_infinity;
  } else if (all_complete) {
    report.verdict = Verdict::complete_at_infinity;
  } else {
    report.verdict = Verdict::inconclusive;
  }
  return report;
}

void write_classification_csv(std::ostream& out, const ClassificationReport& report) {
  out << "alpha,n,radius,size,probe_id,value,increment,sweeps,residual,defect,stabilization\n";
  for (const DefectSeries& s : report.series) {
    const ResolventEstimate& est = s.estimate;
    for (const ResolventStep& step : est.steps) {
      for (std::size_t p = 0; p < est.probes.size(); ++p) {
        const ProbeSeries& series = est.probes[p];
        out << format_number(s.alpha) << ',' << step.n << ',' << step.radius << ','
            << step.size << ',' << series.probe << ','
            << format_number(series.values[step.n]) << ','
            << format_number(series.increments[step.n]) << ',' << step.sweeps << ','
            << format_number(step.residual) << ',' << format_number(s.defects[p][step.n])
            << ',' << format_number(stabilization_at(s.defects[p], s.alpha, step.n)) << '\n';
      }
    }
  }
}

void write_classification_json(std::ostream& out, const ClassificationReport& report) {
  using nlohmann::json;
  json doc;
  json alpha = json::array();
  json defect = json::array();
  json stabilization = json::array();
  json probe = json::array();
  json verdicts = json::array();
  for (const AlphaSummary& a : report.summaries) {
    alpha.push_back(a.alpha);
    defect.push_back(a.defect);
    stabilization.push_back(a.stabilization);
    probe.push_back(a.probe);
    verdicts.push_back(to_string(a.verdict));
  }
  doc["alpha"] = alpha;
  doc["defect"] = defect;
  doc["stabilization"] = stabilization;
  doc["defect_probe"] = probe;
  doc["alpha_verdict"] = verdicts;
  doc["verdict"] = to_string(report.verdict);
  doc["thresholds"] = {
      {"complete_tol", report.thresholds.complete_tol},
      {"stabilization_tol", report.thresholds.stabilization_tol},
      {"incomplete_floor", report.thresholds.incomplete_floor},
  };
  doc["probes"] = report.probes;
  doc["grid_relative"] = true;
  doc["solver_converged"] = report.solver_converged;
  doc["violations"] = report.violations;
  doc["note"] = report.note;
  out << doc.dump(2) << '\n';
}

PathCriterionReport path_criterion(const WeightedGraph& g, const Potential& W,
                                   const Nonlinearity& phi, const PathGenerator& path,
                                   double alpha, std::size_t N) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw InvalidParameter("path criterion needs 0 < alpha <= 1");
  }
  if (N == 0) throw InvalidParameter("path length must be positive");

  PathCriterionReport report;
  report.alpha = alpha;
  report.length = N;
  report.terms.reserve(N);
  report.partial_sums.reserve(N);

  VertexId prev = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    const VertexId x = path(k);
    if (!g.contains(x)) {
      throw InvalidPath("path vertex " + std::to_string(x) + " (position " +
                        std::to_string(k + 1) + ") is not in the graph");
    }
    if (k > 0 && !(g.weight(prev, x) > 0.0)) {
      throw InvalidPath("path vertices " + std::to_string(prev) + " and " + std::to_string(x) +
                        " (positions " + std::to_string(k) + ", " + std::to_string(k + 1) +
                        ") are not adjacent");
    }
    const double deg = g.degree(x);
    if (!(deg > 0.0)) {
      throw InvalidPath("path vertex " + std::to_string(x) + " is isolated");
    }
    const double m = g.measure(x);
    const double term = m * phi.phi(alpha * W(x)) / deg;
    sum += term;
    report.terms.push_back(term);
    report.partial_sums.push_back(sum);
    report.max_degree_ratio = std::max(report.max_degree_ratio, deg / m);
    prev = x;
  }
  report.sum = sum;
  report.term_lower_bound = phi.phi(alpha * W.lower_bound) / report.max_degree_ratio;

  if (N >= 4) {
    const std::size_t half = N / 2;
    const double head_min = *std::min_element(report.terms.begin(), report.terms.begin() + half);
    const double tail_min = *std::min_element(report.terms.begin() + half, report.terms.end());
    const double first = report.terms[half];
    const double last = report.terms.back();
    const double span = static_cast<double>(N - 1 - half);
    if (tail_min > 0.0 && tail_min >= 0.5 * head_min) {
      report.diagnosis = PathDiagnosis::diverges;
    } else if (first > 0.0 && span > 0.0 && std::pow(last / first, 1.0 / span) <= 0.9) {
      report.diagnosis = PathDiagnosis::summable;
    }
  }
  return report;
}

Potential large_potential(const WeightedGraph& g, const Nonlinearity& phi) {
  return Potential{
      [g, phi](VertexId x) { return phi.phi_inv(g.degree(x) / g.measure(x)) + 1.0; },
      1.0, "large:" + phi.name()};
}

LiouvilleReport verify_liouville(const WeightedGraph& g, const Potential& W,
                                 const Nonlinearity& phi, const Exhaustion& ex,
                                 const DefectSeries& series, std::span<const VertexId> probes) {
  LiouvilleReport report;
  report.alpha = series.alpha;
  report.radius = ex.radii.back();
  report.solver_converged = series.estimate.solver_converged;

  const SolveResult& last = series.estimate.last;
  std::unordered_map<VertexId, double> u;
  u.reserve(last.vertices.size());
  for (std::size_t i = 0; i < last.vertices.size(); ++i) u.emplace(last.vertices[i], last.values[i]);
  const VertexField u_field = [&u](VertexId x) {
    auto it = u.find(x);
    return it == u.end() ? 0.0 : it->second;
  };

  const double alpha = series.alpha;
  for (std::size_t i = 0; i < last.vertices.size(); ++i) {
    const double w = alpha - last.values[i];
    report.max_w = std::max(report.max_w, w);
    if (w < -kDefectSlack || w > alpha + kDefectSlack) report.bounds_ok = false;
  }

  for (VertexId x : probes) {
    LiouvilleProbe probe;
    probe.x = x;
    probe.depth = ex.depth_of(x);
    probe.w = alpha - u_field(x);
    if (probe.depth >= 0) {
      probe.interior = report.radius - probe.depth >= 2;
      // -L w = L u because L annihilates constants.
      probe.residual = laplacian_apply(g, u_field, x) - phi.phi(W(x) * probe.w);
      if (probe.interior) {
        report.max_interior_residual =
            std::max(report.max_interior_residual, std::abs(probe.residual));
      }
    }
    if (probe.w < -kDefectSlack || probe.w > alpha + kDefectSlack) report.bounds_ok = false;
    report.probes.push_back(probe);
  }
  return report;
}

LiouvilleReport verify_liouville(const WeightedGraph& g, const Potential& W,
                                 const Nonlinearity& phi, const Exhaustion& ex, double alpha,
                                 std::span<const VertexId> probes, const SolveOptions& opts) {
  const DefectSeries series = conservation_defect(g, W, phi, alpha, ex, probes, opts);
  return verify_liouville(g, W, phi, ex, series, probes);
}

}  // namespace nlresolvent
