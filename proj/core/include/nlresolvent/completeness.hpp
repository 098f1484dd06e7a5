#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nlresolvent/dirichlet.hpp"
#include "nlresolvent/graph.hpp"
#include "nlresolvent/nonlinearity.hpp"
#include "nlresolvent/resolvent.hpp"

namespace nlresolvent {

/// Defect d_n(alpha) = alpha - R_{K_n}(alpha W 1_{K_n}) at each probe.
struct DefectSeries {
  double alpha = 0.0;
  ResolventEstimate estimate;
  /// defects[p][n] for probe p at step n.
  std::vector<std::vector<double>> defects;
  /// Invariant breaches: defect outside [-slack, alpha + slack] or growing in n.
  std::vector<std::string> violations;
};

/// Slack used for the defect bounds and monotonicity checks.
inline constexpr double kDefectSlack = 1e-9;

DefectSeries conservation_defect(const WeightedGraph& g, const Potential& W,
                                 const Nonlinearity& phi, double alpha,
                                 const Exhaustion& ex, std::span<const VertexId> probes,
                                 const SolveOptions& opts = {});

enum class Verdict { complete_at_infinity, incomplete_at_infinity, inconclusive };

std::string to_string(Verdict v);

struct Thresholds {
  double complete_tol = 1e-4;
  double stabilization_tol = 1e-6;
  double incomplete_floor = 1e-2;

  void check() const;
};

struct AlphaSummary {
  double alpha = 0.0;
  /// Largest final defect over the probes.
  double defect = 0.0;
  /// Largest |d_N - d_{N-1}| over the probes (the final defect itself when
  /// the schedule has a single step).
  double stabilization = 0.0;
  /// Probe attaining `defect`.
  VertexId probe = 0;
  Verdict verdict = Verdict::inconclusive;
};

/// Log-spaced proxy for "every alpha > 0".
inline const std::vector<double> kDefaultAlphaGrid{0.25, 0.5, 1.0, 2.0, 4.0};

/// The note attached to every report: truncation under-estimates R, so
/// defects are over-estimated.
extern const char* const kTruncationNote;

struct ClassificationReport {
  std::vector<double> alpha_grid;
  std::vector<VertexId> probes;
  std::vector<DefectSeries> series;
  std::vector<AlphaSummary> summaries;
  Verdict verdict = Verdict::inconclusive;
  Thresholds thresholds;
  bool solver_converged = true;
  std::vector<std::string> violations;
  std::string note = kTruncationNote;
};

/// Complete when every alpha has a final defect <= complete_tol that moved by
/// at most stabilization_tol over the last step; incomplete when some alpha
/// has a stabilized defect >= incomplete_floor; inconclusive otherwise. The
/// verdict is relative to the finite alpha grid. Per-alpha work runs
/// concurrently when `parallel` is set; results are assembled in grid order.
ClassificationReport classify(const WeightedGraph& g, const Potential& W,
                              const Nonlinearity& phi, std::span<const double> alpha_grid,
                              const Exhaustion& ex, std::span<const VertexId> probes,
                              const Thresholds& thresholds = {},
                              const SolveOptions& opts = {}, bool parallel = true);

/// Rows `alpha,n,radius,size,probe_id,value,increment,sweeps,residual,defect,stabilization`.
void write_classification_csv(std::ostream& out, const ClassificationReport& report);
/// Verdict document with alpha/defect/stabilization arrays and thresholds.
void write_classification_json(std::ostream& out, const ClassificationReport& report);

/// Infinite path x_1, x_2, ... given by index.
using PathGenerator = std::function<VertexId(std::size_t)>;

enum class PathDiagnosis {
  /// Terms stay bounded below along the tail; partial sums grow linearly.
  diverges,
  /// Terms decay at least geometrically along the tail.
  summable,
  undetermined,
};

std::string to_string(PathDiagnosis d);

struct PathCriterionReport {
  double alpha = 0.0;
  std::size_t length = 0;
  std::vector<double> terms;
  std::vector<double> partial_sums;
  double sum = 0.0;
  /// max deg/m along the path, and the per-term lower bound phi(alpha W0)/C
  /// that holds whenever deg/m <= C everywhere.
  double max_degree_ratio = 0.0;
  double term_lower_bound = 0.0;
  PathDiagnosis diagnosis = PathDiagnosis::undetermined;
};

/// Partial sums S_N of m(x_k) phi(alpha W(x_k)) / deg(x_k), k = 1..N.
/// Throws InvalidPath when consecutive vertices are not adjacent and
/// InvalidParameter unless 0 < alpha <= 1.
PathCriterionReport path_criterion(const WeightedGraph& g, const Potential& W,
                                   const Nonlinearity& phi, const PathGenerator& path,
                                   double alpha, std::size_t N);

/// W = phi^{-1}(deg/m) + 1 (lower bound 1). Evaluation throws RangeError when
/// deg/m leaves ran phi, which can only happen for phi bounded above.
Potential large_potential(const WeightedGraph& g, const Nonlinearity& phi);

struct LiouvilleProbe {
  VertexId x = 0;
  int depth = 0;
  bool interior = false;
  double w = 0.0;
  /// -L w(x) - phi(W(x) w(x)).
  double residual = 0.0;
};

struct LiouvilleReport {
  double alpha = 0.0;
  int radius = 0;
  std::vector<LiouvilleProbe> probes;
  double max_interior_residual = 0.0;
  double max_w = 0.0;
  bool bounds_ok = true;
  bool solver_converged = true;
};

/// Evaluates w = alpha - R_{K_N}(alpha W) on the last exhaustion step and the
/// residual of -L w = phi(W w) at the probes. Probes at least two steps inside
/// the boundary of K_N count as interior.
LiouvilleReport verify_liouville(const WeightedGraph& g, const Potential& W,
                                 const Nonlinearity& phi, const Exhaustion& ex,
                                 double alpha, std::span<const VertexId> probes,
                                 const SolveOptions& opts = {});

/// Same, reusing an already computed defect series.
LiouvilleReport verify_liouville(const WeightedGraph& g, const Potential& W,
                                 const Nonlinearity& phi, const Exhaustion& ex,
                                 const DefectSeries& series,
                                 std::span<const VertexId> probes);

}  // namespace nlresolvent
