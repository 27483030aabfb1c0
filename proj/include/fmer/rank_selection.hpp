#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "fmer/covariance.hpp"
#include "fmer/grid.hpp"

namespace fmer {

/// Stride-m subgrid of the original grid: index j is drawn from the block
/// {m(j-1)+1, ..., mj}, giving floor(L/m) nodes.
struct SubgridPlan {
  Index stride;                 // m > 1
  Index lstar;                  // floor(L/m)
  std::vector<Index> indices;   // 0-based positions into the original grid
};

SubgridPlan subsample(const Grid& grid, Index stride, std::uint64_t seed);

/// Largest rank a subgrid of size L* can certify: floor(L*/4 - 1). Scan
/// requests beyond it are clamped to keep the identifiability bound.
Index scan_rank_cap(Index lstar);

struct RankScan {
  Index rank = 0;                // selected rank, or the cap when saturated
  bool saturated = false;        // no scanned j reached the cutoff
  Index scan_limit = 0;          // min(M, scan_rank_cap)
  std::vector<double> scree;     // f(j) for scanned j = 1..scree.size()
  std::vector<bool> converged;   // optimizer flag per scanned j
};

/// Scree budget for rank scans: the objective is taken at the quasi-Newton
/// starting value, the rank-j spectral projection of the subgrid covariance.
/// The c1 = 0.01 L*^2 cutoff separates ranks at that point; fully minimized
/// objectives for under-ranked fits fall below the cutoff and defeat the
/// scree rule, so scans must not descend from the projection.
CompletionOptions scree_budget();

/// Steps 1*-3* on one subgrid draw: restrict the curves to the plan, scan the
/// masked completion objective for j = 1..min(M, cap), and pick the first
/// rank at or below the cutoff. Scanning stops at the first qualifying rank
/// unless full_scan is set. Optimizer non-convergence is recorded, not fatal.
RankScan estimate_rank_once(const CurveSet& curves, const SubgridPlan& plan,
                            double delta_star, Index max_rank, double c1,
                            const CompletionOptions& completion = scree_budget(),
                            bool full_scan = false);

struct RankVote {
  std::vector<Index> per_iteration;   // r_hat_{b,L*}
  std::map<Index, int> histogram;
  Index mode = 0;                     // ties broken toward the smaller rank
  Index iterations = 0;               // B
  int saturated_count = 0;
  std::vector<std::vector<double>> scans;          // per-iteration scree values
  std::vector<std::vector<bool>> scan_converged;   // optimizer flags per scan
};

/// Mode of a rank histogram; ties break toward the smaller rank.
Index vote_mode(const std::map<Index, int>& histogram);

/// B independent subgrid draws with per-iteration seeds seed + b; the final
/// estimate is the mode of the empirical rank distribution.
RankVote estimate_rank_mode(const CurveSet& curves, Index stride, Index b_iterations,
                            double delta_star, Index max_rank, double c1,
                            std::uint64_t seed,
                            const CompletionOptions& completion = scree_budget());

struct EssentialRankResult {
  std::vector<double> medians;            // f_tilde(j), j = 1..scan_limit
  std::vector<double> condition_numbers;  // a_tilde_j from full-grid fits
  Index rank = 0;                         // max{j : both thresholds hold}
  Index scan_limit = 0;
  std::vector<std::vector<double>> scans; // all B scree vectors
};

struct no_feasible_rank_error : std::runtime_error {
  explicit no_feasible_rank_error(std::string msg, EssentialRankResult diag)
      : std::runtime_error(std::move(msg)), diagnostics(std::move(diag)) {}
  EssentialRankResult diagnostics;
};

/// max{j : medians[j] <= c1 and condition_numbers[j] <= c2}, or 0 when the
/// qualifying set is empty.
Index essential_rank_from(const std::vector<double>& medians,
                          const std::vector<double>& condition_numbers,
                          double c1, double c2);

/// Essential-rank procedure: medians of B subgrid scree scans combined with
/// condition numbers of full-grid rank-j completion fits; returns the largest
/// rank passing both the scree cutoff c1 and the condition cap c2. The scree
/// side uses the scan budget; the condition numbers come from fully
/// minimized completions.
EssentialRankResult essential_rank(const CurveSet& curves, Index stride,
                                   Index b_iterations, double delta_star,
                                   Index max_rank, double c1, double c2,
                                   std::uint64_t seed,
                                   const CompletionOptions& completion = scree_budget());

/// Variant with caller-supplied subgrid plans (e.g. the identity plan for
/// grids too small to subsample).
EssentialRankResult essential_rank_with_plans(
    const CurveSet& curves, const std::vector<SubgridPlan>& plans,
    double delta_star, Index max_rank, double c1, double c2,
    const CompletionOptions& completion = scree_budget());

/// The whole grid as a degenerate plan (stride 1).
SubgridPlan identity_plan(const Grid& grid);

}  // namespace fmer
