#include "fmer/rank_selection.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace fmer {

namespace {

Matrix restrict_columns(const Matrix& data, const std::vector<Index>& cols) {
  Matrix out(data.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    out.col(static_cast<Index>(k)) = data.col(cols[k]);
  }
  return out;
}

// Previous factor extended by the top positive eigendirection of the masked
// residual: the best greedy rank-one addition, used to warm start rank j
// from the rank j-1 fit.
Matrix grow_from_residual(const Matrix& previous, const Matrix& khat,
                          const BandMask& mask) {
  Matrix residual = khat - previous * previous.transpose();
  mask.project(residual);
  residual = 0.5 * (residual + residual.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(residual);
  const Index last = residual.rows() - 1;
  Matrix init(previous.rows(), previous.cols() + 1);
  init.leftCols(previous.cols()) = previous;
  init.col(previous.cols()) =
      std::sqrt(std::max(eig.eigenvalues()[last], 1e-8)) *
      eig.eigenvectors().col(last);
  return init;
}

// Previous factor padded with one small deterministic column, used to warm
// start the next rank of a scan.
Matrix pad_factor(const Matrix& theta, std::uint64_t seed) {
  Matrix out(theta.rows(), theta.cols() + 1);
  out.leftCols(theta.cols()) = theta;
  std::mt19937_64 rng(seed);
  const double scale = 1e-2 * (theta.norm() + 1.0) /
                       std::sqrt(static_cast<double>(theta.rows()));
  std::normal_distribution<double> gauss(0.0, scale);
  for (Index i = 0; i < out.rows(); ++i) out(i, theta.cols()) = gauss(rng);
  return out;
}

double median(std::vector<double> values) {
  const std::size_t n = values.size();
  std::nth_element(values.begin(), values.begin() + n / 2, values.end());
  const double upper = values[n / 2];
  if (n % 2 == 1) return upper;
  std::nth_element(values.begin(), values.begin() + n / 2 - 1, values.end());
  return 0.5 * (values[n / 2 - 1] + upper);
}

}  // namespace

Index scan_rank_cap(Index lstar) { return (lstar - 4) / 4; }

CompletionOptions scree_budget() {
  CompletionOptions opts;
  opts.max_iterations = 0;
  opts.restarts = 1;
  return opts;
}

Index essential_rank_from(const std::vector<double>& medians,
                          const std::vector<double>& condition_numbers,
                          double c1, double c2) {
  if (medians.size() != condition_numbers.size()) {
    throw std::invalid_argument("essential_rank_from: size mismatch");
  }
  Index chosen = 0;
  for (std::size_t j = 0; j < medians.size(); ++j) {
    if (medians[j] <= c1 && condition_numbers[j] <= c2) {
      chosen = static_cast<Index>(j + 1);
    }
  }
  return chosen;
}

SubgridPlan subsample(const Grid& grid, Index stride, std::uint64_t seed) {
  if (stride < 2) {
    throw std::invalid_argument("subsample: stride m must exceed 1");
  }
  const Index lstar = grid.size() / stride;
  if (lstar < 8) {
    throw std::invalid_argument(
        "subsample: floor(L/m) = " + std::to_string(lstar) +
        " is below the critical value 4(r + 1) even for rank r = 1");
  }
  std::mt19937_64 rng(seed);
  SubgridPlan plan{stride, lstar, {}};
  plan.indices.reserve(static_cast<std::size_t>(lstar));
  for (Index j = 0; j < lstar; ++j) {
    std::uniform_int_distribution<Index> block(j * stride, (j + 1) * stride - 1);
    plan.indices.push_back(block(rng));
  }
  return plan;
}

RankScan estimate_rank_once(const CurveSet& curves, const SubgridPlan& plan,
                            double delta_star, Index max_rank, double c1,
                            const CompletionOptions& completion,
                            bool full_scan) {
  if (max_rank < 1) {
    throw std::invalid_argument("estimate_rank_once: M must be positive");
  }
  const Matrix sub = restrict_columns(curves.data, plan.indices);
  const Matrix khat = empirical_covariance(sub);
  const BandMask mask = band_mask(plan.lstar, delta_star);

  RankScan scan;
  scan.scan_limit = std::min(max_rank, scan_rank_cap(plan.lstar));

  CompletionOptions opts = completion;
  Matrix previous;
  for (Index j = 1; j <= scan.scan_limit; ++j) {
    opts.extra_inits = completion.extra_inits;
    if (previous.size() > 0 && completion.max_iterations > 0) {
      opts.extra_inits.push_back(
          pad_factor(previous, 0x9e3779b9u + static_cast<std::uint64_t>(j)));
    }
    CompletionFit fit = minimize_rank_j(khat, mask, j, opts);
    scan.scree.push_back(fit.objective);
    scan.converged.push_back(fit.converged);
    previous = std::move(fit.theta);
    if (!full_scan && fit.objective <= c1) break;
  }
  if (const auto chosen = scree_select(scan.scree, c1)) {
    scan.rank = *chosen;
  } else {
    scan.rank = scan.scan_limit;
    scan.saturated = true;
  }
  return scan;
}

Index vote_mode(const std::map<Index, int>& histogram) {
  if (histogram.empty()) {
    throw std::invalid_argument("vote_mode: empty histogram");
  }
  Index mode = 0;
  int best_count = 0;
  for (const auto& [rank, count] : histogram) {
    if (count > best_count) {  // map iterates ascending: ties keep the smaller
      best_count = count;
      mode = rank;
    }
  }
  return mode;
}

RankVote estimate_rank_mode(const CurveSet& curves, Index stride,
                            Index b_iterations, double delta_star,
                            Index max_rank, double c1, std::uint64_t seed,
                            const CompletionOptions& completion) {
  if (b_iterations < 1) {
    throw std::invalid_argument("estimate_rank_mode: B must be positive");
  }
  RankVote vote;
  vote.iterations = b_iterations;
  vote.per_iteration.reserve(static_cast<std::size_t>(b_iterations));
  for (Index b = 1; b <= b_iterations; ++b) {
    const SubgridPlan plan =
        subsample(curves.grid, stride, seed + static_cast<std::uint64_t>(b));
    const RankScan scan =
        estimate_rank_once(curves, plan, delta_star, max_rank, c1, completion);
    vote.per_iteration.push_back(scan.rank);
    vote.histogram[scan.rank] += 1;
    if (scan.saturated) ++vote.saturated_count;
    vote.scans.push_back(scan.scree);
    vote.scan_converged.push_back(scan.converged);
  }
  vote.mode = vote_mode(vote.histogram);
  return vote;
}

SubgridPlan identity_plan(const Grid& grid) {
  SubgridPlan plan{1, grid.size(), {}};
  plan.indices.resize(static_cast<std::size_t>(grid.size()));
  std::iota(plan.indices.begin(), plan.indices.end(), Index{0});
  return plan;
}

EssentialRankResult essential_rank(const CurveSet& curves, Index stride,
                                   Index b_iterations, double delta_star,
                                   Index max_rank, double c1, double c2,
                                   std::uint64_t seed,
                                   const CompletionOptions& completion) {
  if (b_iterations < 1) {
    throw std::invalid_argument("essential_rank: B must be positive");
  }
  std::vector<SubgridPlan> plans;
  plans.reserve(static_cast<std::size_t>(b_iterations));
  for (Index b = 1; b <= b_iterations; ++b) {
    plans.push_back(
        subsample(curves.grid, stride, seed + static_cast<std::uint64_t>(b)));
  }
  return essential_rank_with_plans(curves, plans, delta_star, max_rank, c1, c2,
                                   completion);
}

EssentialRankResult essential_rank_with_plans(
    const CurveSet& curves, const std::vector<SubgridPlan>& plans,
    double delta_star, Index max_rank, double c1, double c2,
    const CompletionOptions& completion) {
  if (!(c2 > 1.0)) {
    throw std::invalid_argument("essential_rank: c2 must exceed 1");
  }
  if (plans.empty()) {
    throw std::invalid_argument("essential_rank: need at least one plan");
  }

  EssentialRankResult result;
  bool first = true;
  for (const SubgridPlan& plan : plans) {
    const RankScan scan = estimate_rank_once(curves, plan, delta_star,
                                             max_rank, c1, completion,
                                             /*full_scan=*/true);
    if (first) {
      result.scan_limit = scan.scan_limit;
      first = false;
    } else if (scan.scan_limit != result.scan_limit) {
      result.scan_limit = std::min(result.scan_limit, scan.scan_limit);
    }
    result.scans.push_back(scan.scree);
  }

  result.medians.resize(static_cast<std::size_t>(result.scan_limit));
  for (Index j = 0; j < result.scan_limit; ++j) {
    std::vector<double> column;
    column.reserve(result.scans.size());
    for (const auto& scree : result.scans) {
      column.push_back(scree[static_cast<std::size_t>(j)]);
    }
    result.medians[static_cast<std::size_t>(j)] = median(std::move(column));
  }

  // Condition numbers from full-grid rank-j completion fits under the same
  // bounded budget as the pipeline's covariance estimator; the scree budget
  // applies only to the subgrid scans above.
  const Matrix khat = empirical_covariance(curves);
  const BandMask mask = band_mask(curves.length(), delta_star);
  CompletionOptions opts = completion_budget();
  Matrix previous;
  result.condition_numbers.resize(static_cast<std::size_t>(result.scan_limit));
  for (Index j = 1; j <= result.scan_limit; ++j) {
    opts.extra_inits.clear();
    if (previous.size() > 0) {
      opts.extra_inits.push_back(grow_from_residual(previous, khat, mask));
    }
    CompletionFit fit = minimize_rank_j(khat, mask, j, opts);
    Eigen::JacobiSVD<Matrix> svd(fit.theta);
    const double top = svd.singularValues()[0];
    const double bottom = svd.singularValues()[j - 1];
    result.condition_numbers[static_cast<std::size_t>(j - 1)] =
        (bottom > 0.0) ? (top * top) / (bottom * bottom)
                       : std::numeric_limits<double>::infinity();
    previous = std::move(fit.theta);
  }

  const Index chosen =
      essential_rank_from(result.medians, result.condition_numbers, c1, c2);
  if (chosen == 0) {
    throw no_feasible_rank_error(
        "essential_rank: no rank passes both the scree cutoff and the "
        "condition-number cap",
        std::move(result));
  }
  result.rank = chosen;
  return result;
}

}  // namespace fmer
