// Command-line front end: simulate the study models, estimate ranks, fit the
// regression-calibration and spectral-truncation estimators, run replicated
// comparisons, and analyze user-supplied curve data.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fmer/covariance.hpp"
#include "fmer/io.hpp"
#include "fmer/operator.hpp"
#include "fmer/parallel.hpp"
#include "fmer/rank_selection.hpp"
#include "fmer/regression.hpp"
#include "fmer/simulation.hpp"

using json = nlohmann::ordered_json;
using namespace fmer;

namespace {

namespace fs = std::filesystem;

json to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const std::vector<double>& v) { return json(v); }

void write_json(const fs::path& path, const json& value) {
  io::atomic_write(path, value.dump(2) + "\n");
}

// Shared rank-selection knobs; c1 follows the L* in use via the multiplier.
struct RankConfig {
  Index stride = 4;
  Index iterations = 100;  // B
  Index max_rank = 10;     // M
  double delta_star = 0.15;
  double c1_multiplier = 0.01;
  double c1_absolute = -1.0;  // overrides the multiplier when >= 0
  double c2 = 50.0;
  std::uint64_t seed = 1;

  double c1_for(Index lstar) const {
    if (c1_absolute >= 0.0) return c1_absolute;
    return c1_multiplier * static_cast<double>(lstar) *
           static_cast<double>(lstar);
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("--m", stride, "Subgrid stride m (L* = floor(L/m))")
        ->check(CLI::Range(Index{1}, Index{1000}));
    cmd->add_option("--B", iterations, "Subgrid draws");
    cmd->add_option("--M", max_rank, "Largest rank scanned");
    cmd->add_option("--delta-star", delta_star,
                    "Band fraction for the mask, in [0, 1/4]");
    cmd->add_option("--c1-mult", c1_multiplier,
                    "Scree cutoff rule: c1 = mult * L*^2");
    cmd->add_option("--c1", c1_absolute, "Absolute scree cutoff (overrides rule)");
    cmd->add_option("--c2", c2, "Condition-number cap for essential rank");
    cmd->add_option("--seed", seed, "Random seed");
  }
};

json rank_thresholds(const RankConfig& cfg, Index lstar, Index scan_limit) {
  return json{{"m", cfg.stride},
              {"B", cfg.iterations},
              {"M", cfg.max_rank},
              {"delta_star", cfg.delta_star},
              {"c1", cfg.c1_for(lstar)},
              {"c2", cfg.c2},
              {"L_star", lstar},
              {"scan_limit", scan_limit},
              {"seed", cfg.seed}};
}

json vote_report(const RankVote& vote, const RankConfig& cfg, Index lstar) {
  json histogram = json::object();
  for (const auto& [rank, count] : vote.histogram) {
    histogram[std::to_string(rank)] = count;
  }
  json scans = json::array();
  for (const auto& scree : vote.scans) scans.push_back(to_json(scree));
  json converged = json::array();
  for (const auto& flags : vote.scan_converged) {
    json row = json::array();
    for (bool flag : flags) row.push_back(flag);
    converged.push_back(std::move(row));
  }
  json votes = json::array();
  for (Index rank : vote.per_iteration) votes.push_back(rank);
  return json{{"mode", vote.mode},
              {"votes", std::move(votes)},
              {"histogram", std::move(histogram)},
              {"saturated_count", vote.saturated_count},
              {"scans", std::move(scans)},
              {"scans_converged", std::move(converged)},
              {"thresholds", rank_thresholds(cfg, lstar, scan_rank_cap(lstar))}};
}

json essential_report(const EssentialRankResult& res, const RankConfig& cfg,
                      Index lstar) {
  json scans = json::array();
  for (const auto& scree : res.scans) scans.push_back(to_json(scree));
  return json{{"essential_rank", res.rank},
              {"medians", to_json(res.medians)},
              {"condition_numbers", to_json(res.condition_numbers)},
              {"scans", std::move(scans)},
              {"thresholds", rank_thresholds(cfg, lstar, res.scan_limit)}};
}

ErrorSpec make_error(const std::string& kind, double delta, double sigma2) {
  if (kind == "banded") return banded_error(delta);
  if (kind == "iid") return iid_error(sigma2);
  if (kind == "none") return no_error();
  throw CLI::ValidationError("--error", "must be banded, iid, or none");
}

// Estimated covariance of X: mode-rank selection (unless fixed) followed by
// the full-grid masked completion at that rank.
struct PipelineFit {
  Index rank;
  RankVote vote;  // empty when the rank was fixed
  EigenSystem system;
};

PipelineFit fit_covariance(const CurveSet& w, const RankConfig& cfg,
                           Index fixed_rank) {
  PipelineFit out{fixed_rank, {}, EigenSystem{Vector(), Matrix(), w.grid}};
  if (fixed_rank < 1) {
    const Index lstar = w.length() / cfg.stride;
    out.vote = estimate_rank_mode(w, cfg.stride, cfg.iterations, cfg.delta_star,
                                  cfg.max_rank, cfg.c1_for(lstar), cfg.seed);
    out.rank = out.vote.mode;
  }
  const Matrix khat = empirical_covariance(w);
  const CompletionFit completion =
      minimize_rank_j(khat, band_mask(w.length(), cfg.delta_star), out.rank,
                      completion_budget());
  out.system = kernel_eigen(completion.completed(), w.grid, out.rank);
  return out;
}

json eigensystem_json(const EigenSystem& es) {
  return json{{"rank", es.rank()},
              {"eigenvalues", to_json(es.eigenvalues)},
              {"eigenfunctions", to_json(es.eigenfunctions)},
              {"grid_nodes", to_json(es.grid.nodes())}};
}

std::optional<Vector> truth_slope(const std::string& truth_path,
                                  const Grid& grid) {
  if (truth_path.empty()) return std::nullopt;
  std::ifstream in(truth_path);
  if (!in) throw std::runtime_error("cannot open " + truth_path);
  json truth = json::parse(in);
  if (!truth.contains("slope_values")) return std::nullopt;
  const auto& values = truth["slope_values"];
  if (static_cast<Index>(values.size()) != grid.size()) {
    throw std::runtime_error("truth slope length does not match the grid");
  }
  Vector slope(grid.size());
  for (Index i = 0; i < grid.size(); ++i) slope[i] = values[i].get<double>();
  return slope;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const std::string& model_name, const std::string& error_kind,
                 double delta, double sigma2, double noise, Index n, Index length,
                 std::uint64_t seed, std::uint64_t grid_seed,
                 const std::string& out_dir, bool write_latent) {
  ModelSpec model = model_by_name(model_name);
  model.response_noise = noise;
  const ErrorSpec err = make_error(error_kind, delta, sigma2);
  const Grid grid = sample_adequate_grid(length, grid_seed);
  const SimulatedData data = simulate(model, err, n, grid, seed);

  const fs::path dir(out_dir);
  io::write_curve_set(dir / "W.csv", data.w);
  io::write_vector(dir / "y.csv", data.y);
  if (write_latent) {
    io::write_curve_set(dir / "X.csv", data.x);
    io::write_curve_set(dir / "U.csv", data.u);
  }

  json truth{{"model", model.name},
             {"rank", model.rank},
             {"eigenvalues", to_json(model.eigenvalues)},
             {"slope_coefficients", to_json(model.slope_coefficients)},
             {"response_noise", model.response_noise},
             {"intercept", data.intercept},
             {"n", n},
             {"L", length},
             {"seed", seed},
             {"grid_seed", grid_seed},
             {"grid_nodes", to_json(grid.nodes())},
             {"slope_values", to_json(data.slope)}};
  json error_json{{"kind", error_kind}};
  if (err.kind == ErrorKind::banded) {
    error_json["delta"] = err.delta;
    error_json["gammas"] = to_json(err.gammas);
  } else if (err.kind == ErrorKind::iid) {
    error_json["variance"] = err.variance;
  }
  truth["error"] = std::move(error_json);
  write_json(dir / "truth.json", truth);

  std::cout << "wrote " << (dir / "W.csv").string() << " (" << n << " curves, L="
            << length << ")\n";
  return 0;
}

// -------------------------------------------------------------------- rank

int cmd_rank(const std::string& input, const RankConfig& cfg, bool essential,
             const std::string& out_path) {
  const CurveSet w = io::read_curve_set(input);
  const Index lstar =
      cfg.stride > 1 ? w.length() / cfg.stride : w.length();
  json report;
  if (essential) {
    EssentialRankResult res;
    if (cfg.stride > 1) {
      res = essential_rank(w, cfg.stride, cfg.iterations, cfg.delta_star,
                           cfg.max_rank, cfg.c1_for(lstar), cfg.c2, cfg.seed);
    } else {
      // Without subsampling every draw is identical; one scan suffices.
      const std::vector<SubgridPlan> plans{identity_plan(w.grid)};
      res = essential_rank_with_plans(w, plans, cfg.delta_star, cfg.max_rank,
                                      cfg.c1_for(lstar), cfg.c2);
    }
    report = essential_report(res, cfg, lstar);
  } else {
    const RankVote vote =
        estimate_rank_mode(w, cfg.stride, cfg.iterations, cfg.delta_star,
                           cfg.max_rank, cfg.c1_for(lstar), cfg.seed);
    report = vote_report(vote, cfg, lstar);
  }
  if (out_path.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    write_json(out_path, report);
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

// --------------------------------------------------------------------- fit

int cmd_fit(const std::string& input, const std::string& response_path,
            bool functional, const std::string& method, Index fixed_rank,
            Index fixed_k, bool paper_coefficients, Index k_max, Index cv_reps,
            const RankConfig& cfg, const std::string& truth_path,
            const std::string& out_dir) {
  const CurveSet w = io::read_curve_set(input);
  const fs::path dir(out_dir);
  json fit_json;
  const std::optional<Vector> truth = truth_slope(truth_path, w.grid);

  if (functional) {
    const CurveSet y = io::read_curve_set(response_path);
    if (y.n() != w.n()) throw std::runtime_error("fit: sample sizes differ");
    SlopeOperator fit{Matrix(), Vector(), y.grid, w.grid};
    if (method == "rc") {
      const PipelineFit pipe = fit_covariance(w, cfg, fixed_rank);
      fit = rc_functional(pipe.system, y, w);
      fit_json["type"] = "rc-functional";
      fit_json["rank"] = pipe.rank;
      fit_json["eigensystem"] = eigensystem_json(pipe.system);
    } else if (method == "st") {
      const Index k = fixed_k >= 1
                          ? fixed_k
                          : cv_select_components(w, y, k_max, cv_reps, cfg.seed);
      const EigenSystem es = kernel_eigen(empirical_covariance(w), w.grid, k);
      fit = rc_functional(es, y, w);
      fit_json["type"] = "st-functional";
      fit_json["rank"] = k;
      fit_json["eigensystem"] = eigensystem_json(es);
    } else {
      throw CLI::ValidationError("--method",
                                 "functional response supports rc or st");
    }
    fit_json["intercept_curve"] = to_json(fit.intercept);
    fit_json["grid_nodes"] = to_json(w.grid.nodes());
    io::write_matrix(dir / "kernel.csv", fit.kernel);
    const Matrix pred = predict(fit, w);
    io::write_curve_set(dir / "predictions.csv", CurveSet(pred, y.grid));
    const double r2 = r_squared(y, pred);
    fit_json["r2_in_sample"] = r2;
    write_json(dir / "fit.json", fit_json);
    std::cout << "in-sample R^2 = " << r2 << "\n";
    return 0;
  }

  const Vector y = io::read_vector(response_path);
  if (y.size() != w.n()) throw std::runtime_error("fit: sample sizes differ");

  SlopeFunction slope{Vector(), 0.0, w.grid};
  QuadraticFit quad{SlopeFunction{Vector(), 0.0, w.grid}, Matrix()};
  bool quadratic = false;

  if (method == "rc") {
    const PipelineFit pipe = fit_covariance(w, cfg, fixed_rank);
    slope = rc_scalar(pipe.system, cross_cov_scalar(y, w), y.mean(),
                      w.data.colwise().mean());
    fit_json["type"] = "rc-scalar";
    fit_json["rank"] = pipe.rank;
    fit_json["eigensystem"] = eigensystem_json(pipe.system);
  } else if (method == "st") {
    const Index k = fixed_k >= 1
                        ? fixed_k
                        : cv_select_components(w, y, k_max, cv_reps, cfg.seed);
    slope = spectral_truncation(w, y, k);
    fit_json["type"] = "st-scalar";
    fit_json["rank"] = k;
  } else if (method == "rc-quadratic") {
    quadratic = true;
    const PipelineFit pipe = fit_covariance(w, cfg, fixed_rank);
    const Vector w_bar = w.data.colwise().mean();
    const Matrix ww_bar = w.data.transpose() * w.data / static_cast<double>(w.n());
    quad = rc_quadratic(pipe.system, cross_cov_scalar(y, w),
                        cross_cov_quadratic(y, w), paper_coefficients, y.mean(),
                        w_bar, ww_bar);
    slope = quad.linear;
    fit_json["type"] = "rc-quadratic";
    fit_json["rank"] = pipe.rank;
    fit_json["paper_coefficients"] = paper_coefficients;
    fit_json["eigensystem"] = eigensystem_json(pipe.system);
  } else {
    throw CLI::ValidationError("--method", "must be rc, st, or rc-quadratic");
  }

  fit_json["intercept"] = slope.intercept;
  fit_json["beta"] = to_json(slope.beta);
  fit_json["grid_nodes"] = to_json(w.grid.nodes());
  io::write_vector(dir / "beta.csv", slope.beta);
  if (quadratic) io::write_matrix(dir / "kernel.csv", quad.quadratic);

  const Vector pred = quadratic ? predict(quad, w) : predict(slope, w);
  io::write_vector(dir / "predictions.csv", pred);
  const double r2 = r_squared(y, pred);
  fit_json["r2_in_sample"] = r2;
  std::cout << "in-sample R^2 = " << r2 << "\n";
  if (truth) {
    const double l2 = grid_norm((slope.beta - *truth).eval(), w.grid);
    fit_json["l2_error_vs_truth"] = l2;
    std::cout << "L2 error vs truth = " << l2 << "\n";
  }
  write_json(dir / "fit.json", fit_json);
  return 0;
}

// ----------------------------------------------------------------- compare

struct CompareRow {
  std::string model;
  std::string error;
  double delta;
  Index n;
  std::string method;
  std::uint64_t seed;
  Index rank;
  double l2_error;
  double runtime_s;
};

int cmd_compare(const std::vector<std::string>& models,
                const std::vector<double>& deltas, const std::string& error_kind,
                double sigma2, const std::vector<std::string>& methods,
                const std::vector<Index>& n_list, Index replicates,
                Index known_rank, Index k_max, Index cv_reps, Index length,
                std::uint64_t grid_seed, const RankConfig& cfg,
                const std::string& out_dir) {
  const Grid grid = sample_adequate_grid(length, grid_seed);
  struct Task {
    std::string model;
    double delta;
    Index n;
    std::string method;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto& model : models) {
    for (double delta : deltas) {
      for (Index n : n_list) {
        for (const auto& method : methods) {
          for (Index rep = 0; rep < replicates; ++rep) {
            tasks.push_back(Task{model, delta, n, method,
                                 cfg.seed + static_cast<std::uint64_t>(rep)});
          }
        }
      }
    }
  }

  std::vector<CompareRow> rows(tasks.size());
  parallel_for(static_cast<Index>(tasks.size()), [&](Index t) {
    const Task& task = tasks[static_cast<std::size_t>(t)];
    const auto start = std::chrono::steady_clock::now();
    const ModelSpec model = model_by_name(task.model);
    const ErrorSpec err = make_error(error_kind, task.delta, sigma2);
    const SimulatedData data = simulate(model, err, task.n, grid, task.seed);

    CompareRow row{task.model, error_kind, task.delta, task.n,
                   task.method, task.seed, 0, 0.0, 0.0};
    if (task.method == "rc") {
      RankConfig local = cfg;
      local.seed = task.seed * 31 + 7;
      const PipelineFit pipe = fit_covariance(data.w, local, known_rank);
      const SlopeFunction fit =
          rc_scalar(pipe.system, cross_cov_scalar(data.y, data.w), data.y.mean(),
                    data.w.data.colwise().mean());
      row.rank = pipe.rank;
      row.l2_error = grid_norm((fit.beta - data.slope).eval(), grid);
    } else if (task.method == "st") {
      const Index k =
          cv_select_components(data.w, data.y, k_max, cv_reps, task.seed * 13 + 3);
      const SlopeFunction fit = spectral_truncation(data.w, data.y, k);
      row.rank = k;
      row.l2_error = grid_norm((fit.beta - data.slope).eval(), grid);
    } else {
      throw std::runtime_error("compare: method must be rc or st");
    }
    row.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    rows[static_cast<std::size_t>(t)] = std::move(row);
  });

  const fs::path dir(out_dir);
  std::string csv = "model,error,delta,n,method,seed,rank,l2_error,runtime_s\n";
  for (const auto& row : rows) {
    csv += row.model + "," + row.error + "," + io::format_number(row.delta) +
           "," + std::to_string(row.n) + "," + row.method + "," +
           std::to_string(row.seed) + "," + std::to_string(row.rank) + "," +
           io::format_number(row.l2_error) + "," +
           io::format_number(row.runtime_s) + "\n";
  }
  io::atomic_write(dir / "results.csv", csv);

  // Medians per cell, plus the error-vs-n slope when several n are present.
  json summary = json::array();
  for (const auto& model : models) {
    for (double delta : deltas) {
      for (const auto& method : methods) {
        std::vector<double> log_n, log_med;
        for (Index n : n_list) {
          std::vector<double> errs;
          Index correct = 0, total = 0;
          for (const auto& row : rows) {
            if (row.model == model && row.delta == delta &&
                row.method == method && row.n == n) {
              errs.push_back(row.l2_error);
              total += 1;
              if (known_rank >= 1 || row.method != "rc") {
                // rank column is fixed or a CV cutoff; skip recovery stats
              } else if (row.rank == model_by_name(model).rank) {
                correct += 1;
              }
            }
          }
          std::sort(errs.begin(), errs.end());
          const double median = errs.empty()
                                    ? 0.0
                                    : (errs.size() % 2 == 1
                                           ? errs[errs.size() / 2]
                                           : 0.5 * (errs[errs.size() / 2 - 1] +
                                                    errs[errs.size() / 2]));
          summary.push_back(json{{"model", model},
                                 {"delta", delta},
                                 {"method", method},
                                 {"n", n},
                                 {"median_l2_error", median},
                                 {"rank_correct", correct},
                                 {"replicates", total}});
          log_n.push_back(std::log(static_cast<double>(n)));
          log_med.push_back(std::log(median));
        }
        if (n_list.size() >= 2) {
          const double n_mean =
              std::accumulate(log_n.begin(), log_n.end(), 0.0) / log_n.size();
          const double m_mean =
              std::accumulate(log_med.begin(), log_med.end(), 0.0) /
              log_med.size();
          double num = 0.0, den = 0.0;
          for (std::size_t i = 0; i < log_n.size(); ++i) {
            num += (log_n[i] - n_mean) * (log_med[i] - m_mean);
            den += (log_n[i] - n_mean) * (log_n[i] - n_mean);
          }
          summary.push_back(json{{"model", model},
                                 {"delta", delta},
                                 {"method", method},
                                 {"loglog_slope", num / den}});
        }
      }
    }
  }
  write_json(dir / "summary.json", summary);
  std::cout << "wrote " << (dir / "results.csv").string() << " and summary.json\n";
  return 0;
}

// ----------------------------------------------------------------- analyze

int cmd_analyze(const std::string& covariate_path,
                const std::string& response_path, Index k_max, Index cv_reps,
                const RankConfig& cfg, const std::string& out_dir) {
  const CurveSet w = io::read_curve_set(covariate_path);
  const CurveSet y = io::read_curve_set(response_path);
  if (w.n() != y.n()) {
    throw std::runtime_error("analyze: covariate and response sample sizes differ");
  }
  const fs::path dir(out_dir);

  const Index lstar = cfg.stride > 1 ? w.length() / cfg.stride : w.length();
  EssentialRankResult ess;
  if (cfg.stride > 1) {
    ess = essential_rank(w, cfg.stride, cfg.iterations, cfg.delta_star,
                         cfg.max_rank, cfg.c1_for(lstar), cfg.c2, cfg.seed);
  } else {
    const std::vector<SubgridPlan> plans{identity_plan(w.grid)};
    ess = essential_rank_with_plans(w, plans, cfg.delta_star, cfg.max_rank,
                                    cfg.c1_for(lstar), cfg.c2);
  }

  const Matrix khat_w = empirical_covariance(w);
  const CompletionFit completion = minimize_rank_j(
      khat_w, band_mask(w.length(), cfg.delta_star), ess.rank,
      completion_budget());
  const Matrix khat_x = completion.completed();
  const EigenSystem es = kernel_eigen(khat_x, w.grid, ess.rank);
  const SlopeOperator rc_fit = rc_functional(es, y, w);

  const Index st_cutoff = cv_select_components(w, y, k_max, cv_reps, cfg.seed);
  const EigenSystem es_st = kernel_eigen(khat_w, w.grid, st_cutoff);
  const SlopeOperator st_fit = rc_functional(es_st, y, w);

  // Decontaminated covariates: projection of each W_i onto the fitted span.
  const double weight = w.grid.weight();
  const Matrix coeffs = w.data * es.eigenfunctions * weight;
  const CurveSet xhat(coeffs * es.eigenfunctions.transpose(), w.grid);

  const double r2_rc = r_squared(y, predict(rc_fit, xhat));
  const double r2_st = r_squared(y, predict(st_fit, w));

  Vector error_variance = (khat_w - khat_x).diagonal().cwiseMax(0.0);

  io::write_curve_set(dir / "xhat.csv", xhat);
  io::write_vector(dir / "error_variance.csv", error_variance);
  io::write_matrix(dir / "rc_kernel.csv", rc_fit.kernel);
  io::write_matrix(dir / "st_kernel.csv", st_fit.kernel);

  json report{{"essential_rank", ess.rank},
              {"st_cutoff", st_cutoff},
              {"r2_rc", r2_rc},
              {"r2_st", r2_st},
              {"medians", to_json(ess.medians)},
              {"condition_numbers", to_json(ess.condition_numbers)},
              {"thresholds", rank_thresholds(cfg, lstar, ess.scan_limit)},
              {"rc_intercept_curve", to_json(rc_fit.intercept)},
              {"st_intercept_curve", to_json(st_fit.intercept)},
              {"eigensystem", eigensystem_json(es)}};
  write_json(dir / "analysis.json", report);

  std::cout << "essential rank = " << ess.rank << " (delta_star = "
            << cfg.delta_star << ")\n"
            << "spectral cutoff = " << st_cutoff << "\n"
            << "R^2 (regression calibration, decontaminated covariates) = "
            << r2_rc << "\n"
            << "R^2 (spectral truncation, observed covariates) = " << r2_st
            << "\n";
  return 0;
}

// JSON config files: a flat object of long option names to values,
// e.g. {"m": 3, "delta-star": 0.1}. Command-line flags win.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool,
                        std::string) const override {
    return "{}\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    const json parsed = json::parse(input);
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : parsed.items()) {
      CLI::ConfigItem item;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) {
          item.inputs.push_back(v.is_string() ? v.get<std::string>()
                                              : v.dump());
        }
      } else {
        item.inputs.push_back(value.is_string() ? value.get<std::string>()
                                                : value.dump());
      }
      items.push_back(std::move(item));
    }
    return items;
  }
};

void enable_json_config(CLI::App* cmd) {
  cmd->set_config("--config", "", "JSON config file");
  cmd->config_formatter(std::make_shared<JsonConfig>());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functional errors-in-covariates regression toolkit"};
  app.require_subcommand(1);

  // ---- simulate
  auto* sim = app.add_subcommand("simulate", "Generate a study dataset");
  std::string sim_model = "m1", sim_error = "banded", sim_out = ".";
  double sim_delta = 0.05, sim_sigma2 = 0.25, sim_noise = 1.0;
  Index sim_n = 100, sim_length = 100;
  std::uint64_t sim_seed = 1, sim_grid_seed = 9;
  bool sim_latent = false;
  sim->add_option("--model", sim_model, "m1..m6");
  sim->add_option("--error", sim_error, "banded, iid, or none");
  sim->add_option("--delta", sim_delta, "Banded error bandwidth");
  sim->add_option("--sigma2", sim_sigma2, "iid error variance");
  sim->add_option("--noise", sim_noise, "Response noise sd");
  sim->add_option("--n", sim_n, "Sample size");
  sim->add_option("--L", sim_length, "Grid size");
  sim->add_option("--seed", sim_seed, "Data seed");
  sim->add_option("--grid-seed", sim_grid_seed, "Grid seed");
  sim->add_option("--out", sim_out, "Output directory");
  sim->add_flag("--write-latent", sim_latent, "Also write X.csv and U.csv");
  enable_json_config(sim);

  // ---- rank
  auto* rank = app.add_subcommand("rank", "Estimate the covariate rank");
  std::string rank_input, rank_out;
  bool rank_essential = false;
  RankConfig rank_cfg;
  rank->add_option("--input", rank_input, "Covariate CSV")->required();
  rank->add_flag("--essential", rank_essential,
                 "Essential-rank procedure with the condition cap");
  rank_cfg.attach(rank);
  rank->add_option("--out", rank_out, "Report path (stdout when omitted)");
  enable_json_config(rank);

  // ---- fit
  auto* fit = app.add_subcommand("fit", "Fit a slope estimator");
  std::string fit_input, fit_response, fit_method = "rc", fit_truth, fit_out = ".";
  bool fit_functional = false, fit_paper = false;
  Index fit_rank = 0, fit_k = 0, fit_kmax = 10, fit_cv_reps = 500;
  RankConfig fit_cfg;
  fit->add_option("--input", fit_input, "Covariate CSV")->required();
  fit->add_option("--response", fit_response, "Response CSV")->required();
  fit->add_flag("--functional", fit_functional, "Functional response");
  fit->add_option("--method", fit_method, "rc, st, or rc-quadratic");
  fit->add_option("--rank", fit_rank, "Fixed rank (0 = estimate by mode)");
  fit->add_option("--k", fit_k, "Fixed spectral cutoff (0 = cross-validate)");
  fit->add_flag("--paper-coefficients", fit_paper,
                "Quadratic inverse with the displayed coefficients (4x MP)");
  fit->add_option("--k-max", fit_kmax, "Largest cutoff for CV");
  fit->add_option("--cv-reps", fit_cv_reps, "CV partition repetitions");
  fit->add_option("--truth", fit_truth, "truth.json for L2 error reporting");
  fit->add_option("--out-dir", fit_out, "Output directory");
  fit_cfg.attach(fit);
  enable_json_config(fit);

  // ---- compare
  auto* cmp = app.add_subcommand("compare", "Replicated estimator comparison");
  std::vector<std::string> cmp_models{"m1"};
  std::vector<double> cmp_deltas{0.05};
  std::vector<std::string> cmp_methods{"rc", "st"};
  std::vector<Index> cmp_n{100};
  std::string cmp_error = "banded", cmp_out = ".";
  double cmp_sigma2 = 0.25;
  Index cmp_reps = 20, cmp_known_rank = 0, cmp_kmax = 10, cmp_cv_reps = 500,
        cmp_length = 100;
  std::uint64_t cmp_grid_seed = 9;
  RankConfig cmp_cfg;
  cmp->add_option("--models", cmp_models, "Models (m1..m6)")->delimiter(',');
  cmp->add_option("--deltas", cmp_deltas, "Error bandwidths")->delimiter(',');
  cmp->add_option("--error", cmp_error, "banded, iid, or none");
  cmp->add_option("--sigma2", cmp_sigma2, "iid error variance");
  cmp->add_option("--methods", cmp_methods, "rc and/or st")->delimiter(',');
  cmp->add_option("--n-list", cmp_n, "Sample sizes")->delimiter(',');
  cmp->add_option("--replicates", cmp_reps, "Replicates per cell");
  cmp->add_option("--known-rank", cmp_known_rank,
                  "Fix the rank instead of estimating it");
  cmp->add_option("--k-max", cmp_kmax, "Largest CV cutoff");
  cmp->add_option("--cv-reps", cmp_cv_reps, "CV partition repetitions");
  cmp->add_option("--L", cmp_length, "Grid size");
  cmp->add_option("--grid-seed", cmp_grid_seed, "Grid seed");
  cmp->add_option("--out-dir", cmp_out, "Output directory");
  cmp_cfg.attach(cmp);
  enable_json_config(cmp);

  // ---- analyze
  auto* ana = app.add_subcommand("analyze", "Analyze user-supplied curves");
  std::string ana_cov, ana_resp, ana_out = ".";
  Index ana_kmax = 10, ana_cv_reps = 500;
  RankConfig ana_cfg;
  ana_cfg.stride = 1;          // small grids: no subsampling by default
  ana_cfg.iterations = 1;
  ana_cfg.delta_star = 0.05;   // near-white errors unless told otherwise
  ana->add_option("--covariate", ana_cov, "Covariate CSV")->required();
  ana->add_option("--response", ana_resp, "Response CSV")->required();
  ana->add_option("--k-max", ana_kmax, "Largest CV cutoff");
  ana->add_option("--cv-reps", ana_cv_reps, "CV partition repetitions");
  ana->add_option("--out-dir", ana_out, "Output directory");
  ana_cfg.attach(ana);
  enable_json_config(ana);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      return cmd_simulate(sim_model, sim_error, sim_delta, sim_sigma2, sim_noise,
                          sim_n, sim_length, sim_seed, sim_grid_seed, sim_out,
                          sim_latent);
    }
    if (rank->parsed()) {
      return cmd_rank(rank_input, rank_cfg, rank_essential, rank_out);
    }
    if (fit->parsed()) {
      return cmd_fit(fit_input, fit_response, fit_functional, fit_method,
                     fit_rank, fit_k, fit_paper, fit_kmax, fit_cv_reps, fit_cfg,
                     fit_truth, fit_out);
    }
    if (cmp->parsed()) {
      return cmd_compare(cmp_models, cmp_deltas, cmp_error, cmp_sigma2,
                         cmp_methods, cmp_n, cmp_reps, cmp_known_rank, cmp_kmax,
                         cmp_cv_reps, cmp_length, cmp_grid_seed, cmp_cfg,
                         cmp_out);
    }
    if (ana->parsed()) {
      return cmd_analyze(ana_cov, ana_resp, ana_kmax, ana_cv_reps, ana_cfg,
                         ana_out);
    }
  } catch (const no_feasible_rank_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
