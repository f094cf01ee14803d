#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "epf/config.hpp"
#include "epf/csv.hpp"
#include "epf/error.hpp"
#include "epf/metrics.hpp"

namespace epf {

// 26 report columns: delivery hours 1..24, then Avg, then Avg over peak hours 8-20.
inline constexpr int kReportCols = 26;
inline constexpr int kAvgCol = 24;
inline constexpr int kPeakCol = 25;

inline std::string report_column_name(int c) {
  if (c < 24) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "h%02d", c + 1);
    return buf;
  }
  return c == kAvgCol ? "avg" : "avg_peak_8_20";
}

struct ModelLosses {
  std::string id;
  Family family = Family::multivariate;
  BenchmarkTag benchmark = BenchmarkTag::none;
  Eigen::MatrixXd sqe;   // T x 24 squared errors
  Eigen::MatrixXd crps;  // T x 24 per-hour CRPS
};

// Per-hour and aggregate scores, DM p-values against the family benchmark and
// MCS membership for every model; the data behind the report tables.
struct EvaluationReport {
  std::vector<std::string> model_ids;
  std::vector<Family> families;
  std::vector<int> benchmark_of;  // row index of the family benchmark
  std::vector<bool> is_benchmark;
  Eigen::MatrixXd rmse;        // M x 26
  Eigen::MatrixXd crps;        // M x 26
  Eigen::MatrixXd dm_p_rmse;   // M x 26, NaN on benchmark rows
  Eigen::MatrixXd dm_p_crps;   // M x 26
  Eigen::MatrixXd mcs_p_rmse;  // M x 26
  Eigen::MatrixXd mcs_p_crps;  // M x 26
  Eigen::MatrixXd mcs_in_rmse;  // M x 26, 0/1
  Eigen::MatrixXd mcs_in_crps;  // M x 26, 0/1
};

namespace detail {

// Daily loss series behind report column c: a single hour, or the equal-weight
// average over all 24 / the 13 peak hours.
inline Eigen::VectorXd column_loss_series(const Eigen::MatrixXd& losses, int c) {
  if (c < 24) return losses.col(c);
  if (c == kAvgCol) return losses.rowwise().mean();
  return losses.middleCols(kPeakFirstHour - 1, kPeakLastHour - kPeakFirstHour + 1).rowwise().mean();
}

}  // namespace detail

inline EvaluationReport evaluate_models(const std::vector<ModelLosses>& models, const MetricsOptions& opts,
                                        std::uint64_t seed) {
  const auto M = static_cast<Eigen::Index>(models.size());
  require(M >= 1, ErrorCode::MisalignedRuns, "evaluate_models: no models");
  const Eigen::Index T = models.front().sqe.rows();
  for (const auto& m : models) {
    require(m.sqe.rows() == T && m.crps.rows() == T && m.sqe.cols() == 24 && m.crps.cols() == 24,
            ErrorCode::MisalignedRuns, "model " + m.id + ": loss matrices misaligned");
  }

  EvaluationReport rep;
  rep.model_ids.reserve(models.size());
  int uni_bench = -1, multi_bench = -1;
  for (size_t i = 0; i < models.size(); ++i) {
    rep.model_ids.push_back(models[i].id);
    rep.families.push_back(models[i].family);
    if (models[i].benchmark == BenchmarkTag::univariate) uni_bench = static_cast<int>(i);
    if (models[i].benchmark == BenchmarkTag::multivariate) multi_bench = static_cast<int>(i);
  }
  for (size_t i = 0; i < models.size(); ++i) {
    const bool multivariate = models[i].family == Family::multivariate;
    const int bench = multivariate ? multi_bench : uni_bench;
    require(bench >= 0, ErrorCode::ConfigError,
            std::string("no ") + (multivariate ? "multivariate" : "univariate") + " benchmark designated");
    rep.benchmark_of.push_back(bench);
    rep.is_benchmark.push_back(static_cast<int>(i) == bench);
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.rmse.setZero(M, kReportCols);
  rep.crps.setZero(M, kReportCols);
  rep.dm_p_rmse.setConstant(M, kReportCols, nan);
  rep.dm_p_crps.setConstant(M, kReportCols, nan);
  rep.mcs_p_rmse.setZero(M, kReportCols);
  rep.mcs_p_crps.setZero(M, kReportCols);
  rep.mcs_in_rmse.setZero(M, kReportCols);
  rep.mcs_in_crps.setZero(M, kReportCols);

  for (Eigen::Index i = 0; i < M; ++i) {
    // rmse_h = sqrt(mean of the squared-error column)
    Eigen::VectorXd rh = models[static_cast<size_t>(i)].sqe.colwise().mean().cwiseSqrt().transpose();
    ScoreTable rm = make_score_table(rh);
    rep.rmse.row(i).head(24) = rm.per_hour.transpose();
    rep.rmse(i, kAvgCol) = rm.avg;
    rep.rmse(i, kPeakCol) = rm.avg_peak;

    Eigen::VectorXd ch = models[static_cast<size_t>(i)].crps.colwise().mean().transpose();
    ScoreTable cm = make_score_table(ch);
    rep.crps.row(i).head(24) = cm.per_hour.transpose();
    rep.crps(i, kAvgCol) = cm.avg;
    rep.crps(i, kPeakCol) = cm.avg_peak;
  }

  // Diebold-Mariano vs. the designated family benchmark, one-sided with the
  // benchmark as the null.
  for (Eigen::Index i = 0; i < M; ++i) {
    if (rep.is_benchmark[static_cast<size_t>(i)]) continue;
    const auto& mine = models[static_cast<size_t>(i)];
    const auto& bench = models[static_cast<size_t>(rep.benchmark_of[static_cast<size_t>(i)])];
    for (int c = 0; c < kReportCols; ++c) {
      Eigen::VectorXd la = detail::column_loss_series(bench.sqe, c);
      Eigen::VectorXd lb = detail::column_loss_series(mine.sqe, c);
      rep.dm_p_rmse(i, c) = dm_test({la.data(), static_cast<size_t>(la.size())},
                                    {lb.data(), static_cast<size_t>(lb.size())}, true, opts.hac)
                                .p_value;
      la = detail::column_loss_series(bench.crps, c);
      lb = detail::column_loss_series(mine.crps, c);
      rep.dm_p_crps(i, c) = dm_test({la.data(), static_cast<size_t>(la.size())},
                                    {lb.data(), static_cast<size_t>(lb.size())}, true, opts.hac)
                                .p_value;
    }
  }

  // MCS across all models jointly, separately per column and per loss.
  if (M >= 1) {
    for (int c = 0; c < kReportCols; ++c) {
      for (int metric = 0; metric < 2; ++metric) {
        Eigen::MatrixXd losses(T, M);
        for (Eigen::Index i = 0; i < M; ++i)
          losses.col(i) = detail::column_loss_series(
              metric == 0 ? models[static_cast<size_t>(i)].sqe : models[static_cast<size_t>(i)].crps, c);
        std::uint64_t col_seed = mix_seed({seed, hash_tag("mcs"), static_cast<std::uint64_t>(metric),
                                           static_cast<std::uint64_t>(c)});
        McsResult res = mcs(losses, opts.alpha, opts.mcs, col_seed);
        auto& pmat = metric == 0 ? rep.mcs_p_rmse : rep.mcs_p_crps;
        auto& imat = metric == 0 ? rep.mcs_in_rmse : rep.mcs_in_crps;
        for (Eigen::Index i = 0; i < M; ++i) pmat(i, c) = res.p_values[static_cast<size_t>(i)];
        for (int idx : res.included) imat(idx, c) = 1.0;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// CSV emission

namespace detail {

inline std::vector<std::string> report_header(const std::vector<int>& cols) {
  std::vector<std::string> h{"model"};
  for (int c : cols) h.push_back(report_column_name(c));
  return h;
}

inline std::vector<int> all_report_cols() {
  std::vector<int> cols(kReportCols);
  for (int c = 0; c < kReportCols; ++c) cols[static_cast<size_t>(c)] = c;
  return cols;
}

// hours 1, 4, ..., 22 plus the two aggregates, mirroring the printed tables
inline std::vector<int> summary_report_cols() {
  std::vector<int> cols;
  for (int h = 1; h <= 22; h += 3) cols.push_back(h - 1);
  cols.push_back(kAvgCol);
  cols.push_back(kPeakCol);
  return cols;
}

}  // namespace detail

inline void write_numeric_report(const std::string& path, const std::vector<std::string>& model_ids,
                                 const Eigen::MatrixXd& values) {
  csv::Writer w(path);
  w.row(detail::report_header(detail::all_report_cols()));
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    std::vector<std::string> cells{model_ids[static_cast<size_t>(i)]};
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      double v = values(i, c);
      cells.push_back(std::isnan(v) ? "" : csv::format_double(v));
    }
    w.row(cells);
  }
}

// Report table in the published layout: values (or ratios to the family
// benchmark) at 3 decimals with DM significance stars appended; benchmark rows
// always carry raw values and no stars.
inline void write_report_table(const std::string& path, const EvaluationReport& rep, const Eigen::MatrixXd& values,
                               const Eigen::MatrixXd& dm_p, bool ratio, bool summary_only) {
  auto cols = summary_only ? detail::summary_report_cols() : detail::all_report_cols();
  csv::Writer w(path);
  auto header = detail::report_header(cols);
  header.insert(header.begin() + 1, "encoding");
  w.row(header);
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    const bool bench_row = rep.is_benchmark[static_cast<size_t>(i)];
    std::vector<std::string> cells{rep.model_ids[static_cast<size_t>(i)]};
    cells.push_back(bench_row ? "raw" : (ratio ? "ratio" : "raw"));
    for (int c : cols) {
      double v = values(i, c);
      if (ratio && !bench_row) {
        double b = values(rep.benchmark_of[static_cast<size_t>(i)], c);
        v = b != 0.0 ? v / b : std::numeric_limits<double>::quiet_NaN();
      }
      std::string cell = std::isnan(v) ? "" : csv::format_fixed(v, 3);
      double p = dm_p(i, c);
      if (!bench_row && !std::isnan(p)) cell += significance_stars(p);
      cells.push_back(cell);
    }
    w.row(cells);
  }
}

inline void write_membership_report(const std::string& path, const std::vector<std::string>& model_ids,
                                    const Eigen::MatrixXd& membership) {
  csv::Writer w(path);
  w.row(detail::report_header(detail::all_report_cols()));
  for (Eigen::Index i = 0; i < membership.rows(); ++i) {
    std::vector<std::string> cells{model_ids[static_cast<size_t>(i)]};
    for (Eigen::Index c = 0; c < membership.cols(); ++c)
      cells.push_back(membership(i, c) > 0.5 ? "1" : "0");
    w.row(cells);
  }
}

inline void write_report_files(const std::string& dir, const EvaluationReport& rep) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto p = [&](const std::string& name) { return (fs::path(dir) / name).string(); };
  write_numeric_report(p("scores_rmse.csv"), rep.model_ids, rep.rmse);
  write_numeric_report(p("scores_crps.csv"), rep.model_ids, rep.crps);
  write_numeric_report(p("dm_pvalues_rmse.csv"), rep.model_ids, rep.dm_p_rmse);
  write_numeric_report(p("dm_pvalues_crps.csv"), rep.model_ids, rep.dm_p_crps);
  write_numeric_report(p("mcs_pvalues_rmse.csv"), rep.model_ids, rep.mcs_p_rmse);
  write_numeric_report(p("mcs_pvalues_crps.csv"), rep.model_ids, rep.mcs_p_crps);
  write_membership_report(p("mcs_membership_rmse.csv"), rep.model_ids, rep.mcs_in_rmse);
  write_membership_report(p("mcs_membership_crps.csv"), rep.model_ids, rep.mcs_in_crps);
  write_report_table(p("table_rmse_summary_raw.csv"), rep, rep.rmse, rep.dm_p_rmse, false, true);
  write_report_table(p("table_rmse_summary_ratio.csv"), rep, rep.rmse, rep.dm_p_rmse, true, true);
  write_report_table(p("table_rmse_full_raw.csv"), rep, rep.rmse, rep.dm_p_rmse, false, false);
  write_report_table(p("table_rmse_full_ratio.csv"), rep, rep.rmse, rep.dm_p_rmse, true, false);
  write_report_table(p("table_crps_summary_raw.csv"), rep, rep.crps, rep.dm_p_crps, false, true);
  write_report_table(p("table_crps_summary_ratio.csv"), rep, rep.crps, rep.dm_p_crps, true, true);
  write_report_table(p("table_crps_full_raw.csv"), rep, rep.crps, rep.dm_p_crps, false, false);
  write_report_table(p("table_crps_full_ratio.csv"), rep, rep.crps, rep.dm_p_crps, true, false);
}

}  // namespace epf
