#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "epf/design.hpp"
#include "epf/error.hpp"
#include "epf/estimate.hpp"
#include "epf/ingest.hpp"

namespace epf {

struct ModelEntry {
  std::string id;
  ModelSpec spec;
};

struct BacktestPlan {
  std::vector<ModelEntry> models;
  int window_days = 0;  // R, fixed rolling-window length in calendar days
  Date eval_start;
  Date eval_end;
  int draws = 2000;  // draw count used when densities are sampled downstream
  std::uint64_t seed = 0;
  PriorConfig prior;
  SolverConfig solver;
};

struct ForecastRecord {
  std::string model_id;
  Date target_date;
  ForecastDensity density;
  Eigen::VectorXd point;     // = density.mean
  Eigen::VectorXd realized;  // price panel row at target_date
};

struct BacktestResult {
  std::vector<ModelEntry> models;
  std::vector<Date> eval_dates;
  std::vector<std::vector<ForecastRecord>> records;  // [model][eval day]
};

inline void validate_plan(const MarketDataset& data, const BacktestPlan& plan) {
  require(!plan.models.empty(), ErrorCode::ConfigError, "backtest plan has no models");
  require(plan.window_days >= 8, ErrorCode::PlanOutOfRange,
          "rolling window must cover the max lag 7 plus one usable row (R >= 8)");
  require(plan.eval_start <= plan.eval_end, ErrorCode::PlanOutOfRange, "eval_start after eval_end");
  require(plan.eval_start - plan.window_days >= data.start(), ErrorCode::PlanOutOfRange,
          "first window " + (plan.eval_start - plan.window_days).to_string() + ".." +
              (plan.eval_start - 1).to_string() + " starts before dataset coverage " + data.start().to_string());
  require(plan.eval_end <= data.end(), ErrorCode::PlanOutOfRange,
          "eval_end " + plan.eval_end.to_string() + " beyond dataset coverage " + data.end().to_string());
  for (const auto& me : plan.models) {
    detail::column_plan(me.spec, data.has_solar());  // throws SolarUnavailable early
    require(me.spec.lags.max_lag() < plan.window_days, ErrorCode::PlanOutOfRange,
            "model " + me.id + ": max lag must be smaller than the window");
  }
}

// Fits one model on the R days ending the day before `target` and returns the
// one-step-ahead predictive density for `target`. Univariate families combine
// 24 per-hour fits into one stacked density with a diagonal scale.
inline ForecastDensity forecast_once(const MarketDataset& data, const ModelSpec& spec, int window_days,
                                     Date target, const PriorConfig& prior_cfg = {},
                                     const SolverConfig& solver_cfg = {}) {
  const DateRange window{target - window_days, target - 1};
  ForecastDensity out;
  out.target_date = target;
  if (spec.family == Family::multivariate) {
    DesignSystem ds = build_design(data, spec, window);
    Eigen::VectorXd x_new = new_regressor_row(data, spec, target);
    if (spec.estimator == Estimator::least_squares) {
      out = predictive_ls(ls_fit(ds, solver_cfg), x_new);
    } else {
      NwPrior prior = minnesota_prior(ds, prior_cfg);
      out = predictive_bayes(nw_posterior(ds, prior), x_new);
    }
  } else {
    out.mean = Eigen::VectorXd::Zero(kHours);
    out.scale = Eigen::MatrixXd::Zero(kHours, kHours);
    double dof = 0.0;
    for (int h = 1; h <= kHours; ++h) {
      ModelSpec hour_spec = spec.with_hour(h);
      DesignSystem ds = build_design(data, hour_spec, window);
      Eigen::VectorXd x_new = new_regressor_row(data, hour_spec, target);
      ForecastDensity fd;
      if (spec.estimator == Estimator::least_squares) {
        fd = predictive_ls(ls_fit(ds, solver_cfg), x_new);
      } else {
        NwPrior prior = minnesota_prior(ds, prior_cfg);
        fd = predictive_bayes(nw_posterior(ds, prior), x_new);
      }
      out.mean(h - 1) = fd.mean(0);
      out.scale(h - 1, h - 1) = fd.scale(0, 0);
      if (h == 1) {
        out.kind = fd.kind;
        dof = fd.dof;
      } else {
        require(fd.dof == dof, ErrorCode::DimensionMismatch,
                "per-hour predictive degrees of freedom disagree");
      }
    }
    out.dof = dof;
  }
  out.target_date = target;
  return out;
}

// Rolling-window one-step-ahead backtest: for every evaluation date each model
// is re-fit on exactly the R days ending the previous day. The (model, day)
// task grid is embarrassingly parallel; records are assembled into
// deterministic (model, date) order regardless of the number of jobs.
inline BacktestResult run_backtest(const MarketDataset& data, const BacktestPlan& plan, int jobs = 1) {
  data.check_invariants();
  validate_plan(data, plan);

  BacktestResult res;
  res.models = plan.models;
  const int n_days = plan.eval_end - plan.eval_start + 1;
  res.eval_dates = date_sequence(plan.eval_start, n_days);
  res.records.resize(plan.models.size());
  for (auto& r : res.records) r.resize(static_cast<size_t>(n_days));

  struct Task {
    size_t model;
    int day;
  };
  std::vector<Task> tasks;
  tasks.reserve(plan.models.size() * static_cast<size_t>(n_days));
  for (size_t mi = 0; mi < plan.models.size(); ++mi)
    for (int d = 0; d < n_days; ++d) tasks.push_back({mi, d});

  auto run_task = [&](const Task& task) {
    const ModelEntry& entry = plan.models[task.model];
    const Date target = res.eval_dates[static_cast<size_t>(task.day)];
    ForecastRecord rec;
    rec.model_id = entry.id;
    rec.target_date = target;
    try {
      rec.density = forecast_once(data, entry.spec, plan.window_days, target, plan.prior, plan.solver);
    } catch (const Error& e) {
      if (e.is_config_error()) throw;
      fail(ErrorCode::FitFailure, "model " + entry.id + ", target " + target.to_string() + ": " + e.what());
    }
    rec.point = rec.density.mean;
    rec.realized = data.price.values.row(data.price.index_of(target)).transpose();
    res.records[task.model][static_cast<size_t>(task.day)] = std::move(rec);
  };

  if (jobs <= 1 || tasks.size() < 2) {
    for (const auto& t : tasks) run_task(t);
  } else {
    std::atomic<size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::atomic<bool> stop{false};
    auto worker = [&]() {
      for (;;) {
        if (stop.load(std::memory_order_relaxed)) return;
        size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        try {
          run_task(tasks[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          stop.store(true, std::memory_order_relaxed);
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    const auto n_threads = static_cast<size_t>(std::min<int>(jobs, static_cast<int>(tasks.size())));
    pool.reserve(n_threads);
    for (size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  return res;
}

// T_eval x 24 matrix of point-forecast errors (point - realized).
inline Eigen::MatrixXd forecast_errors(const std::vector<ForecastRecord>& records) {
  require(!records.empty(), ErrorCode::MisalignedRecords, "forecast_errors: no records");
  Eigen::MatrixXd errors(static_cast<Eigen::Index>(records.size()), kHours);
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    require(rec.point.size() == kHours && rec.realized.size() == kHours, ErrorCode::MisalignedRecords,
            "forecast_errors: record is not a 24-vector");
    if (i > 0)
      require(rec.target_date > records[i - 1].target_date, ErrorCode::MisalignedRecords,
              "forecast_errors: records out of order at " + rec.target_date.to_string());
    errors.row(static_cast<Eigen::Index>(i)) = (rec.point - rec.realized).transpose();
  }
  return errors;
}

}  // namespace epf
