#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "epf/error.hpp"
#include "epf/ingest.hpp"

namespace epf {

// Day offsets of the autoregressive terms. The canonical set is {1, 2, 7}:
// previous day, two days before, and the same weekday one week before.
struct LagSet {
  std::vector<int> lags{1, 2, 7};

  int max_lag() const { return lags.empty() ? 0 : *std::max_element(lags.begin(), lags.end()); }
  int count() const { return static_cast<int>(lags.size()); }

  void validate() const {
    require(!lags.empty(), ErrorCode::ConfigError, "lag set must be non-empty");
    for (size_t i = 0; i < lags.size(); ++i) {
      require(lags[i] >= 1, ErrorCode::ConfigError, "lags must be positive day offsets");
      for (size_t j = i + 1; j < lags.size(); ++j)
        require(lags[i] != lags[j], ErrorCode::ConfigError, "lags must be distinct");
    }
  }
};

struct ExogSpec {
  bool demand = false;
  bool wind = false;
  bool solar = false;
  bool co2 = false;
  bool gas = false;
  bool coal = false;

  static ExogSpec none() { return {}; }
  static ExogSpec all() { return {true, true, true, true, true, true}; }
  static ExogSpec all_but_solar() { return {true, true, false, true, true, true}; }

  int hourly_count() const { return (demand ? 1 : 0) + (wind ? 1 : 0) + (solar ? 1 : 0); }
  int fuel_count() const { return (co2 ? 1 : 0) + (gas ? 1 : 0) + (coal ? 1 : 0); }
  bool any() const { return hourly_count() + fuel_count() > 0; }
};

enum class Family { univariate, univariate_augmented, multivariate };
enum class Estimator { least_squares, bayesian };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::univariate: return "univariate";
    case Family::univariate_augmented: return "univariate-augmented";
    case Family::multivariate: return "multivariate";
  }
  return "?";
}

inline const char* estimator_name(Estimator e) {
  return e == Estimator::least_squares ? "least-squares" : "bayesian";
}

struct ModelSpec {
  Family family = Family::multivariate;
  Estimator estimator = Estimator::least_squares;
  ExogSpec exog;
  LagSet lags;
  int hour = 0;  // 1..24, used by the univariate families

  ModelSpec with_hour(int h) const {
    ModelSpec s = *this;
    s.hour = h;
    return s;
  }
};

enum class ColumnKind { price_lag, dummy, exog_demand, exog_solar, exog_wind, fuel_co2, fuel_gas, fuel_coal };

struct ColumnInfo {
  ColumnKind kind;
  int hour;  // 1..24 for price lags / hourly exogenous; dummy index 1..14 for dummies; 0 for fuels
  int lag;   // day offset (0 for contemporaneous columns)
};

inline std::string column_label(const ColumnInfo& c) {
  char buf[32];
  switch (c.kind) {
    case ColumnKind::price_lag:
      std::snprintf(buf, sizeof(buf), "y_h%02d_lag%d", c.hour, c.lag);
      return buf;
    case ColumnKind::dummy:
      if (c.hour <= 12) {
        std::snprintf(buf, sizeof(buf), "dummy_m%02d", c.hour);
        return buf;
      }
      return c.hour == 13 ? "dummy_sat" : "dummy_sun";
    case ColumnKind::exog_demand:
      std::snprintf(buf, sizeof(buf), "demand_h%02d", c.hour);
      return buf;
    case ColumnKind::exog_solar:
      std::snprintf(buf, sizeof(buf), "solar_h%02d", c.hour);
      return buf;
    case ColumnKind::exog_wind:
      std::snprintf(buf, sizeof(buf), "wind_h%02d", c.hour);
      return buf;
    case ColumnKind::fuel_co2: return "co2_lag1";
    case ColumnKind::fuel_gas: return "gas_lag1";
    case ColumnKind::fuel_coal: return "coal_lag1";
  }
  return "?";
}

// Regressand matrix Y and regressor matrix X for one model over one window,
// with the coefficient bookkeeping needed to label and rebuild every column.
struct DesignSystem {
  Eigen::MatrixXd Y;                  // n x q
  Eigen::MatrixXd X;                  // n x m
  std::vector<std::string> columns;   // length m
  std::vector<ColumnInfo> cols_info;  // length m
  std::vector<int> eq_hours;          // length q, the hour of each regressand column
  std::vector<Date> dates;            // length n, the target date of each row

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index m() const { return X.cols(); }
  Eigen::Index q() const { return Y.cols(); }
};

namespace detail {

// Column layout per the X_t listing order: lags, dummies, demand, solar, wind, fuels.
inline std::vector<ColumnInfo> column_plan(const ModelSpec& spec, bool has_solar) {
  spec.lags.validate();
  require(!spec.exog.solar || has_solar, ErrorCode::SolarUnavailable,
          "spec requests solar but the dataset has no solar panel");
  std::vector<ColumnInfo> plan;
  const bool multivariate = spec.family == Family::multivariate;
  if (!multivariate)
    require(spec.hour >= 1 && spec.hour <= kHours, ErrorCode::ConfigError,
            "univariate spec needs hour in 1..24, got " + std::to_string(spec.hour));

  for (int lag : spec.lags.lags) {
    if (multivariate) {
      for (int h = 1; h <= kHours; ++h) plan.push_back({ColumnKind::price_lag, h, lag});
    } else {
      plan.push_back({ColumnKind::price_lag, spec.hour, lag});
    }
  }
  for (int k = 1; k <= kDummyCount; ++k) plan.push_back({ColumnKind::dummy, k, 0});
  auto hourly_block = [&](ColumnKind kind) {
    if (multivariate) {
      for (int h = 1; h <= kHours; ++h) plan.push_back({kind, h, 0});
    } else {
      plan.push_back({kind, spec.hour, 0});
    }
  };
  if (spec.exog.demand) hourly_block(ColumnKind::exog_demand);
  if (spec.exog.solar) hourly_block(ColumnKind::exog_solar);
  if (spec.exog.wind) hourly_block(ColumnKind::exog_wind);
  if (spec.exog.co2) plan.push_back({ColumnKind::fuel_co2, 0, 1});
  if (spec.exog.gas) plan.push_back({ColumnKind::fuel_gas, 0, 1});
  if (spec.exog.coal) plan.push_back({ColumnKind::fuel_coal, 0, 1});
  if (spec.family == Family::univariate_augmented) {
    for (int j = 1; j <= kHours; ++j)
      if (j != spec.hour) plan.push_back({ColumnKind::price_lag, j, 1});
  }
  return plan;
}

inline std::vector<ColumnInfo> column_plan(const MarketDataset& data, const ModelSpec& spec) {
  return column_plan(spec, data.has_solar());
}

inline double column_value(const MarketDataset& data, const ColumnInfo& col, Date target,
                           const Eigen::Ref<const Eigen::RowVectorXd>& dummies) {
  switch (col.kind) {
    case ColumnKind::price_lag: return data.price.at(target - col.lag, col.hour);
    case ColumnKind::dummy: return dummies(col.hour - 1);
    case ColumnKind::exog_demand: return data.demand.at(target, col.hour);
    case ColumnKind::exog_solar: return data.solar->at(target, col.hour);
    case ColumnKind::exog_wind: return data.wind.at(target, col.hour);
    case ColumnKind::fuel_co2: return data.fuels.co2(data.fuels.index_of(target - 1));
    case ColumnKind::fuel_gas: return data.fuels.gas(data.fuels.index_of(target - 1));
    case ColumnKind::fuel_coal: return data.fuels.coal(data.fuels.index_of(target - 1));
  }
  return 0.0;
}

inline DesignSystem build_design_impl(const MarketDataset& data, const ModelSpec& spec, DateRange window) {
  data.check_invariants();
  require(data.range().contains(window), ErrorCode::PlanOutOfRange,
          "window " + window.start.to_string() + ".." + window.end.to_string() + " outside dataset coverage " +
              data.start().to_string() + ".." + data.end().to_string());
  const int max_lag = spec.lags.max_lag();
  const int n = window.length() - max_lag;
  require(n >= 1, ErrorCode::WindowTooShort,
          "window of " + std::to_string(window.length()) + " days cannot support max lag " + std::to_string(max_lag));

  DesignSystem ds;
  ds.cols_info = column_plan(data, spec);
  ds.columns.reserve(ds.cols_info.size());
  for (const auto& c : ds.cols_info) ds.columns.push_back(column_label(c));
  if (spec.family == Family::multivariate) {
    ds.eq_hours.resize(kHours);
    for (int h = 1; h <= kHours; ++h) ds.eq_hours[static_cast<size_t>(h) - 1] = h;
  } else {
    ds.eq_hours = {spec.hour};
  }

  const auto m = static_cast<Eigen::Index>(ds.cols_info.size());
  const auto q = static_cast<Eigen::Index>(ds.eq_hours.size());
  ds.X.resize(n, m);
  ds.Y.resize(n, q);
  ds.dates = date_sequence(window.start + max_lag, n);
  Eigen::MatrixXd dums = calendar_dummies(ds.dates);
  for (Eigen::Index i = 0; i < n; ++i) {
    Date target = ds.dates[static_cast<size_t>(i)];
    for (Eigen::Index c = 0; c < m; ++c)
      ds.X(i, c) = column_value(data, ds.cols_info[static_cast<size_t>(c)], target, dums.row(i));
    for (Eigen::Index e = 0; e < q; ++e) ds.Y(i, e) = data.price.at(target, ds.eq_hours[static_cast<size_t>(e)]);
  }
  return ds;
}

}  // namespace detail

// VAR / VARX design: Y rows are the 24-hour price vectors, X rows are
// [y_{t-1}, y_{t-2}, y_{t-7}, d_t, (x_t, z_t, w_t, m_{t-1}, g_{t-1}, c_{t-1})].
inline DesignSystem build_multivariate(const MarketDataset& data, const ModelSpec& spec, DateRange window) {
  require(spec.family == Family::multivariate, ErrorCode::ConfigError, "build_multivariate needs a multivariate spec");
  return detail::build_design_impl(data, spec, window);
}

// AR / ARX design for one delivery hour.
inline DesignSystem build_univariate(const MarketDataset& data, const ModelSpec& spec, DateRange window) {
  require(spec.family == Family::univariate, ErrorCode::ConfigError, "build_univariate needs a univariate spec");
  return detail::build_design_impl(data, spec, window);
}

// Univariate design augmented with the first lag of the other 23 hours.
inline DesignSystem build_univariate_augmented(const MarketDataset& data, const ModelSpec& spec, DateRange window) {
  require(spec.family == Family::univariate_augmented, ErrorCode::ConfigError,
          "build_univariate_augmented needs a univariate-augmented spec");
  return detail::build_design_impl(data, spec, window);
}

inline DesignSystem build_design(const MarketDataset& data, const ModelSpec& spec, DateRange window) {
  return detail::build_design_impl(data, spec, window);
}

// Regressor row for forecasting `target`, laid out exactly like the design columns.
inline Eigen::VectorXd new_regressor_row(const MarketDataset& data, const ModelSpec& spec, Date target) {
  auto plan = detail::column_plan(data, spec);
  const int max_lag = spec.lags.max_lag();
  require(target - max_lag >= data.start() && target <= data.end(), ErrorCode::PlanOutOfRange,
          "cannot build regressor row for " + target.to_string());
  Eigen::RowVectorXd dums = calendar_dummies(target);
  Eigen::VectorXd x(static_cast<Eigen::Index>(plan.size()));
  for (size_t c = 0; c < plan.size(); ++c)
    x(static_cast<Eigen::Index>(c)) = detail::column_value(data, plan[c], target, dums);
  return x;
}

// Correlation matrix of 24 residual series (columns of `residuals`).
inline Eigen::MatrixXd residual_correlation(const Eigen::MatrixXd& residuals) {
  const Eigen::Index n = residuals.rows();
  const Eigen::Index k = residuals.cols();
  require(n >= 2, ErrorCode::InsufficientSample, "residual_correlation needs at least 2 observations");
  Eigen::MatrixXd centered = residuals.rowwise() - residuals.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  for (Eigen::Index i = 0; i < k; ++i)
    require(sd(i) > 0.0, ErrorCode::DegenerateSeries,
            "residual series " + std::to_string(i + 1) + " has zero variance");
  Eigen::MatrixXd corr(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    corr(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < k; ++j) {
      double r = cov(i, j) / (sd(i) * sd(j));
      r = std::clamp(r, -1.0, 1.0);
      corr(i, j) = r;
      corr(j, i) = r;
    }
  }
  return corr;
}

}  // namespace epf
