#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <optional>
#include <vector>

#include "epf/design.hpp"
#include "epf/error.hpp"
#include "epf/ingest.hpp"
#include "epf/rng.hpp"

namespace epf {

// Fully specified data-generating process: a VARX recursion over 24 hourly
// prices driven by calendar dummies, seasonal demand, noisy wind, a
// zero-blocked diurnal solar curve and slowly wandering fuels.
struct SyntheticDgpConfig {
  Date start_date = Date::from_ymd(2011, 1, 1);
  LagSet lags;
  ExogSpec exog = ExogSpec::all();  // blocks present in Phi_true (demand/wind/solar/fuels)

  // autoregressive part: sum of lag-block infinity norms (keeps the companion
  // spectral radius below 1)
  double ar_total = 0.70;
  double ar_offdiag = 0.02;

  double price_base = 40.0;
  double price_sigma = 2.5;  // innovation scale; 0 gives a noiseless recursion
  double price_corr = 0.5;   // cross-hour innovation correlation rho^|i-j|
  double dummy_scale = 3.0;

  double demand_base = 50.0, demand_season = 5.0, demand_diurnal = 8.0, demand_weekend = 4.0, demand_noise = 2.0;
  double wind_base = 12.0, wind_season = 3.0, wind_noise = 5.0;
  double solar_base = 15.0, solar_season = 0.5, solar_noise = 2.0;
  int daylight_start = 8, daylight_end = 18;  // hours with nonzero solar
  double fuel_co2_base = 15.0, fuel_gas_base = 20.0, fuel_coal_base = 10.0;
  double fuel_persistence = 0.99, fuel_step = 0.3;

  double demand_beta = 0.5, wind_beta = -0.35, solar_beta = -0.3, fuel_beta = 0.25;

  std::uint64_t seed = 1;
};

struct SyntheticDgp {
  SyntheticDgpConfig cfg;
  ModelSpec spec;               // multivariate spec describing the design Phi_true conforms to
  std::vector<ColumnInfo> plan; // column layout of Phi_true rows
  Eigen::MatrixXd Phi_true;     // m x 24
  Eigen::MatrixXd Sigma_true;   // 24 x 24
  double spectral_radius = 0.0; // companion form of the autoregressive part
};

namespace detail {

inline double companion_spectral_radius(const SyntheticDgp& dgp) {
  const int L = dgp.spec.lags.max_lag();
  const int dim = kHours * L;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(dim, dim);
  for (size_t c = 0; c < dgp.plan.size(); ++c) {
    const auto& ci = dgp.plan[c];
    if (ci.kind != ColumnKind::price_lag) continue;
    // equation e gets coefficient Phi(c, e) on y_{ci.hour, t-ci.lag}
    for (int e = 0; e < kHours; ++e)
      companion(e, (ci.lag - 1) * kHours + (ci.hour - 1)) = dgp.Phi_true(static_cast<Eigen::Index>(c), e);
  }
  for (int l = 1; l < L; ++l)
    companion.block((l)*kHours, (l - 1) * kHours, kHours, kHours).setIdentity();
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace detail

inline SyntheticDgp make_dgp(const SyntheticDgpConfig& cfg) {
  cfg.lags.validate();
  require(cfg.daylight_start >= 1 && cfg.daylight_end <= kHours && cfg.daylight_start <= cfg.daylight_end,
          ErrorCode::ConfigError, "daylight hours must satisfy 1 <= start <= end <= 24");
  SyntheticDgp dgp;
  dgp.cfg = cfg;
  dgp.spec.family = Family::multivariate;
  dgp.spec.estimator = Estimator::least_squares;
  dgp.spec.exog = cfg.exog;
  dgp.spec.lags = cfg.lags;
  dgp.plan = detail::column_plan(dgp.spec, /*has_solar=*/true);

  const auto m = static_cast<Eigen::Index>(dgp.plan.size());
  dgp.Phi_true = Eigen::MatrixXd::Zero(m, kHours);
  Rng rng(mix_seed({cfg.seed, hash_tag("dgp_coefficients")}));

  // Lag blocks: diagonal-dominant with small off-diagonal noise, then scaled
  // so the block infinity norms sum to ar_total.
  const int n_lags = cfg.lags.count();
  std::vector<Eigen::MatrixXd> blocks(static_cast<size_t>(n_lags));
  double norm_sum = 0.0;
  for (int li = 0; li < n_lags; ++li) {
    double diag = 1.0 / static_cast<double>(li + 1);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(kHours, kHours);
    for (int i = 0; i < kHours; ++i)
      for (int j = 0; j < kHours; ++j) a(i, j) = (i == j ? diag : 0.0) + cfg.ar_offdiag * rng.uniform(-1.0, 1.0);
    blocks[static_cast<size_t>(li)] = a;
    norm_sum += a.cwiseAbs().rowwise().sum().maxCoeff();
  }
  const double rescale = norm_sum > 0.0 ? cfg.ar_total / norm_sum : 0.0;
  for (auto& a : blocks) a *= rescale;

  // per-hour wiggle so dummy effects differ across equations
  auto hour_shape = [](int h) { return 1.0 + 0.2 * std::sin(2.0 * kPi * static_cast<double>(h) / 24.0); };

  for (size_t c = 0; c < dgp.plan.size(); ++c) {
    const auto& ci = dgp.plan[c];
    const auto row = static_cast<Eigen::Index>(c);
    switch (ci.kind) {
      case ColumnKind::price_lag: {
        int li = 0;
        for (int k = 0; k < n_lags; ++k)
          if (cfg.lags.lags[static_cast<size_t>(k)] == ci.lag) li = k;
        for (int e = 0; e < kHours; ++e) dgp.Phi_true(row, e) = blocks[static_cast<size_t>(li)](ci.hour - 1, e);
        break;
      }
      case ColumnKind::dummy: {
        for (int e = 0; e < kHours; ++e) {
          double shape = hour_shape(e + 1);
          double value;
          if (ci.hour <= 12) {
            // month effect; the price level rides on the month partition
            value = cfg.price_base + cfg.dummy_scale * std::cos(2.0 * kPi * (ci.hour - 1) / 12.0) * shape;
          } else if (ci.hour == 13) {
            value = -0.5 * cfg.dummy_scale * shape;
          } else {
            value = -0.8 * cfg.dummy_scale * shape;
          }
          dgp.Phi_true(row, e) = value;
        }
        break;
      }
      case ColumnKind::exog_demand:
        dgp.Phi_true(row, ci.hour - 1) = cfg.demand_beta;
        break;
      case ColumnKind::exog_wind:
        dgp.Phi_true(row, ci.hour - 1) = cfg.wind_beta;
        break;
      case ColumnKind::exog_solar:
        // night-hour solar is identically zero, so its coefficient must be too
        if (ci.hour >= cfg.daylight_start && ci.hour <= cfg.daylight_end)
          dgp.Phi_true(row, ci.hour - 1) = cfg.solar_beta;
        break;
      case ColumnKind::fuel_co2:
      case ColumnKind::fuel_gas:
      case ColumnKind::fuel_coal:
        for (int e = 0; e < kHours; ++e) dgp.Phi_true(row, e) = cfg.fuel_beta;
        break;
    }
  }

  Eigen::MatrixXd corr(kHours, kHours);
  for (int i = 0; i < kHours; ++i)
    for (int j = 0; j < kHours; ++j) corr(i, j) = std::pow(cfg.price_corr, std::abs(i - j));
  dgp.Sigma_true = cfg.price_sigma * cfg.price_sigma * corr;

  dgp.spectral_radius = detail::companion_spectral_radius(dgp);
  require(dgp.spectral_radius < 1.0, ErrorCode::ExplosiveDgp,
          "autoregressive part has companion spectral radius " + std::to_string(dgp.spectral_radius));
  return dgp;
}

// Simulates `days` calendar days (plus an internal burn-in) and returns the
// aligned MarketDataset. Solar is emitted with exact zeros outside daylight
// hours; apply jitter_solar before building designs.
inline MarketDataset generate(const SyntheticDgp& dgp, int days,
                              std::optional<std::uint64_t> seed_override = std::nullopt) {
  const auto& cfg = dgp.cfg;
  require(days > 2 * dgp.spec.lags.max_lag(), ErrorCode::ConfigError,
          "need more than twice the max lag in days");
  require(dgp.spectral_radius < 1.0, ErrorCode::ExplosiveDgp, "refusing to simulate an explosive recursion");
  const std::uint64_t seed = seed_override.value_or(cfg.seed);
  const int L = dgp.spec.lags.max_lag();
  const int burn = L + 40;
  const int total = burn + days;
  const Date first = cfg.start_date - burn;
  std::vector<Date> all_dates = date_sequence(first, total);

  Rng rng_demand(mix_seed({seed, hash_tag("demand")}));
  Rng rng_wind(mix_seed({seed, hash_tag("wind")}));
  Rng rng_solar(mix_seed({seed, hash_tag("solar")}));
  Rng rng_fuel(mix_seed({seed, hash_tag("fuels")}));
  Rng rng_price(mix_seed({seed, hash_tag("price")}));

  auto day_of_year = [](Date d) {
    return static_cast<double>(d - Date::from_ymd(d.year(), 1, 1));
  };

  // demand: annual season + diurnal hump + weekend dip + AR(1) daily level
  Eigen::MatrixXd demand(total, kHours);
  {
    double level = 0.0;
    for (int t = 0; t < total; ++t) {
      Date d = all_dates[static_cast<size_t>(t)];
      level = 0.7 * level + rng_demand.normal() * cfg.demand_noise;
      double season = cfg.demand_season * std::cos(2.0 * kPi * day_of_year(d) / 365.25);
      double weekend = (d.is_saturday() || d.is_sunday()) ? -cfg.demand_weekend : 0.0;
      for (int h = 0; h < kHours; ++h) {
        double diurnal = cfg.demand_diurnal * std::sin(kPi * static_cast<double>(h) / 23.0);
        demand(t, h) = cfg.demand_base + season + weekend + diurnal + level + 0.5 * cfg.demand_noise * rng_demand.normal();
      }
    }
  }

  // wind: weather-driven, persistent daily level, clipped at zero
  Eigen::MatrixXd wind(total, kHours);
  {
    double level = 0.0;
    for (int t = 0; t < total; ++t) {
      Date d = all_dates[static_cast<size_t>(t)];
      level = 0.8 * level + rng_wind.normal() * cfg.wind_noise;
      double season = cfg.wind_season * std::cos(2.0 * kPi * (day_of_year(d) - 30.0) / 365.25);
      for (int h = 0; h < kHours; ++h)
        wind(t, h) = std::max(0.0, cfg.wind_base + season + level + 0.4 * cfg.wind_noise * rng_wind.normal());
    }
  }

  // solar: diurnal bell inside daylight hours, exact zeros outside
  Eigen::MatrixXd solar = Eigen::MatrixXd::Zero(total, kHours);
  {
    const double span = static_cast<double>(cfg.daylight_end - cfg.daylight_start) + 1.0;
    for (int t = 0; t < total; ++t) {
      Date d = all_dates[static_cast<size_t>(t)];
      double season = 1.0 + cfg.solar_season * std::cos(2.0 * kPi * (day_of_year(d) - 172.0) / 365.25);
      double amp = std::max(0.1, cfg.solar_base * season + cfg.solar_noise * rng_solar.normal());
      for (int h = cfg.daylight_start; h <= cfg.daylight_end; ++h) {
        double x = (static_cast<double>(h - cfg.daylight_start) + 0.5) / span;
        double bell = std::sin(kPi * x);
        solar(t, h - 1) = std::max(0.05, amp * bell * bell + 0.2 * cfg.solar_noise * rng_solar.normal());
      }
    }
  }

  // fuels: highly persistent AR(1) levels (near random walks, but bounded)
  Eigen::VectorXd co2(total), gas(total), coal(total);
  {
    double c = 0.0, g = 0.0, k = 0.0;
    for (int t = 0; t < total; ++t) {
      c = cfg.fuel_persistence * c + cfg.fuel_step * rng_fuel.normal();
      g = cfg.fuel_persistence * g + cfg.fuel_step * rng_fuel.normal();
      k = cfg.fuel_persistence * k + cfg.fuel_step * rng_fuel.normal();
      co2(t) = std::max(1.0, cfg.fuel_co2_base + c);
      gas(t) = std::max(1.0, cfg.fuel_gas_base + g);
      coal(t) = std::max(1.0, cfg.fuel_coal_base + k);
    }
  }

  Eigen::LLT<Eigen::MatrixXd> sig_llt(dgp.Sigma_true + 1e-12 * Eigen::MatrixXd::Identity(kHours, kHours));
  Eigen::MatrixXd sig_root =
      cfg.price_sigma > 0.0 ? Eigen::MatrixXd(sig_llt.matrixL()) : Eigen::MatrixXd::Zero(kHours, kHours);

  Eigen::MatrixXd dummies = calendar_dummies(all_dates);
  Eigen::MatrixXd prices(total, kHours);
  Eigen::VectorXd x(static_cast<Eigen::Index>(dgp.plan.size()));
  Eigen::VectorXd z(kHours);
  for (int t = 0; t < total; ++t) {
    for (int h = 0; h < kHours; ++h) z(h) = rng_price.normal();
    Eigen::VectorXd innovation = sig_root * z;
    if (t < L) {
      prices.row(t) = (Eigen::VectorXd::Constant(kHours, cfg.price_base * 3.0) + innovation).transpose();
      continue;
    }
    for (size_t c = 0; c < dgp.plan.size(); ++c) {
      const auto& ci = dgp.plan[c];
      double v = 0.0;
      switch (ci.kind) {
        case ColumnKind::price_lag: v = prices(t - ci.lag, ci.hour - 1); break;
        case ColumnKind::dummy: v = dummies(t, ci.hour - 1); break;
        case ColumnKind::exog_demand: v = demand(t, ci.hour - 1); break;
        case ColumnKind::exog_solar: v = solar(t, ci.hour - 1); break;
        case ColumnKind::exog_wind: v = wind(t, ci.hour - 1); break;
        case ColumnKind::fuel_co2: v = co2(t - 1); break;
        case ColumnKind::fuel_gas: v = gas(t - 1); break;
        case ColumnKind::fuel_coal: v = coal(t - 1); break;
      }
      x(static_cast<Eigen::Index>(c)) = v;
    }
    prices.row(t) = (dgp.Phi_true.transpose() * x + innovation).transpose();
  }

  MarketDataset out;
  out.market = "synthetic";
  std::vector<Date> dates(all_dates.begin() + burn, all_dates.end());
  auto slice = [&](const Eigen::MatrixXd& mat, SeriesRole role) {
    HourlyPanel p;
    p.dates = dates;
    p.values = mat.bottomRows(days);
    p.label = role;
    return p;
  };
  out.price = slice(prices, SeriesRole::price);
  out.demand = slice(demand, SeriesRole::demand);
  out.wind = slice(wind, SeriesRole::wind);
  out.solar = slice(solar, SeriesRole::solar);
  out.fuels.dates = dates;
  out.fuels.co2 = co2.tail(days);
  out.fuels.gas = gas.tail(days);
  out.fuels.coal = coal.tail(days);
  out.check_invariants();
  return out;
}

// Dataset plus the conditional-mean forecasts from Phi_true: the
// unbeatable-in-expectation point forecaster used to validate DM/MCS behaviour.
struct OraclePair {
  MarketDataset data;
  std::vector<Date> dates;        // forecastable target dates
  Eigen::MatrixXd oracle_points;  // |dates| x 24
};

inline OraclePair known_best_pair(const SyntheticDgp& dgp, int days, std::uint64_t seed) {
  OraclePair out;
  out.data = generate(dgp, days, seed);
  const int L = dgp.spec.lags.max_lag();
  const Eigen::Index nf = out.data.days() - L;
  out.dates = date_sequence(out.data.start() + L, static_cast<int>(nf));
  out.oracle_points.resize(nf, kHours);
  for (Eigen::Index i = 0; i < nf; ++i) {
    Eigen::VectorXd x = new_regressor_row(out.data, dgp.spec, out.dates[static_cast<size_t>(i)]);
    out.oracle_points.row(i) = (dgp.Phi_true.transpose() * x).transpose();
  }
  return out;
}

}  // namespace epf
