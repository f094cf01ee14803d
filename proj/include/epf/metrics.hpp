#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "epf/error.hpp"
#include "epf/rng.hpp"
#include "epf/stats.hpp"

namespace epf {

inline constexpr int kPeakFirstHour = 8;
inline constexpr int kPeakLastHour = 20;

struct ScoreTable {
  Eigen::VectorXd per_hour;  // 24
  double avg = 0.0;
  double avg_peak = 0.0;  // hours 8..20
};

// ---------------------------------------------------------------------------
// RMSE

inline Eigen::VectorXd rmse_hourly(const Eigen::MatrixXd& errors) {
  require(errors.rows() >= 1, ErrorCode::EmptyErrors, "rmse_hourly: no evaluation rows");
  return (errors.array().square().colwise().mean()).sqrt().transpose();
}

inline std::pair<double, double> rmse_aggregates(const Eigen::VectorXd& per_hour) {
  require(per_hour.size() == 24, ErrorCode::DimensionMismatch, "expected 24 hourly entries");
  double avg = per_hour.mean();
  double peak = per_hour.segment(kPeakFirstHour - 1, kPeakLastHour - kPeakFirstHour + 1).mean();
  return {avg, peak};
}

inline ScoreTable make_score_table(const Eigen::VectorXd& per_hour) {
  ScoreTable t;
  t.per_hour = per_hour;
  auto [avg, peak] = rmse_aggregates(per_hour);
  t.avg = avg;
  t.avg_peak = peak;
  return t;
}

// ---------------------------------------------------------------------------
// CRPS

// Closed form for a Gaussian predictive: sigma * (z (2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi)).
inline double crps_gaussian(double mean, double sd, double y) {
  require(sd >= 0.0, ErrorCode::NegativeSd, "crps_gaussian: negative sd");
  if (sd == 0.0) return std::abs(mean - y);
  double z = (y - mean) / sd;
  return sd * (z * (2.0 * norm_cdf(z) - 1.0) + 2.0 * norm_pdf(z) - 1.0 / std::sqrt(kPi));
}

// Energy form (1/d) sum |Y_i - y| - (1/(2 d^2)) sum_ij |Y_i - Y_j|,
// computed in O(d log d) by sorting.
inline double crps_sample(std::span<const double> draws, double y) {
  const auto d = static_cast<std::ptrdiff_t>(draws.size());
  require(d >= 2, ErrorCode::TooFewDraws, "crps_sample needs at least 2 draws");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  double term1 = 0.0;
  double pair_sum = 0.0;  // sum_k x_(k) (2k - d + 1) = 0.5 sum_ij |x_i - x_j|
  for (std::ptrdiff_t k = 0; k < d; ++k) {
    term1 += std::abs(sorted[static_cast<size_t>(k)] - y);
    pair_sum += sorted[static_cast<size_t>(k)] * static_cast<double>(2 * k - d + 1);
  }
  const double dd = static_cast<double>(d);
  return term1 / dd - pair_sum / (dd * dd);
}

inline double crps_sample(const Eigen::VectorXd& draws, double y) {
  return crps_sample(std::span<const double>(draws.data(), static_cast<size_t>(draws.size())), y);
}

// ---------------------------------------------------------------------------
// Diebold-Mariano test with pre-whitened quadratic-spectral HAC variance

struct HacConfig {
  bool prewhiten = true;     // AR(1) pre-whitening (Andrews-Monahan)
  double bandwidth = 0.0;    // 0 = Andrews automatic AR(1) plug-in
  double rho_cap = 0.97;
};

namespace detail {

inline double qs_kernel(double x) {
  if (x == 0.0) return 1.0;
  double a = 6.0 * kPi * x / 5.0;
  return 25.0 / (12.0 * kPi * kPi * x * x) * (std::sin(a) / a - std::cos(a));
}

inline double ar1_coefficient(std::span<const double> v) {
  double num = 0.0, den = 0.0;
  for (size_t t = 1; t < v.size(); ++t) {
    num += v[t] * v[t - 1];
    den += v[t - 1] * v[t - 1];
  }
  return den > 0.0 ? num / den : 0.0;
}

// QS-kernel long-run variance of a (near) mean-zero series with Andrews' AR(1)
// plug-in bandwidth.
inline double qs_lrv(std::span<const double> v, double bandwidth_override) {
  const auto n = static_cast<std::ptrdiff_t>(v.size());
  if (n < 2) return 0.0;
  double st = bandwidth_override;
  if (st <= 0.0) {
    double r = ar1_coefficient(v);
    r = std::clamp(r, -0.97, 0.97);
    double denom = (1.0 - r) * (1.0 - r) * (1.0 - r) * (1.0 - r);
    double alpha2 = denom > 0.0 ? 4.0 * r * r / denom : 0.0;
    st = 1.3221 * std::pow(alpha2 * static_cast<double>(n), 0.2);
  }
  double gamma0 = 0.0;
  for (double x : v) gamma0 += x * x;
  gamma0 /= static_cast<double>(n);
  if (st < 1e-8) return gamma0;
  double lrv = gamma0;
  for (std::ptrdiff_t j = 1; j < n; ++j) {
    double w = qs_kernel(static_cast<double>(j) / st);
    if (std::abs(w) < 1e-14 && j > static_cast<std::ptrdiff_t>(10.0 * st)) break;
    double g = 0.0;
    for (std::ptrdiff_t t = j; t < n; ++t) g += v[static_cast<size_t>(t)] * v[static_cast<size_t>(t - j)];
    g /= static_cast<double>(n);
    lrv += 2.0 * w * g;
  }
  return lrv;
}

}  // namespace detail

// Long-run variance of the loss differential per Andrews-Monahan: demean,
// AR(1) pre-whiten, QS kernel with automatic bandwidth, recolor.
inline double dm_long_run_variance(std::span<const double> diff, const HacConfig& cfg = {}) {
  const auto T = static_cast<std::ptrdiff_t>(diff.size());
  if (T < 2) return 0.0;
  double mean = mean_of(diff.data(), diff.size());
  std::vector<double> e(diff.size());
  for (size_t t = 0; t < diff.size(); ++t) e[t] = diff[t] - mean;
  double rho = 0.0;
  std::vector<double> v;
  if (cfg.prewhiten) {
    rho = std::clamp(detail::ar1_coefficient(e), -cfg.rho_cap, cfg.rho_cap);
    v.resize(e.size() - 1);
    for (size_t t = 1; t < e.size(); ++t) v[t - 1] = e[t] - rho * e[t - 1];
    double vm = mean_of(v.data(), v.size());
    for (double& x : v) x -= vm;
  } else {
    v = e;
  }
  double omega = detail::qs_lrv(v, cfg.bandwidth);
  double recolor = (1.0 - rho) * (1.0 - rho);
  return recolor > 0.0 ? omega / recolor : omega;
}

struct DmResult {
  double statistic = 0.0;
  double p_value = 0.5;     // one-sided upper tail unless two-sided requested
  bool one_sided = true;
  bool degenerate = false;  // zero-variance loss differential
};

// t-test on the mean loss differential d_t = loss_a,t - loss_b,t. With
// one_sided=true the upper-tail p-value is reported (null: a not worse than b),
// so small p favours model b over benchmark a.
inline DmResult dm_test(std::span<const double> loss_a, std::span<const double> loss_b, bool one_sided = true,
                        const HacConfig& cfg = {}) {
  require(loss_a.size() == loss_b.size(), ErrorCode::LengthMismatch, "dm_test: loss series length mismatch");
  const auto T = static_cast<std::ptrdiff_t>(loss_a.size());
  require(T >= 10, ErrorCode::InsufficientSample, "dm_test needs at least 10 observations");
  std::vector<double> d(loss_a.size());
  for (size_t t = 0; t < loss_a.size(); ++t) {
    d[t] = loss_a[t] - loss_b[t];
    require(std::isfinite(d[t]), ErrorCode::NonNumericValue, "dm_test: non-finite loss differential");
  }
  DmResult res;
  res.one_sided = one_sided;
  double mean = mean_of(d.data(), d.size());
  double lrv = dm_long_run_variance(d, cfg);
  if (lrv <= 0.0 || !std::isfinite(lrv)) {
    res.degenerate = true;
    if (mean == 0.0) {
      res.statistic = 0.0;
      res.p_value = 0.5;
    } else {
      res.statistic = mean > 0.0 ? std::numeric_limits<double>::infinity()
                                 : -std::numeric_limits<double>::infinity();
      double upper = mean > 0.0 ? 0.0 : 1.0;
      res.p_value = one_sided ? upper : 0.0;
    }
    return res;
  }
  res.statistic = mean / std::sqrt(lrv / static_cast<double>(T));
  res.p_value = one_sided ? norm_upper_tail(res.statistic) : 2.0 * norm_upper_tail(std::abs(res.statistic));
  return res;
}

// ---------------------------------------------------------------------------
// Model Confidence Set (elimination with the T_max statistic and a
// moving-block bootstrap of loss differentials)

struct McsResult {
  std::vector<int> included;      // model indices with p_value > alpha
  std::vector<double> p_values;   // per-model sequence-maximum elimination p-values
  double alpha = 0.10;
};

struct McsConfig {
  int bootstrap = 5000;
  int block_length = 0;  // 0 = ceil(T^(1/3))
};

inline McsResult mcs(const Eigen::MatrixXd& losses, double alpha, const McsConfig& cfg, std::uint64_t seed) {
  const Eigen::Index T = losses.rows();
  const Eigen::Index M = losses.cols();
  require(M >= 1, ErrorCode::DegenerateLosses, "mcs: no models");
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::ConfigError, "mcs: alpha must be in (0,1)");
  require(losses.allFinite(), ErrorCode::DegenerateLosses, "mcs: non-finite losses");

  McsResult res;
  res.alpha = alpha;
  res.p_values.assign(static_cast<size_t>(M), 1.0);
  if (M == 1) {
    res.included = {0};
    return res;
  }
  require(T >= 20, ErrorCode::InsufficientSample, "mcs needs at least 20 observations");
  // Degenerate when every model has an identical loss path.
  bool all_identical = true;
  for (Eigen::Index j = 1; j < M && all_identical; ++j)
    if ((losses.col(j) - losses.col(0)).cwiseAbs().maxCoeff() > 0.0) all_identical = false;
  require(!all_identical, ErrorCode::DegenerateLosses, "mcs: all models have identical losses");

  const int B = cfg.bootstrap;
  int block = cfg.block_length > 0
                  ? cfg.block_length
                  : static_cast<int>(std::ceil(std::cbrt(static_cast<double>(T))));
  block = std::min<int>(block, static_cast<int>(T));

  // Full-sample and bootstrap means of each model's losses. Block-resampled
  // row sums come from prefix sums; the draw matrix is shared across rounds.
  Eigen::VectorXd lbar = losses.colwise().mean();
  Eigen::MatrixXd prefix = Eigen::MatrixXd::Zero(T + 1, M);
  for (Eigen::Index t = 0; t < T; ++t) prefix.row(t + 1) = prefix.row(t) + losses.row(t);

  Rng rng(mix_seed({seed, hash_tag("mcs")}));
  Eigen::MatrixXd lbar_star(B, M);
  const int max_start = static_cast<int>(T) - block;
  for (int b = 0; b < B; ++b) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(M);
    Eigen::Index filled = 0;
    while (filled < T) {
      auto start = static_cast<Eigen::Index>(rng.uniform() * (max_start + 1));
      if (start > max_start) start = max_start;
      Eigen::Index len = std::min<Eigen::Index>(block, T - filled);
      acc += prefix.row(start + len) - prefix.row(start);
      filled += len;
    }
    lbar_star.row(b) = acc / static_cast<double>(T);
  }

  std::vector<int> current(static_cast<size_t>(M));
  std::iota(current.begin(), current.end(), 0);
  double p_running = 0.0;

  while (current.size() > 1) {
    const auto mcur = static_cast<Eigen::Index>(current.size());
    double center = 0.0;
    for (int i : current) center += lbar(i);
    center /= static_cast<double>(mcur);
    Eigen::VectorXd center_star = Eigen::VectorXd::Zero(B);
    for (int i : current) center_star += lbar_star.col(i);
    center_star /= static_cast<double>(mcur);

    // t_i = dbar_i. / sqrt(bootstrap var of dbar_i.)
    std::vector<double> tstat(current.size());
    std::vector<double> sd(current.size());
    for (size_t idx = 0; idx < current.size(); ++idx) {
      const int i = current[idx];
      double di = lbar(i) - center;
      double var = 0.0;
      for (int b = 0; b < B; ++b) {
        double dev = (lbar_star(b, i) - center_star(b)) - di;
        var += dev * dev;
      }
      var /= static_cast<double>(B);
      sd[idx] = std::sqrt(var);
      tstat[idx] = sd[idx] > 0.0 ? di / sd[idx] : 0.0;
    }
    double tmax = -std::numeric_limits<double>::infinity();
    size_t worst = 0;
    for (size_t idx = 0; idx < current.size(); ++idx) {
      if (tstat[idx] > tmax) {
        tmax = tstat[idx];
        worst = idx;
      }
    }
    int exceed = 0;
    for (int b = 0; b < B; ++b) {
      double tmax_star = -std::numeric_limits<double>::infinity();
      for (size_t idx = 0; idx < current.size(); ++idx) {
        const int i = current[idx];
        if (sd[idx] <= 0.0) continue;
        double di = lbar(i) - center;
        double t = ((lbar_star(b, i) - center_star(b)) - di) / sd[idx];
        tmax_star = std::max(tmax_star, t);
      }
      if (tmax_star > tmax) ++exceed;
    }
    double p_round = static_cast<double>(exceed) / static_cast<double>(B);
    p_running = std::max(p_running, p_round);
    res.p_values[static_cast<size_t>(current[worst])] = p_running;
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  res.p_values[static_cast<size_t>(current.front())] = 1.0;

  for (int i = 0; i < M; ++i)
    if (res.p_values[static_cast<size_t>(i)] > alpha) res.included.push_back(i);
  return res;
}

inline McsResult mcs(const Eigen::MatrixXd& losses, double alpha, int bootstrap, int block_length,
                     std::uint64_t seed) {
  return mcs(losses, alpha, McsConfig{bootstrap, block_length}, seed);
}

// ---------------------------------------------------------------------------

inline std::string significance_stars(double p) {
  require(p >= 0.0 && p <= 1.0, ErrorCode::ConfigError, "p-value outside [0,1]");
  if (p <= 0.01) return "***";
  if (p <= 0.05) return "**";
  if (p <= 0.10) return "*";
  return "";
}

}  // namespace epf
