#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "epf/csv.hpp"
#include "epf/design.hpp"
#include "epf/error.hpp"
#include "epf/rng.hpp"

namespace epf {

struct SolverConfig {
  // cond(X'X) above this is treated as rank deficient
  double condition_limit = 1e12;
  // fast normal-equation path is used only below this; otherwise QR on X
  double normal_equation_limit = 1e6;
};

struct LsFit {
  Eigen::MatrixXd Phi;    // m x q
  Eigen::MatrixXd Sigma;  // q x q, divisor n - m
  Eigen::Index n = 0;
  std::vector<std::string> columns;
};

namespace detail {

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(a));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

// Least-squares fit of Y = X Phi + E with Sigma = E'E / (n - m).
inline LsFit ls_fit(const DesignSystem& ds, const SolverConfig& cfg = {}) {
  const Eigen::Index n = ds.n();
  const Eigen::Index m = ds.m();
  require(n > m, ErrorCode::InsufficientSample,
          "need n > m, got n=" + std::to_string(n) + ", m=" + std::to_string(m));
  Eigen::MatrixXd xtx = detail::symmetrize(ds.X.transpose() * ds.X);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(xtx);
  const double ev_max = es.eigenvalues().maxCoeff();
  const double ev_min = es.eigenvalues().minCoeff();
  require(ev_max > 0.0 && ev_min > 0.0 && ev_max / ev_min <= cfg.condition_limit, ErrorCode::RankDeficient,
          "X'X condition number exceeds " + csv::format_double(cfg.condition_limit));

  LsFit fit;
  fit.n = n;
  fit.columns = ds.columns;
  if (ev_max / ev_min <= cfg.normal_equation_limit) {
    fit.Phi = xtx.llt().solve(ds.X.transpose() * ds.Y);
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ds.X);
    require(qr.rank() == m, ErrorCode::RankDeficient, "X is rank deficient");
    fit.Phi = qr.solve(ds.Y);
  }
  Eigen::MatrixXd resid = ds.Y - ds.X * fit.Phi;
  fit.Sigma = detail::symmetrize(resid.transpose() * resid / static_cast<double>(n - m));
  return fit;
}

// ---------------------------------------------------------------------------
// Conjugate normal-Wishart (matrix-normal inverse-Wishart) regression

struct NwPrior {
  Eigen::MatrixXd M0;  // m x q
  Eigen::MatrixXd V0;  // m x m, SPD
  Eigen::MatrixXd S0;  // q x q, SPD
  double nu0 = 0.0;    // > q - 1
};

struct NwPosterior {
  Eigen::MatrixXd Mn;  // m x q
  Eigen::MatrixXd Vn;  // m x m
  Eigen::MatrixXd Sn;  // q x q
  double nun = 0.0;
};

namespace detail {

inline void check_spd(const Eigen::MatrixXd& a, const char* name) {
  require(a.rows() == a.cols(), ErrorCode::NonPdPrior, std::string(name) + " must be square");
  double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale, ErrorCode::NonPdPrior,
          std::string(name) + " must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(symmetrize(a));
  require(llt.info() == Eigen::Success, ErrorCode::NonPdPrior, std::string(name) + " must be positive definite");
}

}  // namespace detail

// Standard conjugate update:
//   Vn = (V0^-1 + X'X)^-1
//   Mn = Vn (V0^-1 M0 + X'Y)
//   Sn = S0 + Y'Y + M0' V0^-1 M0 - Mn' Vn^-1 Mn
//   nun = nu0 + n
inline NwPosterior nw_posterior(const DesignSystem& ds, const NwPrior& prior) {
  const Eigen::Index m = ds.m();
  const Eigen::Index q = ds.q();
  require(prior.M0.rows() == m && prior.M0.cols() == q, ErrorCode::DimensionMismatch, "prior M0 shape mismatch");
  require(prior.V0.rows() == m && prior.V0.cols() == m, ErrorCode::DimensionMismatch, "prior V0 shape mismatch");
  require(prior.S0.rows() == q && prior.S0.cols() == q, ErrorCode::DimensionMismatch, "prior S0 shape mismatch");
  detail::check_spd(prior.V0, "V0");
  detail::check_spd(prior.S0, "S0");
  require(prior.nu0 > static_cast<double>(q) - 1.0, ErrorCode::NonPdPrior, "nu0 must exceed q - 1");

  Eigen::LLT<Eigen::MatrixXd> v0llt(detail::symmetrize(prior.V0));
  Eigen::MatrixXd v0inv = v0llt.solve(Eigen::MatrixXd::Identity(m, m));
  Eigen::MatrixXd vn_inv = detail::symmetrize(v0inv + ds.X.transpose() * ds.X);
  Eigen::LLT<Eigen::MatrixXd> vnllt(vn_inv);
  require(vnllt.info() == Eigen::Success, ErrorCode::RankDeficient, "posterior precision not positive definite");

  NwPosterior post;
  post.Mn = vnllt.solve(v0inv * prior.M0 + ds.X.transpose() * ds.Y);
  post.Vn = detail::symmetrize(vnllt.solve(Eigen::MatrixXd::Identity(m, m)));
  post.Sn = detail::symmetrize(prior.S0 + ds.Y.transpose() * ds.Y + prior.M0.transpose() * v0inv * prior.M0 -
                               post.Mn.transpose() * vn_inv * post.Mn);
  post.nun = prior.nu0 + static_cast<double>(ds.n());
  return post;
}

// Minnesota-flavoured default prior built from the design itself. Own-lag
// columns shrink toward delta at the first lag with harmonic-squared decay in
// the day offset, scaled by univariate AR residual variances; dummy and
// exogenous columns get a loose variance scaled by the column's sample
// variance. S0 is the diagonal of the AR residual variances, nu0 = q + offset.
struct PriorConfig {
  double delta = 0.9;        // prior mean of the own first-lag coefficient
  double lambda = 0.2;       // overall tightness
  double exog_kappa = 10.0;  // extra looseness for dummy/exogenous columns
  double nu0_offset = 2.0;   // nu0 = q + offset
  double variance_floor = 1e-6;
};

inline NwPrior minnesota_prior(const DesignSystem& ds, const PriorConfig& cfg = {}) {
  const Eigen::Index m = ds.m();
  const Eigen::Index q = ds.q();
  const Eigen::Index n = ds.n();
  const double lam2 = cfg.lambda * cfg.lambda;

  // Per-equation residual variance from a plain AR-with-dummies fit.
  Eigen::VectorXd s2(q);
  for (Eigen::Index e = 0; e < q; ++e) {
    const int hour = ds.eq_hours[static_cast<size_t>(e)];
    std::vector<Eigen::Index> cols;
    for (Eigen::Index c = 0; c < m; ++c) {
      const auto& ci = ds.cols_info[static_cast<size_t>(c)];
      if ((ci.kind == ColumnKind::price_lag && ci.hour == hour) || ci.kind == ColumnKind::dummy)
        cols.push_back(c);
    }
    const auto k = static_cast<Eigen::Index>(cols.size());
    double value = 0.0;
    if (n > k + 2) {
      Eigen::MatrixXd xa(n, k);
      for (Eigen::Index j = 0; j < k; ++j) xa.col(j) = ds.X.col(cols[static_cast<size_t>(j)]);
      Eigen::VectorXd beta = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(xa).solve(ds.Y.col(e));
      value = (ds.Y.col(e) - xa * beta).squaredNorm() / static_cast<double>(n - k);
    } else if (n >= 2) {
      Eigen::VectorXd centered = ds.Y.col(e).array() - ds.Y.col(e).mean();
      value = centered.squaredNorm() / static_cast<double>(n - 1);
    }
    s2(e) = std::max(value, cfg.variance_floor);
  }

  NwPrior prior;
  prior.M0 = Eigen::MatrixXd::Zero(m, q);
  prior.S0 = s2.asDiagonal();
  prior.nu0 = static_cast<double>(q) + cfg.nu0_offset;

  Eigen::VectorXd v0diag(m);
  for (Eigen::Index c = 0; c < m; ++c) {
    const auto& ci = ds.cols_info[static_cast<size_t>(c)];
    double col_var = 0.0;
    if (n >= 2) {
      Eigen::VectorXd centered = ds.X.col(c).array() - ds.X.col(c).mean();
      col_var = centered.squaredNorm() / static_cast<double>(n - 1);
    }
    col_var = std::max(col_var, cfg.variance_floor);
    if (ci.kind == ColumnKind::price_lag) {
      double scale = col_var;
      for (Eigen::Index e = 0; e < q; ++e)
        if (ds.eq_hours[static_cast<size_t>(e)] == ci.hour) {
          scale = s2(e);
          break;
        }
      v0diag(c) = lam2 / (static_cast<double>(ci.lag) * static_cast<double>(ci.lag) * scale);
    } else {
      v0diag(c) = lam2 * cfg.exog_kappa * cfg.exog_kappa / col_var;
    }
  }
  prior.V0 = v0diag.asDiagonal();

  // Own first lag (the smallest own-lag offset) carries the mean-reversion mass.
  for (Eigen::Index e = 0; e < q; ++e) {
    const int hour = ds.eq_hours[static_cast<size_t>(e)];
    Eigen::Index best = -1;
    int best_lag = std::numeric_limits<int>::max();
    for (Eigen::Index c = 0; c < m; ++c) {
      const auto& ci = ds.cols_info[static_cast<size_t>(c)];
      if (ci.kind == ColumnKind::price_lag && ci.hour == hour && ci.lag < best_lag) {
        best = c;
        best_lag = ci.lag;
      }
    }
    if (best >= 0) prior.M0(best, e) = cfg.delta;
  }
  return prior;
}

// ---------------------------------------------------------------------------
// Predictive densities

enum class DensityKind { gaussian, student_t, empirical };

struct ForecastDensity {
  DensityKind kind = DensityKind::gaussian;
  Eigen::VectorXd mean;                 // q
  Eigen::MatrixXd scale;                // q x q scale matrix (covariance for gaussian)
  double dof = std::numeric_limits<double>::infinity();
  std::optional<Eigen::MatrixXd> draws;  // d x q
  Date target_date{};

  Eigen::Index q() const { return mean.size(); }
  double marginal_sd(Eigen::Index h) const { return std::sqrt(std::max(scale(h, h), 0.0)); }
};

// Plug-in Gaussian density from an OLS fit.
inline ForecastDensity predictive_ls(const LsFit& fit, const Eigen::VectorXd& x_new) {
  require(x_new.size() == fit.Phi.rows(), ErrorCode::DimensionMismatch,
          "x_new length " + std::to_string(x_new.size()) + " != m " + std::to_string(fit.Phi.rows()));
  ForecastDensity fd;
  fd.kind = DensityKind::gaussian;
  fd.mean = fit.Phi.transpose() * x_new;
  fd.scale = fit.Sigma;
  return fd;
}

// Matric-variate-t marginal for one future observation row:
//   y_new ~ t_nu(Mn' x, Sn (1 + x' Vn x) / nu),  nu = nun - q + 1.
inline ForecastDensity predictive_bayes(const NwPosterior& post, const Eigen::VectorXd& x_new) {
  const Eigen::Index q = post.Sn.rows();
  require(x_new.size() == post.Mn.rows(), ErrorCode::DimensionMismatch,
          "x_new length " + std::to_string(x_new.size()) + " != m " + std::to_string(post.Mn.rows()));
  require(post.nun > static_cast<double>(q) + 1.0, ErrorCode::DofTooSmall,
          "posterior degrees of freedom too small for a predictive density");
  const double nu = post.nun - static_cast<double>(q) + 1.0;
  ForecastDensity fd;
  fd.kind = DensityKind::student_t;
  fd.dof = nu;
  fd.mean = post.Mn.transpose() * x_new;
  const double inflate = 1.0 + x_new.dot(post.Vn * x_new);
  fd.scale = detail::symmetrize(post.Sn * (inflate / nu));
  return fd;
}

// i.i.d. draws from the parametric law; deterministic given the seed.
inline ForecastDensity sample_density(const ForecastDensity& fd, int d, std::uint64_t seed) {
  require(fd.kind != DensityKind::empirical, ErrorCode::EmptyDensity,
          "sample_density needs a parametric density");
  require(fd.mean.size() > 0, ErrorCode::EmptyDensity, "sample_density: empty density");
  require(d >= 2, ErrorCode::TooFewDraws, "need at least 2 draws");
  const Eigen::Index q = fd.q();
  Eigen::MatrixXd root = detail::psd_sqrt(fd.scale);
  Rng rng(mix_seed({seed, hash_tag("sample_density")}));
  Eigen::MatrixXd draws(d, q);
  Eigen::VectorXd z(q);
  for (int i = 0; i < d; ++i) {
    double t_factor = 1.0;
    if (fd.kind == DensityKind::student_t) t_factor = std::sqrt(fd.dof / rng.chi_squared(fd.dof));
    for (Eigen::Index j = 0; j < q; ++j) z(j) = rng.normal();
    draws.row(i) = (fd.mean + t_factor * (root * z)).transpose();
  }
  ForecastDensity out = fd;
  out.draws = std::move(draws);
  return out;
}

// Coefficient table as CSV: label, equation (delivery hour), value.
inline void export_coefficients(std::ostream& out, const std::vector<std::string>& columns,
                                const std::vector<int>& eq_hours, const Eigen::MatrixXd& Phi) {
  require(static_cast<Eigen::Index>(columns.size()) == Phi.rows() &&
              static_cast<Eigen::Index>(eq_hours.size()) == Phi.cols(),
          ErrorCode::DimensionMismatch, "coefficient table shape mismatch");
  out << "label,equation,value\n";
  for (Eigen::Index e = 0; e < Phi.cols(); ++e)
    for (Eigen::Index c = 0; c < Phi.rows(); ++c)
      out << columns[static_cast<size_t>(c)] << ',' << eq_hours[static_cast<size_t>(e)] << ','
          << csv::format_double(Phi(c, e)) << '\n';
}

}  // namespace epf
