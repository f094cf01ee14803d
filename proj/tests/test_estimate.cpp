#include <catch2/catch_amalgamated.hpp>

#include "epf/estimate.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace epf;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  return m;
}

// DesignSystem wrapper around plain matrices (estimation does not need the
// calendar bookkeeping).
DesignSystem wrap(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  DesignSystem ds;
  ds.X = x;
  ds.Y = y;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    ds.columns.push_back("c" + std::to_string(c));
    ds.cols_info.push_back({ColumnKind::exog_demand, static_cast<int>(c % 24) + 1, 0});
  }
  for (Eigen::Index e = 0; e < y.cols(); ++e) ds.eq_hours.push_back(static_cast<int>(e) + 1);
  return ds;
}

NwPrior simple_prior(Eigen::Index m, Eigen::Index q, double v_scale = 1.0) {
  NwPrior prior;
  prior.M0 = Eigen::MatrixXd::Zero(m, q);
  prior.V0 = v_scale * Eigen::MatrixXd::Identity(m, m);
  prior.S0 = Eigen::MatrixXd::Identity(q, q);
  prior.nu0 = static_cast<double>(q) + 2.0;
  return prior;
}

}  // namespace

TEST_CASE("ls_fit recovers noiseless coefficients exactly") {
  Rng rng(1);
  Eigen::MatrixXd x = random_matrix(rng, 40, 6);
  Eigen::MatrixXd phi_true = random_matrix(rng, 6, 3);
  DesignSystem ds = wrap(x, x * phi_true);
  LsFit fit = ls_fit(ds);
  CHECK((fit.Phi - phi_true).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(fit.Sigma.cwiseAbs().maxCoeff() < 1e-18);
}

TEST_CASE("ls_fit matches the Gaussian-elimination oracle") {
  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd x = random_matrix(rng, 10, 3);
    Eigen::MatrixXd y = random_matrix(rng, 10, 2);
    LsFit fit = ls_fit(wrap(x, y));
    Eigen::MatrixXd phi_oracle = oracle::ols(x, y);
    CHECK((fit.Phi - phi_oracle).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("ls_fit sigma uses the n - m divisor") {
  Rng rng(3);
  Eigen::MatrixXd x = random_matrix(rng, 25, 4);
  Eigen::MatrixXd y = random_matrix(rng, 25, 2);
  LsFit fit = ls_fit(wrap(x, y));
  Eigen::MatrixXd resid = y - x * fit.Phi;
  Eigen::MatrixXd expect = resid.transpose() * resid / (25.0 - 4.0);
  CHECK((fit.Sigma - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ls_fit error paths") {
  Rng rng(4);
  SECTION("n = m is insufficient") {
    Eigen::MatrixXd x = random_matrix(rng, 5, 5);
    CHECK_THROWS_MATCHES(ls_fit(wrap(x, random_matrix(rng, 5, 1))), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == ErrorCode::InsufficientSample;
                         }));
  }
  SECTION("duplicated column is rank deficient") {
    Eigen::MatrixXd x = random_matrix(rng, 30, 4);
    x.col(3) = x.col(1);
    CHECK_THROWS_MATCHES(ls_fit(wrap(x, random_matrix(rng, 30, 1))), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == ErrorCode::RankDeficient;
                         }));
  }
}

TEST_CASE("ls_fit residual orthogonality") {
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd x = random_matrix(rng, 120, 12);
    // an ill-scaled column to exercise the QR fallback range
    if (rep % 2 == 0) x.col(0) *= 1e-4;
    Eigen::MatrixXd y = random_matrix(rng, 120, 4);
    LsFit fit = ls_fit(wrap(x, y));
    double num = (x.transpose() * (y - x * fit.Phi)).cwiseAbs().maxCoeff();
    double den = (x.transpose() * y).cwiseAbs().maxCoeff();
    CHECK(num / den < 1e-8);
  }
}

TEST_CASE("nw_posterior matches the brute-force conjugate oracle") {
  Rng rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd x = random_matrix(rng, 12, 2);
    Eigen::MatrixXd y = random_matrix(rng, 12, 2);
    NwPrior prior = simple_prior(2, 2, 2.5);
    prior.M0 = random_matrix(rng, 2, 2, 0.3);
    NwPosterior post = nw_posterior(wrap(x, y), prior);
    oracle::NwUpdate expect = oracle::nw_update(x, y, prior.M0, prior.V0, prior.S0, prior.nu0);
    CHECK((post.Mn - expect.Mn).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((post.Vn - expect.Vn).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((post.Sn - expect.Sn).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(post.nun == expect.nun);
  }
}

TEST_CASE("nw_posterior with a diffuse prior approaches OLS") {
  Rng rng(7);
  Eigen::MatrixXd x = random_matrix(rng, 60, 5);
  Eigen::MatrixXd y = random_matrix(rng, 60, 3);
  DesignSystem ds = wrap(x, y);
  LsFit fit = ls_fit(ds);
  NwPosterior post = nw_posterior(ds, simple_prior(5, 3, 1e12));
  double rel = (post.Mn - fit.Phi).norm() / fit.Phi.norm();
  CHECK(rel < 1e-6);
}

TEST_CASE("nw_posterior with no data returns the prior") {
  NwPrior prior = simple_prior(4, 2, 3.0);
  prior.M0.setConstant(0.7);
  DesignSystem ds = wrap(Eigen::MatrixXd::Zero(0, 4), Eigen::MatrixXd::Zero(0, 2));
  NwPosterior post = nw_posterior(ds, prior);
  CHECK((post.Mn - prior.M0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((post.Vn - prior.V0).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((post.Sn - prior.S0).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(post.nun == prior.nu0);
}

TEST_CASE("nw_posterior split update equals one-shot update") {
  Rng rng(8);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::MatrixXd x = random_matrix(rng, 30, 3);
    Eigen::MatrixXd y = random_matrix(rng, 30, 2);
    NwPrior prior = simple_prior(3, 2, 1.7);
    NwPosterior one_shot = nw_posterior(wrap(x, y), prior);
    NwPosterior first = nw_posterior(wrap(x.topRows(12), y.topRows(12)), prior);
    NwPrior mid{first.Mn, first.Vn, first.Sn, first.nun};
    NwPosterior second = nw_posterior(wrap(x.bottomRows(18), y.bottomRows(18)), mid);
    CHECK((second.Mn - one_shot.Mn).norm() / one_shot.Mn.norm() < 1e-8);
    CHECK((second.Sn - one_shot.Sn).norm() / one_shot.Sn.norm() < 1e-8);
    CHECK((second.Vn - one_shot.Vn).norm() / one_shot.Vn.norm() < 1e-8);
    CHECK(second.nun == one_shot.nun);
  }
}

TEST_CASE("posterior column covariance never exceeds the prior") {
  Rng rng(9);
  Eigen::MatrixXd x = random_matrix(rng, 40, 4);
  Eigen::MatrixXd y = random_matrix(rng, 40, 2);
  NwPrior prior = simple_prior(4, 2, 2.0);
  NwPosterior post = nw_posterior(wrap(x, y), prior);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(prior.V0 - post.Vn);
  CHECK(es.eigenvalues().minCoeff() > -1e-10);
  CHECK(post.nun == prior.nu0 + 40.0);
}

TEST_CASE("nw_posterior rejects bad priors") {
  Rng rng(10);
  DesignSystem ds = wrap(random_matrix(rng, 10, 2), random_matrix(rng, 10, 1));
  NwPrior prior = simple_prior(2, 1);
  SECTION("non-PD V0") {
    prior.V0(0, 0) = -1.0;
    CHECK_THROWS_MATCHES(nw_posterior(ds, prior), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == ErrorCode::NonPdPrior;
                         }));
  }
  SECTION("nu0 too small") {
    prior.nu0 = -2.0;
    CHECK_THROWS_MATCHES(nw_posterior(ds, prior), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == ErrorCode::NonPdPrior;
                         }));
  }
}

TEST_CASE("minnesota prior structure") {
  MarketDataset data = epf_test::make_test_dataset(120);
  ModelSpec spec;
  spec.family = Family::multivariate;
  spec.exog = ExogSpec::all();
  DesignSystem ds = build_design(data, spec, {data.start(), data.start() + 99});
  PriorConfig cfg;
  NwPrior prior = minnesota_prior(ds, cfg);
  CHECK(prior.nu0 == 26.0);
  CHECK(prior.S0.diagonal().minCoeff() > 0.0);
  // own first-lag prior means sit at delta, everything else at zero
  int delta_cells = 0;
  for (Eigen::Index c = 0; c < prior.M0.rows(); ++c)
    for (Eigen::Index e = 0; e < prior.M0.cols(); ++e) {
      if (prior.M0(c, e) != 0.0) {
        ++delta_cells;
        CHECK(prior.M0(c, e) == cfg.delta);
        const auto& ci = ds.cols_info[static_cast<size_t>(c)];
        CHECK(ci.kind == ColumnKind::price_lag);
        CHECK(ci.lag == 1);
        CHECK(ci.hour == ds.eq_hours[static_cast<size_t>(e)]);
      }
    }
  CHECK(delta_cells == 24);
  // lag-7 columns are tighter than lag-1 columns of the same hour
  for (int h = 1; h <= 24; ++h) {
    double v1 = 0.0, v7 = 0.0;
    for (Eigen::Index c = 0; c < ds.m(); ++c) {
      const auto& ci = ds.cols_info[static_cast<size_t>(c)];
      if (ci.kind == ColumnKind::price_lag && ci.hour == h && ci.lag == 1) v1 = prior.V0(c, c);
      if (ci.kind == ColumnKind::price_lag && ci.hour == h && ci.lag == 7) v7 = prior.V0(c, c);
    }
    CHECK(v7 == Catch::Approx(v1 / 49.0));
  }
  // the update accepts it
  NwPosterior post = nw_posterior(ds, prior);
  CHECK(post.nun == prior.nu0 + static_cast<double>(ds.n()));
}

TEST_CASE("predictive_ls") {
  Rng rng(11);
  Eigen::MatrixXd x = random_matrix(rng, 30, 4);
  Eigen::MatrixXd y = random_matrix(rng, 30, 3);
  LsFit fit = ls_fit(wrap(x, y));
  SECTION("zero regressor gives zero mean") {
    ForecastDensity fd = predictive_ls(fit, Eigen::VectorXd::Zero(4));
    CHECK(fd.mean.cwiseAbs().maxCoeff() == 0.0);
    CHECK(fd.kind == DensityKind::gaussian);
    CHECK(fd.scale == fit.Sigma);
  }
  SECTION("identity coefficient block reproduces x entries") {
    LsFit ident;
    ident.Phi = Eigen::MatrixXd::Identity(4, 4);
    ident.Sigma = Eigen::MatrixXd::Identity(4, 4);
    ident.n = 10;
    Eigen::VectorXd xn(4);
    xn << 1.0, 2.0, 3.0, 4.0;
    ForecastDensity fd = predictive_ls(ident, xn);
    CHECK(fd.mean == xn);
  }
  SECTION("dimension mismatch") {
    CHECK_THROWS_MATCHES(predictive_ls(fit, Eigen::VectorXd::Zero(5)), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == ErrorCode::DimensionMismatch;
                         }));
  }
  SECTION("scale is symmetric PSD") {
    ForecastDensity fd = predictive_ls(fit, Eigen::VectorXd::Ones(4));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fd.scale);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
  }
}

TEST_CASE("predictive_bayes") {
  Rng rng(12);
  SECTION("scale inflation factor exceeds one") {
    Eigen::MatrixXd x = random_matrix(rng, 25, 3);
    Eigen::MatrixXd y = random_matrix(rng, 25, 2);
    NwPosterior post = nw_posterior(wrap(x, y), simple_prior(3, 2));
    Eigen::VectorXd xn = Eigen::VectorXd::Ones(3);
    ForecastDensity fd = predictive_bayes(post, xn);
    const double nu = post.nun - 2.0 + 1.0;
    CHECK(fd.dof == nu);
    Eigen::MatrixXd base = post.Sn / nu;
    // scale = Sn (1 + x'Vn x)/nu with the quadratic form strictly positive
    double inflate = fd.scale(0, 0) / base(0, 0);
    CHECK(inflate > 1.0);
    CHECK(inflate == Catch::Approx(1.0 + xn.dot(post.Vn * xn)));
  }
  SECTION("matches the scalar conjugate-regression oracle for q = 1") {
    for (int rep = 0; rep < 8; ++rep) {
      Eigen::MatrixXd x = random_matrix(rng, 18, 2);
      Eigen::VectorXd y = random_matrix(rng, 18, 1);
      NwPrior prior = simple_prior(2, 1, 1.3);
      prior.M0(0, 0) = 0.4;
      prior.nu0 = 3.0;
      NwPosterior post = nw_posterior(wrap(x, y), prior);
      Eigen::VectorXd xn = random_matrix(rng, 2, 1);
      ForecastDensity fd = predictive_bayes(post, xn);
      auto expect = oracle::scalar_conjugate_predictive(x, y, prior.M0.col(0), prior.V0, prior.S0(0, 0),
                                                        prior.nu0, xn);
      CHECK(fd.mean(0) == Catch::Approx(expect.location).margin(1e-10));
      CHECK(fd.dof == Catch::Approx(expect.dof));
      CHECK(fd.scale(0, 0) == Catch::Approx(expect.scale).epsilon(1e-10));
    }
  }
  SECTION("dof guard") {
    NwPosterior post;
    post.Mn = Eigen::MatrixXd::Zero(2, 3);
    post.Vn = Eigen::MatrixXd::Identity(2, 2);
    post.Sn = Eigen::MatrixXd::Identity(3, 3);
    post.nun = 3.5;  // q + 1 = 4 > nun
    CHECK_THROWS_MATCHES(predictive_bayes(post, Eigen::VectorXd::Zero(2)), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == ErrorCode::DofTooSmall;
                         }));
  }
}

TEST_CASE("bayesian predictive approaches the plug-in gaussian as n grows") {
  Rng rng(13);
  double prev_kl = std::numeric_limits<double>::infinity();
  for (int n : {30, 120, 480, 1920}) {
    Eigen::MatrixXd x = random_matrix(rng, n, 2);
    Eigen::VectorXd beta(2);
    beta << 1.0, -0.5;
    Eigen::VectorXd y = x * beta;
    for (Eigen::Index i = 0; i < n; ++i) y(i) += 0.5 * rng.normal();
    DesignSystem ds = wrap(x, y);
    NwPosterior post = nw_posterior(ds, simple_prior(2, 1));
    LsFit fit = ls_fit(ds);
    Eigen::VectorXd xn(2);
    xn << 0.3, 0.7;
    ForecastDensity bayes = predictive_bayes(post, xn);
    ForecastDensity plug = predictive_ls(fit, xn);
    double kl = oracle::kl_divergence_1d(
        [&](double z) { return oracle::student_t_pdf(z, bayes.mean(0), bayes.scale(0, 0), bayes.dof); },
        [&](double z) { return oracle::normal_pdf_ms(z, plug.mean(0), plug.scale(0, 0)); },
        plug.mean(0) - 12.0 * std::sqrt(plug.scale(0, 0)), plug.mean(0) + 12.0 * std::sqrt(plug.scale(0, 0)));
    CHECK(kl < prev_kl);
    prev_kl = kl;
  }
  CHECK(prev_kl < 1e-3);
}

TEST_CASE("sample_density") {
  ForecastDensity fd;
  fd.kind = DensityKind::gaussian;
  fd.mean = Eigen::VectorXd::Zero(2);
  fd.mean << 1.0, -2.0;
  fd.scale = Eigen::MatrixXd::Zero(2, 2);
  fd.scale << 4.0, 1.0, 1.0, 2.0;
  SECTION("same seed gives identical draw matrices") {
    ForecastDensity a = sample_density(fd, 500, 77);
    ForecastDensity b = sample_density(fd, 500, 77);
    REQUIRE(a.draws.has_value());
    CHECK(*a.draws == *b.draws);
    ForecastDensity c = sample_density(fd, 500, 78);
    CHECK(*a.draws != *c.draws);
  }
  SECTION("gaussian sample mean within the CLT band") {
    const int d = 1000000;
    ForecastDensity s = sample_density(fd, d, 5);
    for (int j = 0; j < 2; ++j) {
      double mean = s.draws->col(j).mean();
      double bound = 4.0 * std::sqrt(fd.scale(j, j) / static_cast<double>(d));
      CHECK(std::abs(mean - fd.mean(j)) < bound);
    }
  }
  SECTION("student-t second moment matches scale * dof/(dof-2)") {
    ForecastDensity t;
    t.kind = DensityKind::student_t;
    t.dof = 3.0;
    t.mean = Eigen::VectorXd::Zero(1);
    t.scale = Eigen::MatrixXd::Identity(1, 1) * 2.0;
    // heavy tails: compare the median of many medium-sized sample variances
    std::vector<double> vars;
    for (int rep = 0; rep < 31; ++rep) {
      ForecastDensity s = sample_density(t, 40000, 100 + static_cast<std::uint64_t>(rep));
      double m = s.draws->col(0).mean();
      double v = (s.draws->col(0).array() - m).square().sum() / (40000.0 - 1.0);
      vars.push_back(v);
    }
    std::sort(vars.begin(), vars.end());
    double median = vars[vars.size() / 2];
    double expect = 2.0 * 3.0 / (3.0 - 2.0);
    CHECK(median > 0.75 * expect);
    CHECK(median < 1.25 * expect);
  }
  SECTION("error paths") {
    CHECK_THROWS_MATCHES(sample_density(fd, 1, 1), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == ErrorCode::TooFewDraws;
                         }));
    ForecastDensity emp;
    emp.kind = DensityKind::empirical;
    emp.mean = Eigen::VectorXd::Zero(1);
    emp.scale = Eigen::MatrixXd::Identity(1, 1);
    CHECK_THROWS_MATCHES(sample_density(emp, 10, 1), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == ErrorCode::EmptyDensity;
                         }));
  }
}

TEST_CASE("estimation error shrinks with the sample on synthetic VAR data") {
  // small 3-equation system with lags {1,2}; median Frobenius error over 50
  // seeds must decrease as n grows
  const int q = 3;
  Eigen::MatrixXd a1 = 0.4 * Eigen::MatrixXd::Identity(q, q);
  Eigen::MatrixXd a2 = 0.25 * Eigen::MatrixXd::Identity(q, q);
  a1(0, 1) = 0.1;
  a2(2, 0) = -0.1;
  std::vector<double> medians;
  for (int n : {200, 800, 3200}) {
    std::vector<double> errs;
    for (int seed = 0; seed < 50; ++seed) {
      Rng rng(static_cast<std::uint64_t>(1000 + seed));
      Eigen::MatrixXd y(n + 2, q);
      y.row(0).setZero();
      y.row(1).setZero();
      for (int t = 2; t < n + 2; ++t) {
        Eigen::VectorXd e(q);
        for (int j = 0; j < q; ++j) e(j) = rng.normal();
        y.row(t) = (a1 * y.row(t - 1).transpose() + a2 * y.row(t - 2).transpose() + e).transpose();
      }
      Eigen::MatrixXd x(n, 2 * q), yy(n, q);
      for (int t = 0; t < n; ++t) {
        x.row(t).head(q) = y.row(t + 1);
        x.row(t).tail(q) = y.row(t);
        yy.row(t) = y.row(t + 2);
      }
      LsFit fit = ls_fit(wrap(x, yy));
      Eigen::MatrixXd phi_true(2 * q, q);
      phi_true.topRows(q) = a1.transpose();
      phi_true.bottomRows(q) = a2.transpose();
      errs.push_back((fit.Phi - phi_true).norm());
    }
    std::sort(errs.begin(), errs.end());
    medians.push_back(errs[errs.size() / 2]);
  }
  CHECK(medians[1] < medians[0]);
  CHECK(medians[2] < medians[1]);
}

TEST_CASE("coefficient export") {
  Rng rng(21);
  Eigen::MatrixXd x = random_matrix(rng, 20, 2);
  Eigen::MatrixXd y = random_matrix(rng, 20, 2);
  DesignSystem ds = wrap(x, y);
  LsFit fit = ls_fit(ds);
  std::ostringstream out;
  export_coefficients(out, ds.columns, ds.eq_hours, fit.Phi);
  std::string text = out.str();
  CHECK(text.find("label,equation,value") == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 4);
}
