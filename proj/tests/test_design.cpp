#include <catch2/catch_amalgamated.hpp>

#include "epf/design.hpp"
#include "test_util.hpp"

using namespace epf;

namespace {

MarketDataset fixture(int days = 60) { return epf_test::make_test_dataset(days); }

ModelSpec spec_of(Family fam, ExogSpec exog, int hour = 0) {
  ModelSpec s;
  s.family = fam;
  s.exog = exog;
  s.hour = hour;
  return s;
}

}  // namespace

TEST_CASE("design column counts match the model definitions") {
  MarketDataset data = fixture();
  DateRange window{data.start(), data.start() + 39};
  SECTION("full VARX has 161 columns") {
    DesignSystem ds = build_multivariate(data, spec_of(Family::multivariate, ExogSpec::all()), window);
    CHECK(ds.m() == 161);
    CHECK(ds.q() == 24);
    CHECK(ds.columns.size() == 161);
  }
  SECTION("VAR has 86 columns") {
    DesignSystem ds = build_multivariate(data, spec_of(Family::multivariate, ExogSpec::none()), window);
    CHECK(ds.m() == 86);
  }
  SECTION("full ARX has 23 columns, AR has 17") {
    DesignSystem arx = build_univariate(data, spec_of(Family::univariate, ExogSpec::all(), 12), window);
    CHECK(arx.m() == 23);
    CHECK(arx.q() == 1);
    DesignSystem ar = build_univariate(data, spec_of(Family::univariate, ExogSpec::none(), 12), window);
    CHECK(ar.m() == 17);
  }
  SECTION("augmented univariate has 46 columns") {
    DesignSystem ds = build_univariate_augmented(data, spec_of(Family::univariate_augmented, ExogSpec::all(), 5),
                                                 window);
    CHECK(ds.m() == 46);
  }
  SECTION("counting rule holds across random exog subsets") {
    Rng rng(99);
    for (int rep = 0; rep < 20; ++rep) {
      ExogSpec e;
      e.demand = rng.uniform() < 0.5;
      e.wind = rng.uniform() < 0.5;
      e.solar = rng.uniform() < 0.5;
      e.co2 = rng.uniform() < 0.5;
      e.gas = rng.uniform() < 0.5;
      e.coal = rng.uniform() < 0.5;
      DesignSystem mv = build_multivariate(data, spec_of(Family::multivariate, e), window);
      CHECK(mv.m() == 24 * 3 + 14 + e.hourly_count() * 24 + e.fuel_count());
      DesignSystem uv = build_univariate(data, spec_of(Family::univariate, e, 3), window);
      CHECK(uv.m() == 3 + 14 + e.hourly_count() + e.fuel_count());
    }
  }
}

TEST_CASE("design sample size and window handling") {
  MarketDataset data = fixture(410);
  SECTION("n = window length - max lag") {
    DateRange window{data.start(), data.start() + 399};
    DesignSystem ds = build_multivariate(data, spec_of(Family::multivariate, ExogSpec::none()), window);
    CHECK(ds.n() == 393);
    CHECK(ds.dates.front() == window.start + 7);
    CHECK(ds.dates.back() == window.end);
  }
  SECTION("window shorter than the max lag is rejected") {
    DateRange window{data.start(), data.start() + 6};
    CHECK_THROWS_MATCHES(build_multivariate(data, spec_of(Family::multivariate, ExogSpec::none()), window), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == ErrorCode::WindowTooShort;
                         }));
  }
  SECTION("hour out of range is rejected") {
    DateRange window{data.start(), data.start() + 39};
    CHECK_THROWS(build_univariate(data, spec_of(Family::univariate, ExogSpec::none(), 25), window));
  }
  SECTION("solar requested without a solar panel") {
    MarketDataset no_solar = epf_test::make_test_dataset(60, 3, false);
    DateRange window{no_solar.start(), no_solar.start() + 39};
    ExogSpec e;
    e.solar = true;
    CHECK_THROWS_MATCHES(build_multivariate(no_solar, spec_of(Family::multivariate, e), window), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e2) {
                           return e2.code() == ErrorCode::SolarUnavailable;
                         }));
  }
}

TEST_CASE("design rows reproduce the raw panels at the lagged dates") {
  MarketDataset data = fixture(50);
  DateRange window{data.start(), data.start() + 29};
  ModelSpec spec = spec_of(Family::multivariate, ExogSpec::all());
  DesignSystem ds = build_multivariate(data, spec, window);
  for (Eigen::Index i = 0; i < ds.n(); i += 7) {
    Date d = ds.dates[static_cast<size_t>(i)];
    for (Eigen::Index c = 0; c < ds.m(); ++c) {
      const ColumnInfo& ci = ds.cols_info[static_cast<size_t>(c)];
      double expect = 0.0;
      switch (ci.kind) {
        case ColumnKind::price_lag: expect = data.price.at(d - ci.lag, ci.hour); break;
        case ColumnKind::dummy: expect = calendar_dummies(d)(ci.hour - 1); break;
        case ColumnKind::exog_demand: expect = data.demand.at(d, ci.hour); break;
        case ColumnKind::exog_solar: expect = data.solar->at(d, ci.hour); break;
        case ColumnKind::exog_wind: expect = data.wind.at(d, ci.hour); break;
        case ColumnKind::fuel_co2: expect = data.fuels.co2(data.fuels.index_of(d - 1)); break;
        case ColumnKind::fuel_gas: expect = data.fuels.gas(data.fuels.index_of(d - 1)); break;
        case ColumnKind::fuel_coal: expect = data.fuels.coal(data.fuels.index_of(d - 1)); break;
      }
      REQUIRE(ds.X(i, c) == expect);
    }
    for (int h = 1; h <= 24; ++h) REQUIRE(ds.Y(i, h - 1) == data.price.at(d, h));
  }
}

TEST_CASE("sliding the window by one day shifts the rows by one") {
  MarketDataset data = fixture(60);
  ModelSpec spec = spec_of(Family::multivariate, ExogSpec::all());
  DateRange w1{data.start(), data.start() + 39};
  DateRange w2{data.start() + 1, data.start() + 40};
  DesignSystem d1 = build_multivariate(data, spec, w1);
  DesignSystem d2 = build_multivariate(data, spec, w2);
  REQUIRE(d1.n() == d2.n());
  const Eigen::Index n = d1.n();
  CHECK(d1.X.bottomRows(n - 1) == d2.X.topRows(n - 1));
  CHECK(d1.Y.bottomRows(n - 1) == d2.Y.topRows(n - 1));
  CHECK(d2.dates.front() == d1.dates[1]);
}

TEST_CASE("new_regressor_row matches the design row for the same date") {
  MarketDataset data = fixture(40);
  for (ExogSpec e : {ExogSpec::none(), ExogSpec::all()}) {
    ModelSpec spec = spec_of(Family::multivariate, e);
    DateRange window{data.start(), data.start() + 29};
    DesignSystem ds = build_multivariate(data, spec, window);
    Eigen::VectorXd x = new_regressor_row(data, spec, ds.dates.back());
    CHECK(x.transpose() == ds.X.row(ds.n() - 1));
  }
  ModelSpec uni = spec_of(Family::univariate, ExogSpec::all(), 9);
  DateRange window{data.start(), data.start() + 29};
  DesignSystem ds = build_univariate(data, uni, window);
  Eigen::VectorXd x = new_regressor_row(data, uni, ds.dates.back());
  CHECK(x.transpose() == ds.X.row(ds.n() - 1));
}

TEST_CASE("augmented design cross-hour block") {
  MarketDataset data = fixture(40);
  DateRange window{data.start(), data.start() + 29};
  DesignSystem ds = build_univariate_augmented(data, spec_of(Family::univariate_augmented, ExogSpec::all(), 1),
                                               window);
  std::vector<std::string> cross;
  for (size_t c = 23; c < ds.columns.size(); ++c) cross.push_back(ds.columns[c]);
  REQUIRE(cross.size() == 23);
  CHECK(cross.front() == "y_h02_lag1");
  CHECK(cross.back() == "y_h24_lag1");
  for (const auto& label : cross) CHECK(label != "y_h01_lag1");
}

TEST_CASE("residual_correlation") {
  SECTION("unit diagonal and symmetry") {
    Rng rng(5);
    Eigen::MatrixXd res(200, 24);
    for (Eigen::Index i = 0; i < res.rows(); ++i)
      for (Eigen::Index j = 0; j < res.cols(); ++j) res(i, j) = rng.normal();
    Eigen::MatrixXd corr = residual_correlation(res);
    for (int i = 0; i < 24; ++i) CHECK(corr(i, i) == 1.0);
    CHECK(corr == corr.transpose());
    CHECK(corr.cwiseAbs().maxCoeff() <= 1.0);
  }
  SECTION("independent white noise has near-zero off-diagonals") {
    Rng rng(11);
    Eigen::MatrixXd res(10000, 24);
    for (Eigen::Index i = 0; i < res.rows(); ++i)
      for (Eigen::Index j = 0; j < res.cols(); ++j) res(i, j) = rng.normal();
    Eigen::MatrixXd corr = residual_correlation(res);
    for (int i = 0; i < 24; ++i)
      for (int j = 0; j < 24; ++j)
        if (i != j) CHECK(std::abs(corr(i, j)) < 0.05);
  }
  SECTION("a shared shock drives off-diagonals to one") {
    Rng rng(13);
    Eigen::MatrixXd res(500, 24);
    for (Eigen::Index i = 0; i < res.rows(); ++i) {
      double shock = rng.normal();
      for (Eigen::Index j = 0; j < res.cols(); ++j) res(i, j) = shock + 1e-6 * rng.normal();
    }
    Eigen::MatrixXd corr = residual_correlation(res);
    CHECK(corr.minCoeff() > 0.99);
  }
  SECTION("zero-variance series rejected") {
    Eigen::MatrixXd res = Eigen::MatrixXd::Zero(50, 24);
    res.col(0).setLinSpaced(50, 0.0, 1.0);
    CHECK_THROWS_MATCHES(residual_correlation(res), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == ErrorCode::DegenerateSeries;
                         }));
  }
}
