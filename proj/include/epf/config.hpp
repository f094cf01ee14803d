#pragma once

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "epf/backtest.hpp"
#include "epf/design.hpp"
#include "epf/error.hpp"
#include "epf/ingest.hpp"
#include "epf/metrics.hpp"
#include "epf/synthetic.hpp"

namespace epf {

using json = nlohmann::json;

namespace detail {

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoError, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, path + ": " + e.what());
  }
  return j;
}

template <typename T>
T jget(const json& j, const std::string& key, const T& fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, "field '" + key + "': " + e.what());
  }
}

template <typename T>
T jreq(const json& j, const std::string& key, const std::string& context) {
  require(j.contains(key) && !j.at(key).is_null(), ErrorCode::ConfigError,
          context + ": missing required field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, context + ": field '" + key + "': " + e.what());
  }
}

inline Date jdate(const json& j, const std::string& key, const std::string& context) {
  auto s = jreq<std::string>(j, key, context);
  auto d = Date::parse(s);
  require(d.has_value(), ErrorCode::ConfigError, context + ": field '" + key + "' is not an ISO date: " + s);
  return *d;
}

inline std::string resolve_path(const std::string& path, const std::string& base_file) {
  std::filesystem::path p(path);
  if (p.is_absolute()) return p.lexically_normal().string();
  return (std::filesystem::path(base_file).parent_path() / p).lexically_normal().string();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Market manifest

struct PanelSource {
  std::string path;
  PanelLayout layout = PanelLayout::wide;
};

struct MarketManifest {
  std::string market;
  PanelSource price;
  PanelSource demand;
  PanelSource wind;
  std::optional<PanelSource> solar;
  std::string fuels_path;
  double jitter_epsilon = 1e-3;
  std::uint64_t seed = 0;
};

namespace detail {

inline PanelSource parse_panel_source(const json& j, const std::string& manifest_path, const std::string& name) {
  PanelSource src;
  if (j.is_string()) {
    src.path = j.get<std::string>();
  } else if (j.is_object()) {
    src.path = jreq<std::string>(j, "path", name);
    std::string layout = jget<std::string>(j, "layout", "wide");
    if (layout == "wide")
      src.layout = PanelLayout::wide;
    else if (layout == "long")
      src.layout = PanelLayout::long_;
    else
      fail(ErrorCode::ConfigError, name + ": layout must be 'wide' or 'long', got '" + layout + "'");
  } else {
    fail(ErrorCode::ConfigError, name + ": expected a path string or {path, layout} object");
  }
  src.path = resolve_path(src.path, manifest_path);
  return src;
}

}  // namespace detail

inline MarketManifest read_manifest(const std::string& path) {
  json j = detail::read_json_file(path);
  MarketManifest m;
  m.market = detail::jreq<std::string>(j, "market", path);
  m.price = detail::parse_panel_source(j.at("price"), path, "price");
  m.demand = detail::parse_panel_source(j.at("demand"), path, "demand");
  m.wind = detail::parse_panel_source(j.at("wind"), path, "wind");
  bool solar_present = detail::jget<bool>(j, "solar_present", j.contains("solar") && !j.at("solar").is_null());
  if (solar_present) {
    require(j.contains("solar") && !j.at("solar").is_null(), ErrorCode::ConfigError,
            path + ": solar_present is true but no solar source given");
    m.solar = detail::parse_panel_source(j.at("solar"), path, "solar");
  }
  m.fuels_path = detail::resolve_path(detail::jreq<std::string>(j, "fuels", path), path);
  m.jitter_epsilon = detail::jget<double>(j, "jitter_epsilon", 1e-3);
  require(m.jitter_epsilon > 0.0, ErrorCode::ConfigError, path + ": jitter_epsilon must be positive");
  m.seed = detail::jget<std::uint64_t>(j, "seed", 0);
  return m;
}

struct IngestReport {
  std::string market;
  Date start;
  Date end;
  long days = 0;
  bool solar_present = false;
  int dst_dropped_hours = 0;
  int dst_interpolated_hours = 0;
  long trimmed_days = 0;  // rows dropped to align panels on a common range
  int fuel_cells_interpolated = 0;
  long solar_cells_jittered = 0;

  json to_json() const {
    return json{{"market", market},
                {"start", start.to_string()},
                {"end", end.to_string()},
                {"days", days},
                {"solar_present", solar_present},
                {"dst_dropped_hours", dst_dropped_hours},
                {"dst_interpolated_hours", dst_interpolated_hours},
                {"trimmed_days", trimmed_days},
                {"fuel_cells_interpolated", fuel_cells_interpolated},
                {"solar_cells_jittered", solar_cells_jittered}};
  }
};

namespace detail {

inline HourlyPanel load_source(const PanelSource& src, SeriesRole role, DstRepairs* repairs) {
  if (src.layout == PanelLayout::wide) return load_panel(src.path, PanelLayout::wide, role);
  // long inputs go through the clock-change repair (identity on clean data)
  auto records = read_long_records(src.path);
  DstRepairs r;
  HourlyPanel p = dst_adjust(records, role, &r);
  if (repairs) {
    repairs->dropped_hours += r.dropped_hours;
    repairs->interpolated_hours += r.interpolated_hours;
  }
  return p;
}

inline HourlyPanel trim_panel(const HourlyPanel& p, DateRange range) {
  HourlyPanel out;
  out.label = p.label;
  const Eigen::Index first = p.index_of(range.start);
  const Eigen::Index n = range.length();
  out.dates = date_sequence(range.start, static_cast<int>(n));
  out.values = p.values.middleRows(first, n);
  return out;
}

}  // namespace detail

// Loads, repairs, aligns and jitters a full market dataset per the manifest.
inline MarketDataset load_market(const MarketManifest& m, IngestReport* report = nullptr) {
  IngestReport rep;
  rep.market = m.market;
  rep.solar_present = m.solar.has_value();
  DstRepairs repairs;
  HourlyPanel price = detail::load_source(m.price, SeriesRole::price, &repairs);
  HourlyPanel demand = detail::load_source(m.demand, SeriesRole::demand, &repairs);
  HourlyPanel wind = detail::load_source(m.wind, SeriesRole::wind, &repairs);
  std::optional<HourlyPanel> solar;
  if (m.solar) solar = detail::load_source(*m.solar, SeriesRole::solar, &repairs);
  rep.dst_dropped_hours = repairs.dropped_hours;
  rep.dst_interpolated_hours = repairs.interpolated_hours;

  Date start = std::max({price.start(), demand.start(), wind.start()});
  Date end = std::min({price.end(), demand.end(), wind.end()});
  if (solar) {
    start = std::max(start, solar->start());
    end = std::min(end, solar->end());
  }
  require(start <= end, ErrorCode::ConfigError, "panels share no common date range");
  DateRange range{start, end};
  long total_before = price.rows() + demand.rows() + wind.rows() + (solar ? solar->rows() : 0);

  MarketDataset data;
  data.market = m.market;
  data.price = detail::trim_panel(price, range);
  data.demand = detail::trim_panel(demand, range);
  data.wind = detail::trim_panel(wind, range);
  if (solar) data.solar = detail::trim_panel(*solar, range);
  rep.trimmed_days = total_before - (data.price.rows() + data.demand.rows() + data.wind.rows() +
                                     (data.solar ? data.solar->rows() : 0));

  auto fuel_records = read_fuel_records(m.fuels_path);
  data.fuels = interpolate_fuels(fuel_records, range, &rep.fuel_cells_interpolated);

  if (data.solar) data.solar = jitter_solar(*data.solar, m.jitter_epsilon, m.seed, &rep.solar_cells_jittered);

  data.check_invariants();
  rep.start = range.start;
  rep.end = range.end;
  rep.days = data.days();
  if (report) *report = rep;
  return data;
}

// ---------------------------------------------------------------------------
// Model specs and run configuration

inline ExogSpec parse_exog_list(const json& arr, const std::string& context) {
  ExogSpec exog;
  require(arr.is_array(), ErrorCode::ConfigError, context + ": exog must be a list");
  for (const auto& item : arr) {
    std::string tok = item.get<std::string>();
    if (tok == "demand")
      exog.demand = true;
    else if (tok == "wind")
      exog.wind = true;
    else if (tok == "solar")
      exog.solar = true;
    else if (tok == "co2")
      exog.co2 = true;
    else if (tok == "gas")
      exog.gas = true;
    else if (tok == "coal")
      exog.coal = true;
    else if (tok == "fuels")
      exog.co2 = exog.gas = exog.coal = true;
    else
      fail(ErrorCode::ConfigError, context + ": unknown exogenous variable '" + tok + "'");
  }
  return exog;
}

inline std::vector<std::string> exog_to_list(const ExogSpec& e) {
  std::vector<std::string> out;
  if (e.demand) out.push_back("demand");
  if (e.wind) out.push_back("wind");
  if (e.solar) out.push_back("solar");
  if (e.co2) out.push_back("co2");
  if (e.gas) out.push_back("gas");
  if (e.coal) out.push_back("coal");
  return out;
}

enum class BenchmarkTag { none, univariate, multivariate };

struct RunModel {
  std::string id;
  ModelSpec spec;
  BenchmarkTag benchmark = BenchmarkTag::none;
};

struct MetricsOptions {
  double alpha = 0.10;
  McsConfig mcs;
  HacConfig hac;
  bool emit_draws = false;
};

struct RunConfig {
  std::string manifest_path;
  int window_days = 0;
  Date eval_start;
  Date eval_end;
  int draws = 2000;
  std::uint64_t seed = 0;
  std::vector<RunModel> models;
  MetricsOptions metrics;
  PriorConfig prior;
  SolverConfig solver;
  bool export_coefficients = false;
  json raw;  // resolved config as written to the run manifest
};

inline RunModel parse_run_model(const json& j, const std::string& context) {
  RunModel m;
  m.id = detail::jreq<std::string>(j, "id", context);
  std::string fam = detail::jreq<std::string>(j, "family", m.id);
  if (fam == "univariate")
    m.spec.family = Family::univariate;
  else if (fam == "univariate-augmented")
    m.spec.family = Family::univariate_augmented;
  else if (fam == "multivariate")
    m.spec.family = Family::multivariate;
  else
    fail(ErrorCode::ConfigError, m.id + ": unknown family '" + fam + "'");
  std::string est = detail::jreq<std::string>(j, "estimator", m.id);
  if (est == "least-squares")
    m.spec.estimator = Estimator::least_squares;
  else if (est == "bayesian")
    m.spec.estimator = Estimator::bayesian;
  else
    fail(ErrorCode::ConfigError, m.id + ": unknown estimator '" + est + "'");
  if (j.contains("exog")) m.spec.exog = parse_exog_list(j.at("exog"), m.id);
  if (j.contains("lags")) {
    m.spec.lags.lags = j.at("lags").get<std::vector<int>>();
    m.spec.lags.validate();
  }
  std::string bench = detail::jget<std::string>(j, "benchmark", "");
  if (bench == "univariate")
    m.benchmark = BenchmarkTag::univariate;
  else if (bench == "multivariate")
    m.benchmark = BenchmarkTag::multivariate;
  else
    require(bench.empty(), ErrorCode::ConfigError, m.id + ": benchmark must be 'univariate' or 'multivariate'");
  return m;
}

inline void validate_run_config(const RunConfig& cfg) {
  require(!cfg.models.empty(), ErrorCode::ConfigError, "run config lists no models");
  int uni_bench = 0, multi_bench = 0;
  for (size_t i = 0; i < cfg.models.size(); ++i) {
    const auto& m = cfg.models[i];
    require(!m.id.empty(), ErrorCode::ConfigError, "model ids must be non-empty");
    for (size_t k = i + 1; k < cfg.models.size(); ++k)
      require(cfg.models[k].id != m.id, ErrorCode::ConfigError, "duplicate model id '" + m.id + "'");
    if (m.benchmark == BenchmarkTag::univariate) {
      ++uni_bench;
      require(m.spec.family == Family::univariate, ErrorCode::ConfigError,
              "univariate benchmark '" + m.id + "' must have family 'univariate'");
      require(!m.spec.exog.any(), ErrorCode::ConfigError,
              "benchmark '" + m.id + "' must have no exogenous variables");
    }
    if (m.benchmark == BenchmarkTag::multivariate) {
      ++multi_bench;
      require(m.spec.family == Family::multivariate, ErrorCode::ConfigError,
              "multivariate benchmark '" + m.id + "' must have family 'multivariate'");
      require(!m.spec.exog.any(), ErrorCode::ConfigError,
              "benchmark '" + m.id + "' must have no exogenous variables");
    }
  }
  require(uni_bench == 1, ErrorCode::ConfigError,
          "exactly one model must carry benchmark: 'univariate' (got " + std::to_string(uni_bench) + ")");
  require(multi_bench == 1, ErrorCode::ConfigError,
          "exactly one model must carry benchmark: 'multivariate' (got " + std::to_string(multi_bench) + ")");
  require(cfg.window_days >= 8, ErrorCode::ConfigError, "window_days must be at least 8");
  require(cfg.eval_start <= cfg.eval_end, ErrorCode::ConfigError, "eval_start after eval_end");
  require(cfg.draws >= 2, ErrorCode::ConfigError, "draws must be at least 2");
  require(cfg.metrics.alpha > 0.0 && cfg.metrics.alpha < 1.0, ErrorCode::ConfigError, "alpha must be in (0,1)");
}

inline RunConfig parse_run_config(const json& j, const std::string& path) {
  RunConfig cfg;
  cfg.manifest_path = detail::resolve_path(detail::jreq<std::string>(j, "manifest", path), path);
  cfg.window_days = detail::jreq<int>(j, "window_days", path);
  cfg.eval_start = detail::jdate(j, "eval_start", path);
  cfg.eval_end = detail::jdate(j, "eval_end", path);
  cfg.draws = detail::jget<int>(j, "draws", 2000);
  cfg.seed = detail::jget<std::uint64_t>(j, "seed", 0);
  require(j.contains("models") && j.at("models").is_array(), ErrorCode::ConfigError,
          path + ": missing 'models' list");
  for (const auto& mj : j.at("models")) cfg.models.push_back(parse_run_model(mj, path));
  if (j.contains("metrics")) {
    const auto& mj = j.at("metrics");
    cfg.metrics.alpha = detail::jget<double>(mj, "alpha", 0.10);
    cfg.metrics.mcs.bootstrap = detail::jget<int>(mj, "mcs_bootstrap", 5000);
    cfg.metrics.mcs.block_length = detail::jget<int>(mj, "mcs_block_length", 0);
    cfg.metrics.hac.prewhiten = detail::jget<bool>(mj, "dm_prewhiten", true);
    cfg.metrics.hac.bandwidth = detail::jget<double>(mj, "dm_bandwidth", 0.0);
    cfg.metrics.emit_draws = detail::jget<bool>(mj, "emit_draws", false);
  }
  if (j.contains("prior")) {
    const auto& pj = j.at("prior");
    cfg.prior.delta = detail::jget<double>(pj, "delta", 0.9);
    cfg.prior.lambda = detail::jget<double>(pj, "lambda", 0.2);
    cfg.prior.exog_kappa = detail::jget<double>(pj, "exog_kappa", 10.0);
    cfg.prior.nu0_offset = detail::jget<double>(pj, "nu0_offset", 2.0);
    cfg.prior.variance_floor = detail::jget<double>(pj, "variance_floor", 1e-6);
  }
  if (j.contains("solver")) {
    const auto& sj = j.at("solver");
    cfg.solver.condition_limit = detail::jget<double>(sj, "condition_limit", 1e12);
    cfg.solver.normal_equation_limit = detail::jget<double>(sj, "normal_equation_limit", 1e6);
  }
  cfg.export_coefficients = detail::jget<bool>(j, "export_coefficients", false);
  cfg.raw = j;
  cfg.raw["manifest"] = cfg.manifest_path;
  validate_run_config(cfg);
  return cfg;
}

inline RunConfig read_run_config(const std::string& path) {
  return parse_run_config(detail::read_json_file(path), path);
}

inline BacktestPlan to_plan(const RunConfig& cfg) {
  BacktestPlan plan;
  for (const auto& m : cfg.models) plan.models.push_back({m.id, m.spec});
  plan.window_days = cfg.window_days;
  plan.eval_start = cfg.eval_start;
  plan.eval_end = cfg.eval_end;
  plan.draws = cfg.draws;
  plan.seed = cfg.seed;
  plan.prior = cfg.prior;
  plan.solver = cfg.solver;
  return plan;
}

// ---------------------------------------------------------------------------
// Synthetic DGP configuration

struct SynthJob {
  SyntheticDgpConfig dgp;
  int days = 0;
  std::string market = "synthetic";
};

inline SynthJob read_dgp_config(const std::string& path) {
  json j = detail::read_json_file(path);
  SynthJob job;
  job.days = detail::jreq<int>(j, "days", path);
  job.market = detail::jget<std::string>(j, "market", "synthetic");
  auto& c = job.dgp;
  if (j.contains("start_date")) c.start_date = detail::jdate(j, "start_date", path);
  if (j.contains("lags")) {
    c.lags.lags = j.at("lags").get<std::vector<int>>();
    c.lags.validate();
  }
  if (j.contains("exog")) c.exog = parse_exog_list(j.at("exog"), path);
  c.ar_total = detail::jget<double>(j, "ar_total", c.ar_total);
  c.price_sigma = detail::jget<double>(j, "price_sigma", c.price_sigma);
  c.price_corr = detail::jget<double>(j, "price_corr", c.price_corr);
  c.price_base = detail::jget<double>(j, "price_base", c.price_base);
  c.dummy_scale = detail::jget<double>(j, "dummy_scale", c.dummy_scale);
  c.demand_beta = detail::jget<double>(j, "demand_beta", c.demand_beta);
  c.wind_beta = detail::jget<double>(j, "wind_beta", c.wind_beta);
  c.solar_beta = detail::jget<double>(j, "solar_beta", c.solar_beta);
  c.fuel_beta = detail::jget<double>(j, "fuel_beta", c.fuel_beta);
  if (j.contains("daylight")) {
    auto hours = j.at("daylight").get<std::vector<int>>();
    require(hours.size() == 2, ErrorCode::ConfigError, path + ": daylight must be [start_hour, end_hour]");
    c.daylight_start = hours[0];
    c.daylight_end = hours[1];
  }
  c.seed = detail::jget<std::uint64_t>(j, "seed", 1);
  return job;
}

// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a_hash(const std::string& s) { return hash_tag(s); }

inline std::string config_hash_hex(const json& j) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a_hash(j.dump())));
  return buf;
}

}  // namespace epf
