#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epf/backtest.hpp"
#include "epf/config.hpp"
#include "epf/report.hpp"
#include "epf/synthetic.hpp"

namespace epf {

inline constexpr const char* kVersion = "0.1.0";

namespace fsys = std::filesystem;

// ---------------------------------------------------------------------------
// Dataset bundle writers (ingest CSV schemas)

inline void write_panel_wide(const std::string& path, const HourlyPanel& panel) {
  csv::Writer w(path);
  std::vector<std::string> header{"date"};
  for (int h = 1; h <= kHours; ++h) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "h%02d", h);
    header.emplace_back(buf);
  }
  w.row(header);
  for (Eigen::Index i = 0; i < panel.rows(); ++i) {
    std::vector<std::string> cells{panel.dates[static_cast<size_t>(i)].to_string()};
    for (int h = 0; h < kHours; ++h) cells.push_back(csv::format_double(panel.values(i, h)));
    w.row(cells);
  }
}

inline void write_fuels_csv(const std::string& path, const FuelSeries& fuels) {
  csv::Writer w(path);
  w.row({"date", "co2", "gas", "coal"});
  for (size_t i = 0; i < fuels.dates.size(); ++i) {
    auto idx = static_cast<Eigen::Index>(i);
    w.row({fuels.dates[i].to_string(), csv::format_double(fuels.co2(idx)), csv::format_double(fuels.gas(idx)),
           csv::format_double(fuels.coal(idx))});
  }
}

inline void write_dataset_bundle(const std::string& dir, const MarketDataset& data, double jitter_epsilon,
                                 std::uint64_t seed, bool include_solar = true) {
  fsys::create_directories(dir);
  auto p = [&](const std::string& name) { return (fsys::path(dir) / name).string(); };
  write_panel_wide(p("price.csv"), data.price);
  write_panel_wide(p("demand.csv"), data.demand);
  write_panel_wide(p("wind.csv"), data.wind);
  const bool solar = include_solar && data.has_solar();
  if (solar) write_panel_wide(p("solar.csv"), *data.solar);
  write_fuels_csv(p("fuels.csv"), data.fuels);
  json manifest{{"market", data.market},
                {"price", "price.csv"},
                {"demand", "demand.csv"},
                {"wind", "wind.csv"},
                {"fuels", "fuels.csv"},
                {"solar_present", solar},
                {"jitter_epsilon", jitter_epsilon},
                {"seed", seed}};
  if (solar) manifest["solar"] = "solar.csv";
  std::ofstream out(p("manifest.json"), std::ios::binary);
  require(out.good(), ErrorCode::IoError, "cannot write manifest.json in " + dir);
  out << manifest.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Forecast files

inline void write_forecast_csv(const std::string& path, const std::vector<ForecastRecord>& records) {
  csv::Writer w(path);
  w.row({"target_date", "hour", "point", "realized", "scale_hh", "dof"});
  for (const auto& rec : records) {
    for (int h = 0; h < kHours; ++h) {
      std::string dof = rec.density.kind == DensityKind::student_t ? csv::format_double(rec.density.dof) : "";
      w.row({rec.target_date.to_string(), std::to_string(h + 1), csv::format_double(rec.point(h)),
             csv::format_double(rec.realized(h)), csv::format_double(rec.density.scale(h, h)), dof});
    }
  }
}

struct ForecastTable {
  std::string model_id;
  std::vector<Date> dates;
  Eigen::MatrixXd point;     // T x 24
  Eigen::MatrixXd realized;  // T x 24
  Eigen::MatrixXd scale;     // T x 24 marginal scale
  Eigen::MatrixXd dof;       // T x 24, NaN for gaussian densities
};

inline ForecastTable read_forecast_csv(const std::string& path, const std::string& model_id) {
  auto rows = csv::read_rows(path);
  require(!rows.empty(), ErrorCode::MisalignedRuns, path + ": empty forecast file");
  const std::vector<std::string> expect{"target_date", "hour", "point", "realized", "scale_hh", "dof"};
  require(rows.front() == expect, ErrorCode::MisalignedRuns, path + ": unexpected forecast header");
  require((rows.size() - 1) % kHours == 0, ErrorCode::MisalignedRuns, path + ": row count not a multiple of 24");
  const auto T = static_cast<Eigen::Index>((rows.size() - 1) / kHours);
  ForecastTable t;
  t.model_id = model_id;
  t.point.resize(T, kHours);
  t.realized.resize(T, kHours);
  t.scale.resize(T, kHours);
  t.dof.resize(T, kHours);
  for (Eigen::Index d = 0; d < T; ++d) {
    for (int h = 0; h < kHours; ++h) {
      const auto& r = rows[static_cast<size_t>(d * kHours + h) + 1];
      require(r.size() == 6, ErrorCode::MisalignedRuns, path + ": bad forecast row arity");
      Date date = parse_date_or_fail(r[0], path);
      if (h == 0) t.dates.push_back(date);
      require(t.dates.back() == date, ErrorCode::MisalignedRuns, path + ": dates not grouped by day");
      int hour;
      require(csv::parse_int(r[1], hour) && hour == h + 1, ErrorCode::MisalignedRuns,
              path + ": hours not in 1..24 order");
      t.point(d, h) = csv::parse_double_or_fail(r[2], path);
      t.realized(d, h) = csv::parse_double_or_fail(r[3], path);
      t.scale(d, h) = csv::parse_double_or_fail(r[4], path);
      t.dof(d, h) = r[5].empty() ? std::numeric_limits<double>::quiet_NaN() : csv::parse_double_or_fail(r[5], path);
    }
  }
  return t;
}

// Marginal predictive draws for one (record, hour) cell; the same derivation is
// used for the optional draws file and for CRPS scoring, so they agree.
inline Eigen::VectorXd marginal_draws(double mean, double scale_hh, double dof, int d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd out(d);
  const double sd = std::sqrt(std::max(scale_hh, 0.0));
  if (std::isfinite(dof)) {
    for (int i = 0; i < d; ++i) out(i) = mean + sd * rng.student_t(dof);
  } else {
    for (int i = 0; i < d; ++i) out(i) = mean + sd * rng.normal();
  }
  return out;
}

inline std::uint64_t crps_draw_seed(std::uint64_t run_seed, const std::string& model_id, Eigen::Index record,
                                    int hour) {
  return mix_seed({run_seed, hash_tag("crps_draws"), hash_tag(model_id), static_cast<std::uint64_t>(record),
                   static_cast<std::uint64_t>(hour)});
}

// ---------------------------------------------------------------------------
// Commands

struct IngestResult {
  IngestReport report;
  std::string normalized_manifest;
};

// Validates and normalizes a dataset: writes ingest_report.json and a
// normalized wide-CSV bundle under <out>/normalized/.
inline IngestResult cmd_ingest(const std::string& manifest_path, const std::string& out_dir) {
  MarketManifest manifest = read_manifest(manifest_path);
  IngestReport report;
  MarketDataset data = load_market(manifest, &report);
  fsys::create_directories(out_dir);
  {
    std::ofstream out((fsys::path(out_dir) / "ingest_report.json").string(), std::ios::binary);
    require(out.good(), ErrorCode::IoError, "cannot write ingest_report.json");
    out << report.to_json().dump(2) << '\n';
  }
  std::string norm_dir = (fsys::path(out_dir) / "normalized").string();
  write_dataset_bundle(norm_dir, data, manifest.jitter_epsilon, manifest.seed, data.has_solar());
  return {report, (fsys::path(norm_dir) / "manifest.json").string()};
}

// Generates a synthetic market dataset and exports it in the ingest schemas.
inline std::string cmd_synth(const std::string& config_path, const std::string& out_dir,
                             std::optional<std::uint64_t> seed_override = std::nullopt) {
  SynthJob job = read_dgp_config(config_path);
  if (seed_override) job.dgp.seed = *seed_override;
  SyntheticDgp dgp = make_dgp(job.dgp);
  MarketDataset data = generate(dgp, job.days);
  data.market = job.market;
  write_dataset_bundle(out_dir, data, 1e-3, job.dgp.seed, true);
  return (fsys::path(out_dir) / "manifest.json").string();
}

// Runs the rolling-window backtest and writes one forecast CSV per model plus
// a self-describing run manifest.
inline std::string cmd_backtest(const std::string& config_path, const std::string& out_dir, int jobs = 1,
                                std::optional<std::uint64_t> seed_override = std::nullopt) {
  RunConfig cfg = read_run_config(config_path);
  if (seed_override) {
    cfg.seed = *seed_override;
    cfg.raw["seed"] = *seed_override;
  }
  MarketManifest manifest = read_manifest(cfg.manifest_path);
  MarketDataset data = load_market(manifest);
  BacktestResult result = run_backtest(data, to_plan(cfg), jobs);

  fsys::create_directories(out_dir);
  fsys::create_directories((fsys::path(out_dir) / "forecasts").string());
  for (size_t mi = 0; mi < result.models.size(); ++mi) {
    std::string path = (fsys::path(out_dir) / "forecasts" / (result.models[mi].id + ".csv")).string();
    write_forecast_csv(path, result.records[mi]);
  }
  if (cfg.metrics.emit_draws) {
    fsys::create_directories((fsys::path(out_dir) / "draws").string());
    for (size_t mi = 0; mi < result.models.size(); ++mi) {
      const auto& records = result.records[mi];
      csv::Writer w((fsys::path(out_dir) / "draws" / (result.models[mi].id + ".csv")).string());
      w.row({"target_date", "hour", "draw", "value"});
      for (size_t ri = 0; ri < records.size(); ++ri) {
        const auto& rec = records[ri];
        for (int h = 0; h < kHours; ++h) {
          double dof = rec.density.kind == DensityKind::student_t ? rec.density.dof
                                                                  : std::numeric_limits<double>::infinity();
          Eigen::VectorXd draws =
              marginal_draws(rec.point(h), rec.density.scale(h, h), dof, cfg.draws,
                             crps_draw_seed(cfg.seed, result.models[mi].id, static_cast<Eigen::Index>(ri), h + 1));
          for (int k = 0; k < draws.size(); ++k)
            w.row({rec.target_date.to_string(), std::to_string(h + 1), std::to_string(k),
                   csv::format_double(draws(k))});
        }
      }
    }
  }
  if (cfg.export_coefficients && !result.eval_dates.empty()) {
    fsys::create_directories((fsys::path(out_dir) / "coefficients").string());
    const Date first_target = result.eval_dates.front();
    const DateRange window{first_target - cfg.window_days, first_target - 1};
    for (const auto& m : cfg.models) {
      if (m.spec.family != Family::multivariate) continue;
      DesignSystem ds = build_design(data, m.spec, window);
      Eigen::MatrixXd phi;
      if (m.spec.estimator == Estimator::least_squares) {
        phi = ls_fit(ds, cfg.solver).Phi;
      } else {
        phi = nw_posterior(ds, minnesota_prior(ds, cfg.prior)).Mn;
      }
      std::ofstream out((fsys::path(out_dir) / "coefficients" / (m.id + "_first_window.csv")).string(),
                        std::ios::binary);
      export_coefficients(out, ds.columns, ds.eq_hours, phi);
    }
  }

  json run_manifest{{"version", kVersion},
                    {"config_hash", config_hash_hex(cfg.raw)},
                    {"seed", cfg.seed},
                    {"config", cfg.raw},
                    {"eval_start", cfg.eval_start.to_string()},
                    {"eval_end", cfg.eval_end.to_string()},
                    {"records_per_model", static_cast<int>(result.eval_dates.size())}};
  json ids = json::array();
  for (const auto& m : result.models) ids.push_back(m.id);
  run_manifest["models"] = ids;
  std::string manifest_out = (fsys::path(out_dir) / "run_manifest.json").string();
  std::ofstream out(manifest_out, std::ios::binary);
  require(out.good(), ErrorCode::IoError, "cannot write run_manifest.json");
  out << run_manifest.dump(2) << '\n';
  return manifest_out;
}

// Scores a finished run directory: RMSE/CRPS tables, DM stars against the
// designated benchmarks and MCS membership, written under <run>/reports/.
inline EvaluationReport cmd_evaluate(const std::string& run_dir) {
  json run_manifest = detail::read_json_file((fsys::path(run_dir) / "run_manifest.json").string());
  require(run_manifest.contains("config"), ErrorCode::MisalignedRuns, "run manifest lacks embedded config");
  RunConfig cfg = parse_run_config(run_manifest.at("config"), (fsys::path(run_dir) / "run_manifest.json").string());

  std::vector<ModelLosses> losses;
  std::vector<Date> ref_dates;
  for (const auto& m : cfg.models) {
    std::string path = (fsys::path(run_dir) / "forecasts" / (m.id + ".csv")).string();
    ForecastTable table = read_forecast_csv(path, m.id);
    if (losses.empty()) {
      ref_dates = table.dates;
    } else {
      require(table.dates == ref_dates, ErrorCode::MisalignedRuns,
              "forecast files disagree on evaluation dates (model " + m.id + ")");
    }
    ModelLosses ml;
    ml.id = m.id;
    ml.family = m.spec.family;
    ml.benchmark = m.benchmark;
    Eigen::MatrixXd err = table.point - table.realized;
    ml.sqe = err.cwiseProduct(err);
    const Eigen::Index T = table.point.rows();
    ml.crps.resize(T, kHours);
    for (Eigen::Index t = 0; t < T; ++t) {
      for (int h = 0; h < kHours; ++h) {
        if (std::isnan(table.dof(t, h))) {
          ml.crps(t, h) = crps_gaussian(table.point(t, h), std::sqrt(std::max(table.scale(t, h), 0.0)),
                                        table.realized(t, h));
        } else {
          Eigen::VectorXd draws = marginal_draws(table.point(t, h), table.scale(t, h), table.dof(t, h), cfg.draws,
                                                 crps_draw_seed(cfg.seed, m.id, t, h + 1));
          ml.crps(t, h) = crps_sample(draws, table.realized(t, h));
        }
      }
    }
    losses.push_back(std::move(ml));
  }
  EvaluationReport rep = evaluate_models(losses, cfg.metrics, cfg.seed);
  write_report_files((fsys::path(run_dir) / "reports").string(), rep);
  return rep;
}

// ---------------------------------------------------------------------------
// plotdata: tidy aggregates for external plotting

namespace detail {

inline void write_profile(csv::Writer& w, const HourlyPanel& panel, const std::string& series,
                          const std::string& group_kind) {
  std::map<int, std::pair<Eigen::VectorXd, long>> groups;  // key -> (sum per hour, count)
  for (Eigen::Index i = 0; i < panel.rows(); ++i) {
    const Date d = panel.dates[static_cast<size_t>(i)];
    int key;
    if (group_kind == "month")
      key = d.month();
    else if (group_kind == "dow")
      key = d.iso_weekday();
    else
      key = d.year();
    auto it = groups.find(key);
    if (it == groups.end()) it = groups.emplace(key, std::make_pair(Eigen::VectorXd::Zero(kHours), 0L)).first;
    it->second.first += panel.values.row(i).transpose();
    it->second.second += 1;
  }
  for (const auto& [key, acc] : groups) {
    for (int h = 0; h < kHours; ++h)
      w.row({series, std::to_string(key), std::to_string(h + 1),
             csv::format_double(acc.first(h) / static_cast<double>(acc.second))});
  }
}

}  // namespace detail

// Monthly / day-of-week / yearly intra-daily profiles as tidy CSVs. `source`
// is a market manifest path or a run directory (whose manifest is reused).
inline void cmd_plotdata(const std::string& source, const std::string& out_dir) {
  std::string manifest_path = source;
  if (fsys::is_directory(source)) {
    json run_manifest = detail::read_json_file((fsys::path(source) / "run_manifest.json").string());
    require(run_manifest.contains("config") && run_manifest.at("config").contains("manifest"),
            ErrorCode::ConfigError, source + ": run manifest lacks a dataset reference");
    manifest_path = run_manifest.at("config").at("manifest").get<std::string>();
  }
  MarketManifest manifest = read_manifest(manifest_path);
  MarketDataset data = load_market(manifest);
  fsys::create_directories(out_dir);
  for (const std::string kind : {"month", "dow", "year"}) {
    std::string name = kind == "month" ? "profiles_monthly.csv"
                       : kind == "dow" ? "profiles_dow.csv"
                                       : "profiles_yearly.csv";
    csv::Writer w((fsys::path(out_dir) / name).string());
    w.row({"series", kind == "month" ? "month" : kind == "dow" ? "weekday" : "year", "hour", "value"});
    detail::write_profile(w, data.price, "price", kind);
    detail::write_profile(w, data.demand, "demand", kind);
    detail::write_profile(w, data.wind, "wind", kind);
    if (data.solar) detail::write_profile(w, *data.solar, "solar", kind);
  }
}

}  // namespace epf
