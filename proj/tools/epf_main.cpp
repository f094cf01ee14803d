#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "epf/epf.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"epf: hourly day-ahead electricity price forecasting and backtesting"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string run_dir;
  std::string source;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::uint64_t seed_value = 0;
  bool seed_set = false;

  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed_value, "override the configured RNG seed")->each([&](const std::string&) {
      seed_set = true;
    });
  };

  auto* ingest = app.add_subcommand("ingest", "validate and normalize a market dataset");
  ingest->add_option("--config", config_path, "market manifest (JSON)")->required();
  ingest->add_option("--out", out_dir, "output directory");

  auto* synth = app.add_subcommand("synth", "generate a synthetic market dataset");
  synth->add_option("--config", config_path, "DGP config (JSON)")->required();
  synth->add_option("--out", out_dir, "output directory");
  add_seed(synth);

  auto* backtest = app.add_subcommand("backtest", "run the rolling-window forecasting protocol");
  backtest->add_option("--config", config_path, "run config (JSON)")->required();
  backtest->add_option("--out", out_dir, "run output directory");
  backtest->add_option("--jobs", jobs, "parallel worker threads")->check(CLI::PositiveNumber);
  add_seed(backtest);

  auto* evaluate = app.add_subcommand("evaluate", "score a finished run directory");
  evaluate->add_option("run_dir", run_dir, "run directory produced by 'backtest'")->required();

  auto* plotdata = app.add_subcommand("plotdata", "emit tidy profile CSVs for plotting");
  plotdata->add_option("source", source, "market manifest path or run directory")->required();
  plotdata->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);
  if (seed_set) seed = seed_value;

  if (ingest->parsed()) {
    auto res = epf::cmd_ingest(config_path, out_dir);
    std::printf("market %s: %ld days %s..%s, solar=%s\n", res.report.market.c_str(), res.report.days,
                res.report.start.to_string().c_str(), res.report.end.to_string().c_str(),
                res.report.solar_present ? "yes" : "no");
    std::printf("repairs: %d dropped hours, %d interpolated hours, %d fuel cells filled, %ld solar zeros jittered\n",
                res.report.dst_dropped_hours, res.report.dst_interpolated_hours,
                res.report.fuel_cells_interpolated, res.report.solar_cells_jittered);
    std::printf("normalized bundle: %s\n", res.normalized_manifest.c_str());
  } else if (synth->parsed()) {
    std::string manifest = epf::cmd_synth(config_path, out_dir, seed);
    std::printf("dataset written: %s\n", manifest.c_str());
  } else if (backtest->parsed()) {
    std::string manifest = epf::cmd_backtest(config_path, out_dir, jobs, seed);
    std::printf("run written: %s\n", manifest.c_str());
  } else if (evaluate->parsed()) {
    epf::EvaluationReport rep = epf::cmd_evaluate(run_dir);
    std::printf("evaluated %zu models; reports under %s/reports\n", rep.model_ids.size(), run_dir.c_str());
  } else if (plotdata->parsed()) {
    epf::cmd_plotdata(source, out_dir);
    std::printf("profiles written under %s\n", out_dir.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const epf::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.is_config_error() ? 2 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
