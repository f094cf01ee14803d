#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "epf/epf.hpp"

namespace epf_test {

// Self-cleaning temporary directory for file-based fixtures.
class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    static std::atomic<unsigned> counter{0};
    auto pid = static_cast<unsigned long>(::getpid());
    path_ = base / ("epf_test_" + std::to_string(pid) + "_" + std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string dir() const { return path_.string(); }

  std::string write(const std::string& name, const std::string& content) const {
    auto p = file(name);
    std::filesystem::create_directories(std::filesystem::path(p).parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
  }

 private:
  std::filesystem::path path_;
};

// Small in-memory dataset with pseudo-random but deterministic panels; solar
// has exact zeros outside hours 8..18.
inline epf::MarketDataset make_test_dataset(int days, std::uint64_t seed = 7, bool with_solar = true,
                                            epf::Date start = epf::Date::from_ymd(2015, 1, 1)) {
  using namespace epf;
  Rng rng(seed);
  MarketDataset data;
  data.market = "test";
  auto dates = date_sequence(start, days);
  auto make_panel = [&](SeriesRole role, double base, double spread) {
    HourlyPanel p;
    p.label = role;
    p.dates = dates;
    p.values.resize(days, kHours);
    for (int t = 0; t < days; ++t)
      for (int h = 0; h < kHours; ++h) p.values(t, h) = base + spread * rng.uniform(-1.0, 1.0);
    return p;
  };
  data.price = make_panel(SeriesRole::price, 40.0, 10.0);
  data.demand = make_panel(SeriesRole::demand, 50.0, 8.0);
  data.wind = make_panel(SeriesRole::wind, 12.0, 6.0);
  if (with_solar) {
    HourlyPanel solar = make_panel(SeriesRole::solar, 0.0, 0.0);
    for (int t = 0; t < days; ++t)
      for (int h = 8; h <= 18; ++h) solar.values(t, h - 1) = 5.0 + 3.0 * rng.uniform();
    data.solar = solar;
  }
  data.fuels.dates = dates;
  data.fuels.co2.resize(days);
  data.fuels.gas.resize(days);
  data.fuels.coal.resize(days);
  for (int t = 0; t < days; ++t) {
    data.fuels.co2(t) = 15.0 + rng.uniform();
    data.fuels.gas(t) = 20.0 + rng.uniform();
    data.fuels.coal(t) = 10.0 + rng.uniform();
  }
  data.check_invariants();
  return data;
}

}  // namespace epf_test
