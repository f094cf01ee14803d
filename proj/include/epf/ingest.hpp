#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epf/csv.hpp"
#include "epf/date.hpp"
#include "epf/error.hpp"
#include "epf/rng.hpp"

namespace epf {

inline constexpr int kHours = 24;

enum class SeriesRole { price, demand, wind, solar };

inline const char* series_role_name(SeriesRole r) {
  switch (r) {
    case SeriesRole::price: return "price";
    case SeriesRole::demand: return "demand";
    case SeriesRole::wind: return "wind";
    case SeriesRole::solar: return "solar";
  }
  return "?";
}

// One hourly series at daily frequency: row t holds the 24 hourly values of day t.
struct HourlyPanel {
  std::vector<Date> dates;     // strictly increasing, consecutive
  Eigen::MatrixXd values;      // T x 24, no missing entries
  SeriesRole label = SeriesRole::price;

  Eigen::Index rows() const { return values.rows(); }
  Date start() const { return dates.front(); }
  Date end() const { return dates.back(); }
  DateRange range() const { return {dates.front(), dates.back()}; }

  Eigen::Index index_of(Date d) const {
    if (dates.empty() || d < dates.front() || d > dates.back()) [[unlikely]]
      fail(ErrorCode::PlanOutOfRange, "date " + d.to_string() + " outside panel range");
    return d - dates.front();
  }
  // hour is 1-based
  double at(Date d, int hour) const { return values(index_of(d), hour - 1); }

  void check_invariants() const {
    require(static_cast<Eigen::Index>(dates.size()) == values.rows(), ErrorCode::DimensionMismatch,
            "panel dates/values row mismatch");
    require(values.cols() == kHours, ErrorCode::DimensionMismatch, "panel must have 24 columns");
    for (size_t i = 1; i < dates.size(); ++i)
      require(dates[i] - dates[i - 1] == 1, ErrorCode::NonContiguousDates,
              "panel dates must be consecutive near " + dates[i].to_string());
    require(values.allFinite(), ErrorCode::NonNumericValue, "panel contains non-finite entries");
  }
};

// Daily fuel settlement prices, aligned one-to-one with the panel dates.
struct FuelSeries {
  std::vector<Date> dates;
  Eigen::VectorXd co2;
  Eigen::VectorXd gas;
  Eigen::VectorXd coal;

  Eigen::Index index_of(Date d) const {
    if (dates.empty() || d < dates.front() || d > dates.back()) [[unlikely]]
      fail(ErrorCode::PlanOutOfRange, "date " + d.to_string() + " outside fuel range");
    return d - dates.front();
  }
};

struct MarketDataset {
  HourlyPanel price;
  HourlyPanel demand;
  HourlyPanel wind;
  std::optional<HourlyPanel> solar;
  FuelSeries fuels;
  std::string market;

  bool has_solar() const { return solar.has_value(); }
  Date start() const { return price.start(); }
  Date end() const { return price.end(); }
  DateRange range() const { return price.range(); }
  Eigen::Index days() const { return price.rows(); }

  void check_invariants() const {
    price.check_invariants();
    demand.check_invariants();
    wind.check_invariants();
    if (solar) solar->check_invariants();
    auto same_index = [&](const std::vector<Date>& d, const char* who) {
      require(d == price.dates, ErrorCode::NonContiguousDates,
              std::string(who) + " date index differs from price panel");
    };
    same_index(demand.dates, "demand");
    same_index(wind.dates, "wind");
    if (solar) same_index(solar->dates, "solar");
    same_index(fuels.dates, "fuels");
  }
};

// ---------------------------------------------------------------------------
// Raw record parsing

struct RawHourRecord {
  Date date;
  int hour;   // 1..25 (25 only on clock-change days)
  double value;
};

inline std::vector<RawHourRecord> read_long_records(const std::string& path) {
  auto rows = csv::read_rows(path);
  require(!rows.empty(), ErrorCode::MissingColumn, path + ": empty file");
  const auto& header = rows.front();
  require(header.size() == 3 && header[0] == "date" && header[1] == "hour" && header[2] == "value",
          ErrorCode::MissingColumn, path + ": expected header 'date,hour,value'");
  std::vector<RawHourRecord> out;
  out.reserve(rows.size() - 1);
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    require(r.size() == 3, ErrorCode::MissingColumn, path + ": row " + std::to_string(i + 1) + " has wrong arity");
    Date d = parse_date_or_fail(r[0], path);
    int hour = 0;
    require(csv::parse_int(r[1], hour) && hour >= 1 && hour <= 25, ErrorCode::NonNumericValue,
            path + ": bad hour '" + r[1] + "'");
    double v = csv::parse_double_or_fail(r[2], path);
    out.push_back({d, hour, v});
  }
  return out;
}

namespace detail {

// Groups records by date; duplicate (date,hour) cells are rejected.
inline std::map<Date, std::map<int, double>> group_by_day(const std::vector<RawHourRecord>& records,
                                                          const std::string& context) {
  std::map<Date, std::map<int, double>> days;
  for (const auto& rec : records) {
    auto& day = days[rec.date];
    auto [it, inserted] = day.emplace(rec.hour, rec.value);
    (void)it;
    require(inserted, ErrorCode::DuplicateCell,
            context + ": duplicate cell at " + rec.date.to_string() + " hour " + std::to_string(rec.hour));
  }
  require(!days.empty(), ErrorCode::NonContiguousDates, context + ": no data rows");
  Date prev = days.begin()->first;
  for (auto it = std::next(days.begin()); it != days.end(); ++it) {
    require(it->first - prev == 1, ErrorCode::NonContiguousDates,
            context + ": missing calendar day between " + prev.to_string() + " and " + it->first.to_string());
    prev = it->first;
  }
  return days;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// load_panel

enum class PanelLayout { wide, long_ };

inline HourlyPanel load_panel(const std::string& path, PanelLayout layout, SeriesRole label) {
  HourlyPanel panel;
  panel.label = label;
  if (layout == PanelLayout::wide) {
    auto rows = csv::read_rows(path);
    require(!rows.empty(), ErrorCode::MissingColumn, path + ": empty file");
    const auto& header = rows.front();
    require(header.size() == static_cast<size_t>(kHours) + 1 && header[0] == "date", ErrorCode::MissingColumn,
            path + ": expected header 'date,h01,...,h24'");
    for (int h = 1; h <= kHours; ++h) {
      char want[8];
      std::snprintf(want, sizeof(want), "h%02d", h);
      require(header[static_cast<size_t>(h)] == want, ErrorCode::MissingColumn,
              path + ": missing column '" + want + "'");
    }
    std::map<Date, std::vector<double>> by_date;
    for (size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      require(r.size() == static_cast<size_t>(kHours) + 1, ErrorCode::MissingColumn,
              path + ": row " + std::to_string(i + 1) + " has wrong arity");
      Date d = parse_date_or_fail(r[0], path);
      std::vector<double> vals(kHours);
      for (int h = 0; h < kHours; ++h) vals[static_cast<size_t>(h)] = csv::parse_double_or_fail(r[static_cast<size_t>(h) + 1], path);
      auto [it, inserted] = by_date.emplace(d, std::move(vals));
      (void)it;
      require(inserted, ErrorCode::DuplicateCell, path + ": duplicate date row " + d.to_string());
    }
    require(!by_date.empty(), ErrorCode::NonContiguousDates, path + ": no data rows");
    panel.values.resize(static_cast<Eigen::Index>(by_date.size()), kHours);
    Eigen::Index i = 0;
    for (const auto& [d, vals] : by_date) {
      if (!panel.dates.empty())
        require(d - panel.dates.back() == 1, ErrorCode::NonContiguousDates,
                path + ": missing calendar day before " + d.to_string());
      panel.dates.push_back(d);
      for (int h = 0; h < kHours; ++h) panel.values(i, h) = vals[static_cast<size_t>(h)];
      ++i;
    }
  } else {
    auto records = read_long_records(path);
    auto days = detail::group_by_day(records, path);
    panel.values.resize(static_cast<Eigen::Index>(days.size()), kHours);
    Eigen::Index i = 0;
    for (const auto& [d, hours] : days) {
      require(hours.size() == static_cast<size_t>(kHours), ErrorCode::NonContiguousDates,
              path + ": day " + d.to_string() + " has " + std::to_string(hours.size()) +
                  " hours, expected 24 (load_panel does not repair clock changes; use dst_adjust)");
      for (const auto& [h, v] : hours) {
        require(h >= 1 && h <= kHours, ErrorCode::NonContiguousDates,
                path + ": day " + d.to_string() + " has hour " + std::to_string(h));
        panel.values(i, h - 1) = v;
      }
      panel.dates.push_back(d);
      ++i;
    }
  }
  panel.check_invariants();
  return panel;
}

// ---------------------------------------------------------------------------
// dst_adjust

struct DstRepairs {
  int dropped_hours = 0;        // October 25th-hour values excluded
  int interpolated_hours = 0;   // March missing-hour values filled
};

// Normalizes raw hourly records to 24 values per day: a 25-hour day drops the
// extra 25th value, a 23-hour day gets its missing hour filled with the average
// of the two adjacent hourly values in the continuous hour sequence.
inline HourlyPanel dst_adjust(const std::vector<RawHourRecord>& records, SeriesRole label = SeriesRole::price,
                              DstRepairs* repairs = nullptr) {
  auto days = detail::group_by_day(records, "dst_adjust");
  constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
  HourlyPanel panel;
  panel.label = label;
  panel.values.resize(static_cast<Eigen::Index>(days.size()), kHours);
  DstRepairs counts;
  std::vector<std::pair<Eigen::Index, int>> holes;  // (row, hour-1)
  Eigen::Index i = 0;
  for (const auto& [d, hours] : days) {
    panel.dates.push_back(d);
    if (hours.size() == 25) {
      require(hours.count(25) == 1, ErrorCode::MalformedDay,
              "dst_adjust: 25-value day " + d.to_string() + " lacks an hour-25 label");
      for (int h = 1; h <= kHours; ++h) {
        auto it = hours.find(h);
        require(it != hours.end(), ErrorCode::MalformedDay,
                "dst_adjust: day " + d.to_string() + " missing hour " + std::to_string(h));
        panel.values(i, h - 1) = it->second;
      }
      ++counts.dropped_hours;
    } else if (hours.size() == 24 || hours.size() == 23) {
      require(hours.count(25) == 0, ErrorCode::MalformedDay,
              "dst_adjust: day " + d.to_string() + " has hour 25 but only " + std::to_string(hours.size()) + " values");
      for (int h = 1; h <= kHours; ++h) {
        auto it = hours.find(h);
        if (it == hours.end()) {
          panel.values(i, h - 1) = kMissing;
          holes.emplace_back(i, h - 1);
        } else {
          panel.values(i, h - 1) = it->second;
        }
      }
    } else {
      fail(ErrorCode::MalformedDay, "dst_adjust: day " + d.to_string() + " has " + std::to_string(hours.size()) +
                                        " hourly values (expected 23, 24 or 25)");
    }
    ++i;
  }
  // Fill holes from the neighbouring hours of the flattened hourly sequence.
  const Eigen::Index T = panel.values.rows();
  auto flat = [&](Eigen::Index idx) -> double& { return panel.values(idx / kHours, idx % kHours); };
  const Eigen::Index total = T * kHours;
  for (auto [row, col] : holes) {
    Eigen::Index idx = row * kHours + col;
    Eigen::Index lo = idx - 1;
    while (lo >= 0 && std::isnan(flat(lo))) --lo;
    Eigen::Index hi = idx + 1;
    while (hi < total && std::isnan(flat(hi))) ++hi;
    double filled;
    if (lo >= 0 && hi < total)
      filled = 0.5 * (flat(lo) + flat(hi));
    else if (lo >= 0)
      filled = flat(lo);
    else if (hi < total)
      filled = flat(hi);
    else
      fail(ErrorCode::MalformedDay, "dst_adjust: cannot interpolate, no observed values");
    panel.values(row, col) = filled;
    ++counts.interpolated_hours;
  }
  if (repairs) *repairs = counts;
  panel.check_invariants();
  return panel;
}

// ---------------------------------------------------------------------------
// interpolate_fuels

struct FuelRecord {
  Date date;
  std::optional<double> co2;
  std::optional<double> gas;
  std::optional<double> coal;
};

inline std::vector<FuelRecord> read_fuel_records(const std::string& path) {
  auto rows = csv::read_rows(path);
  require(!rows.empty(), ErrorCode::MissingColumn, path + ": empty file");
  const auto& header = rows.front();
  require(header.size() == 4 && header[0] == "date" && header[1] == "co2" && header[2] == "gas" &&
              header[3] == "coal",
          ErrorCode::MissingColumn, path + ": expected header 'date,co2,gas,coal'");
  std::vector<FuelRecord> out;
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    require(r.size() == 4, ErrorCode::MissingColumn, path + ": row " + std::to_string(i + 1) + " has wrong arity");
    FuelRecord rec;
    rec.date = parse_date_or_fail(r[0], path);
    auto cell = [&](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return csv::parse_double_or_fail(s, path);
    };
    rec.co2 = cell(r[1]);
    rec.gas = cell(r[2]);
    rec.coal = cell(r[3]);
    out.push_back(rec);
  }
  return out;
}

// Linear interpolation in calendar time between the nearest observed days; the
// output covers `range` (default: the record span). No extrapolation.
inline FuelSeries interpolate_fuels(const std::vector<FuelRecord>& records,
                                    std::optional<DateRange> range = std::nullopt, int* cells_filled = nullptr) {
  require(!records.empty(), ErrorCode::LeadingGap, "interpolate_fuels: no records");
  std::map<Date, FuelRecord> by_date;
  for (const auto& r : records) {
    auto [it, inserted] = by_date.emplace(r.date, r);
    (void)it;
    require(inserted, ErrorCode::DuplicateCell, "interpolate_fuels: duplicate date " + r.date.to_string());
  }
  DateRange out_range = range.value_or(DateRange{by_date.begin()->first, by_date.rbegin()->first});
  const int T = out_range.length();
  require(T >= 1, ErrorCode::LeadingGap, "interpolate_fuels: empty date range");

  FuelSeries fs;
  fs.dates = date_sequence(out_range.start, T);
  fs.co2.resize(T);
  fs.gas.resize(T);
  fs.coal.resize(T);
  int filled = 0;

  auto fill_one = [&](auto getter, Eigen::VectorXd& out, const char* name) {
    // observation list (date serial, value)
    std::vector<std::pair<int, double>> obs;
    for (const auto& [d, rec] : by_date) {
      auto v = getter(rec);
      if (v.has_value()) obs.emplace_back(d.serial(), *v);
    }
    require(!obs.empty(), ErrorCode::LeadingGap, std::string("interpolate_fuels: no observations for ") + name);
    require(obs.front().first <= out_range.start.serial(), ErrorCode::LeadingGap,
            std::string("interpolate_fuels: ") + name + " has no observation on or before " +
                out_range.start.to_string());
    require(obs.back().first >= out_range.end.serial(), ErrorCode::TrailingGap,
            std::string("interpolate_fuels: ") + name + " has no observation on or after " +
                out_range.end.to_string());
    size_t j = 0;
    for (int i = 0; i < T; ++i) {
      int s = out_range.start.serial() + i;
      while (j + 1 < obs.size() && obs[j + 1].first <= s) ++j;
      if (obs[j].first == s) {
        out(i) = obs[j].second;
      } else {
        // obs[j].first < s < obs[j+1].first
        const auto& lo = obs[j];
        const auto& hi = obs[j + 1];
        double w = static_cast<double>(s - lo.first) / static_cast<double>(hi.first - lo.first);
        out(i) = lo.second + w * (hi.second - lo.second);
        ++filled;
      }
    }
  };
  fill_one([](const FuelRecord& r) { return r.co2; }, fs.co2, "co2");
  fill_one([](const FuelRecord& r) { return r.gas; }, fs.gas, "gas");
  fill_one([](const FuelRecord& r) { return r.coal; }, fs.coal, "coal");
  if (cells_filled) *cells_filled = filled;
  return fs;
}

// ---------------------------------------------------------------------------
// jitter_solar

// Replaces exact zeros with independent Uniform(0, epsilon) draws so the
// overnight zero blocks stop being collinear columns. Nonzero entries pass
// through untouched; deterministic given the seed.
inline HourlyPanel jitter_solar(const HourlyPanel& panel, double epsilon, std::uint64_t seed,
                                long* jittered_count = nullptr) {
  require(panel.label == SeriesRole::solar, ErrorCode::NonSolarPanel, "jitter_solar: panel label must be solar");
  require(epsilon > 0.0, ErrorCode::NonNumericValue, "jitter_solar: epsilon must be positive");
  HourlyPanel out = panel;
  Rng rng(mix_seed({seed, hash_tag("jitter_solar")}));
  long count = 0;
  for (Eigen::Index i = 0; i < out.values.rows(); ++i) {
    for (Eigen::Index h = 0; h < out.values.cols(); ++h) {
      if (out.values(i, h) == 0.0) {
        double u;
        do {
          u = rng.uniform();
        } while (u == 0.0);
        out.values(i, h) = u * epsilon;
        ++count;
      }
    }
  }
  if (jittered_count) *jittered_count = count;
  return out;
}

// ---------------------------------------------------------------------------
// calendar_dummies

inline constexpr int kDummyCount = 14;  // 12 months + Saturday + Sunday

// T x 14: columns 1-12 month indicators, 13 Saturday, 14 Sunday.
inline Eigen::MatrixXd calendar_dummies(const std::vector<Date>& dates) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dates.size()), kDummyCount);
  for (size_t i = 0; i < dates.size(); ++i) {
    auto r = static_cast<Eigen::Index>(i);
    d(r, dates[i].month() - 1) = 1.0;
    if (dates[i].is_saturday()) d(r, 12) = 1.0;
    if (dates[i].is_sunday()) d(r, 13) = 1.0;
  }
  return d;
}

inline Eigen::RowVectorXd calendar_dummies(Date date) {
  return calendar_dummies(std::vector<Date>{date}).row(0);
}

}  // namespace epf
