#include "bsts/midas.hpp"

#include "csv.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace bsts {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

Transform transform_from_code(int code) {
  if (code < 1 || code > 4) {
    throw ConfigError("transform code must be 1..4, got " + std::to_string(code));
  }
  return static_cast<Transform>(code);
}

PubLag parse_pub_lag(const std::string& text) {
  if (text == "m") return PubLag::Current;
  if (text == "m-1") return PubLag::OneMonth;
  if (text == "m-2") return PubLag::TwoMonths;
  throw ConfigError("pub_lag must be m, m-1 or m-2, got '" + text + "'");
}

std::string to_string(PubLag lag) {
  switch (lag) {
    case PubLag::Current: return "m";
    case PubLag::OneMonth: return "m-1";
    case PubLag::TwoMonths: return "m-2";
  }
  return "m";
}

MonthlySeries apply_transform(const MonthlySeries& s) {
  if (s.transform == Transform::None || s.transform == Transform::Deseasonalised) return s;
  const Index n = s.values.size();
  if (n < 2) throw DataError("series '" + s.name + "': transform needs at least 2 values");
  MonthlySeries out = s;
  out.values.resize(n - 1);
  out.first_month = s.first_month + 1;
  for (Index t = 1; t < n; ++t) {
    const double prev = s.values(t - 1);
    const double cur = s.values(t);
    if (s.transform == Transform::MonthlyChange) {
      out.values(t - 1) = cur - prev;
    } else {
      if (prev == 0.0) {
        throw DataError("series '" + s.name + "': growth rate divides by zero at index " +
                        std::to_string(t - 1));
      }
      out.values(t - 1) = 100.0 * (cur / prev - 1.0);
    }
  }
  return out;
}

Index QuarterlyPanel::column_of(const std::string& series_name, int offset) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].series == series_name && columns[i].offset == offset) return static_cast<Index>(i);
  }
  throw DimensionError("panel has no column " + series_name + "[" + std::to_string(offset) + "]");
}

Matrix skip_sample(const std::vector<MonthlySeries>& series, Index quarters, Index first_month) {
  if (quarters < 1) throw DimensionError("skip_sample: need at least one quarter");
  Matrix X(quarters, 3 * static_cast<Index>(series.size()));
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const Index start = first_month - s.first_month;
    const Index end = start + 3 * quarters;  // one past the last month used
    if (start < 0 || end > s.values.size()) {
      throw DataError("series '" + s.name + "' does not span the " + std::to_string(quarters) +
                      " quarters requested (needs months " + std::to_string(first_month) + ".." +
                      std::to_string(first_month + 3 * quarters - 1) + ", has " +
                      std::to_string(s.first_month) + ".." +
                      std::to_string(s.first_month + s.values.size() - 1) + ")");
    }
    for (Index q = 0; q < quarters; ++q) {
      for (int offset = 0; offset < 3; ++offset) {
        X(q, 3 * static_cast<Index>(k) + offset) = s.values(start + 3 * q + 2 - offset);
      }
    }
  }
  return X;
}

std::vector<ColumnMeta> skip_sample_columns(const std::vector<MonthlySeries>& series) {
  std::vector<ColumnMeta> cols;
  for (const auto& s : series) {
    for (int offset = 0; offset < 3; ++offset) cols.push_back({s.name, offset});
  }
  return cols;
}

std::vector<Vector> unskip(const Matrix& X, Index n_series) {
  if (X.cols() != 3 * n_series) throw DimensionError("unskip: expected 3 columns per series");
  std::vector<Vector> out;
  for (Index k = 0; k < n_series; ++k) {
    Vector v(3 * X.rows());
    for (Index q = 0; q < X.rows(); ++q) {
      for (int offset = 0; offset < 3; ++offset) v(3 * q + 2 - offset) = X(q, 3 * k + offset);
    }
    out.push_back(std::move(v));
  }
  return out;
}

QuarterlyPanel standardise(QuarterlyPanel panel, std::optional<Index> fit_rows) {
  const Index n = fit_rows.value_or(panel.rows());
  if (n < 2 || n > panel.rows()) throw DimensionError("standardise: need 2 <= fit rows <= T");
  const Index K = panel.X.cols();
  panel.col_means.resize(K);
  panel.col_sds.resize(K);
  for (Index j = 0; j < K; ++j) {
    const auto col = panel.X.col(j).head(n);
    const std::string label = j < static_cast<Index>(panel.columns.size())
                                  ? panel.columns[j].series + "[" +
                                        std::to_string(panel.columns[j].offset) + "]"
                                  : "column " + std::to_string(j);
    if (!col.allFinite()) throw DataError("standardise: missing values in " + label);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw DataError("standardise: zero variance in " + label);
    panel.col_means(j) = mean;
    panel.col_sds(j) = sd;
    panel.X.col(j) = (panel.X.col(j).array() - mean) / sd;
  }
  return panel;
}

Vector standardise_row(const QuarterlyPanel& panel, const Vector& raw_row) {
  if (!panel.standardised() || raw_row.size() != panel.X.cols()) {
    throw DimensionError("standardise_row: panel not standardised or row length mismatch");
  }
  return ((raw_row - panel.col_means).array() / panel.col_sds.array()).matrix();
}

QuarterlyPanel destandardise(QuarterlyPanel panel) {
  if (!panel.standardised()) return panel;
  for (Index j = 0; j < panel.X.cols(); ++j) {
    panel.X.col(j) = panel.X.col(j).array() * panel.col_sds(j) + panel.col_means(j);
  }
  panel.col_means.resize(0);
  panel.col_sds.resize(0);
  return panel;
}

// --- calendar ---------------------------------------------------------------

bool SeriesSpec::matches(const std::string& series_name) const {
  if (!name.empty() && name.back() == '*') {
    return series_name.compare(0, name.size() - 1, name, 0, name.size() - 1) == 0;
  }
  return series_name == name;
}

namespace {

bool is_pattern(const std::string& s) { return !s.empty() && s.back() == '*'; }

}  // namespace

void VintageCalendar::validate() const {
  if (entries.empty()) throw ConfigError("calendar: no vintages");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const std::string where = "calendar vintage " + std::to_string(e.vintage);
    if (e.vintage != static_cast<int>(i)) {
      throw ConfigError("calendar: vintage ids must run 0, 1, 2, ...; entry " + std::to_string(i) +
                        " has id " + std::to_string(e.vintage));
    }
    if (e.month < 1 || e.month > 5) throw ConfigError(where + ": month must be 1..5");
    if (i > 0 && e.month < entries[i - 1].month) {
      throw ConfigError(where + ": months must be non-decreasing");
    }
    for (const auto& r : e.releases) {
      if (r.series.empty()) throw ConfigError(where + ": release without series");
      for (const auto& name : r.series) {
        bool covered = false;
        for (const auto& s : series) covered = covered || s.name == name || s.matches(name);
        if (!covered) throw ConfigError(where + ": unknown series '" + name + "'");
      }
      for (int m : r.months) {
        if (m < 1 || m > 3) throw ConfigError(where + ": released months must be 1..3");
      }
    }
  }
}

const SeriesSpec& VintageCalendar::spec_for(const std::string& series_name) const {
  for (const auto& s : series) {
    if (!is_pattern(s.name) && s.name == series_name) return s;
  }
  for (const auto& s : series) {
    if (s.matches(series_name)) return s;
  }
  throw ConfigError("series '" + series_name + "' is not covered by the calendar");
}

std::set<ReleasedCell> VintageCalendar::released(int vintage,
                                                 const std::vector<std::string>& panel_series) const {
  if (vintage < 0 || vintage >= size()) {
    throw ConfigError("vintage " + std::to_string(vintage) + " out of range 0.." +
                      std::to_string(size() - 1));
  }
  std::set<ReleasedCell> cells;
  for (int v = 0; v <= vintage; ++v) {
    const auto& e = entries[static_cast<std::size_t>(v)];
    for (const auto& r : e.releases) {
      for (const auto& name : r.series) {
        std::vector<std::string> targets;
        if (is_pattern(name)) {
          const SeriesSpec pattern{name};
          for (const auto& p : panel_series) {
            if (pattern.matches(p)) targets.push_back(p);
          }
        } else {
          if (std::find(panel_series.begin(), panel_series.end(), name) == panel_series.end()) {
            throw ConfigError("calendar vintage " + std::to_string(v) + " releases '" + name +
                              "', which is not in the data");
          }
          targets.push_back(name);
        }
        for (const auto& t : targets) {
          if (!r.months.empty()) {
            for (int m : r.months) cells.insert({t, m});
            continue;
          }
          const PubLag lag = r.pub_lag.value_or(spec_for(t).pub_lag);
          const int month = e.month - static_cast<int>(lag);
          if (month >= 1 && month <= 3) cells.insert({t, month});
        }
      }
    }
  }
  return cells;
}

VintageCalendar builtin_calendar() {
  VintageCalendar c;
  const auto T = [](int code) { return static_cast<Transform>(code); };
  c.series = {
      {"fedfunds", T(3), PubLag::Current},     {"baa", T(3), PubLag::Current},
      {"gt_*", T(4), PubLag::Current},         {"uncertainty", T(1), PubLag::OneMonth},
      {"hours", T(2), PubLag::OneMonth},       {"unrate", T(2), PubLag::OneMonth},
      {"cpi", T(2), PubLag::OneMonth},         {"indpro", T(2), PubLag::OneMonth},
      {"loans", T(2), PubLag::OneMonth},       {"m2", T(2), PubLag::OneMonth},
      {"housst", T(1), PubLag::OneMonth},      {"pce", T(2), PubLag::OneMonth},
      {"pce2", T(2), PubLag::OneMonth},        {"construction", T(1), PubLag::TwoMonths},
  };
  struct Row {
    int month;
    std::string timing;
    std::vector<std::string> series;
  };
  const std::vector<std::string> rates{"fedfunds", "baa"}, gt{"gt_*"}, epu{"uncertainty"},
      jobs{"hours", "unrate"}, cpi{"cpi"}, ip{"indpro"}, credit{"loans", "m2"}, housing{"housst"},
      pce{"pce", "pce2"}, cons{"construction"};
  std::vector<Row> rows{{1, "First day of month 1", {}},
                        {1, "Last day of month 1", rates},
                        {1, "Last day of month 1", gt}};
  for (int m = 2; m <= 4; ++m) {
    const std::string of = " of month " + std::to_string(m);
    rows.push_back({m, "1st bus. day" + of, epu});
    if (m >= 3) rows.push_back({m, "1st bus. day" + of, cons});
    rows.push_back({m, "1st Friday" + of, jobs});
    rows.push_back({m, "Middle" + of, cpi});
    rows.push_back({m, "15th-17th" + of, ip});
    rows.push_back({m, "3rd week" + of, credit});
    rows.push_back({m, "Later part" + of, housing});
    rows.push_back({m, "Last week" + of, pce});
    if (m <= 3) {
      rows.push_back({m, "Last day" + of, rates});
      rows.push_back({m, "Last day" + of, gt});
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    VintageEntry e{static_cast<int>(i), rows[i].month, rows[i].timing, {}};
    if (!rows[i].series.empty()) e.releases.push_back({rows[i].series, std::nullopt, {}});
    c.entries.push_back(std::move(e));
  }
  c.entries.push_back({static_cast<int>(c.entries.size()), 5, "Later part of month 5",
                       {{{"housst"}, PubLag::TwoMonths, {}}}});
  return c;
}

VintageCalendar parse_calendar(const std::string& json_text) {
  using jsonutil::get;
  using jsonutil::get_or;
  const auto j = jsonutil::parse(json_text, "calendar");
  jsonutil::check_keys(j, {"schema", "series", "vintages"}, "calendar");
  const auto schema = get<std::string>(j, "schema", "calendar");
  if (schema != "bsts.calendar/1") throw ConfigError("calendar: unsupported schema '" + schema + "'");
  VintageCalendar c;
  const auto& series = j.at("series");
  if (!series.is_array()) throw ConfigError("calendar/series: expected an array");
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::string path = "calendar/series/" + std::to_string(i);
    jsonutil::check_keys(series[i], {"name", "transform", "pub_lag"}, path);
    c.series.push_back({get<std::string>(series[i], "name", path),
                        transform_from_code(get<int>(series[i], "transform", path)),
                        parse_pub_lag(get<std::string>(series[i], "pub_lag", path))});
  }
  const auto& vintages = j.at("vintages");
  if (!vintages.is_array()) throw ConfigError("calendar/vintages: expected an array");
  for (std::size_t i = 0; i < vintages.size(); ++i) {
    const std::string path = "calendar/vintages/" + std::to_string(i);
    const auto& v = vintages[i];
    jsonutil::check_keys(v, {"vintage", "month", "timing", "releases"}, path);
    VintageEntry e;
    e.vintage = get<int>(v, "vintage", path);
    e.month = get<int>(v, "month", path);
    e.timing = get_or<std::string>(v, "timing", "", path);
    if (v.contains("releases")) {
      const auto& rel = v.at("releases");
      if (!rel.is_array()) throw ConfigError(path + "/releases: expected an array");
      for (std::size_t r = 0; r < rel.size(); ++r) {
        const std::string rpath = path + "/releases/" + std::to_string(r);
        jsonutil::check_keys(rel[r], {"series", "pub_lag", "months"}, rpath);
        Release out;
        out.series = get<std::vector<std::string>>(rel[r], "series", rpath);
        if (rel[r].contains("pub_lag")) {
          out.pub_lag = parse_pub_lag(get<std::string>(rel[r], "pub_lag", rpath));
        }
        out.months = get_or<std::vector<int>>(rel[r], "months", {}, rpath);
        e.releases.push_back(std::move(out));
      }
    }
    c.entries.push_back(std::move(e));
  }
  c.validate();
  return c;
}

VintageCalendar read_calendar(const std::filesystem::path& path) {
  try {
    return parse_calendar(jsonutil::slurp(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string calendar_to_json(const VintageCalendar& calendar) {
  nlohmann::ordered_json j;
  j["schema"] = "bsts.calendar/1";
  j["series"] = nlohmann::ordered_json::array();
  for (const auto& s : calendar.series) {
    j["series"].push_back({{"name", s.name},
                           {"transform", static_cast<int>(s.transform)},
                           {"pub_lag", to_string(s.pub_lag)}});
  }
  j["vintages"] = nlohmann::ordered_json::array();
  for (const auto& e : calendar.entries) {
    nlohmann::ordered_json v;
    v["vintage"] = e.vintage;
    v["month"] = e.month;
    v["timing"] = e.timing;
    v["releases"] = nlohmann::ordered_json::array();
    for (const auto& r : e.releases) {
      nlohmann::ordered_json rel;
      rel["series"] = r.series;
      if (r.pub_lag) rel["pub_lag"] = to_string(*r.pub_lag);
      if (!r.months.empty()) rel["months"] = r.months;
      v["releases"].push_back(rel);
    }
    j["vintages"].push_back(v);
  }
  return j.dump(2) + "\n";
}

std::vector<Index> masked_columns(const QuarterlyPanel& panel, const VintageCalendar& calendar,
                                  int vintage) {
  for (const auto& s : panel.series) calendar.spec_for(s);
  const auto cells = calendar.released(vintage, panel.series);
  std::vector<Index> out;
  for (std::size_t j = 0; j < panel.columns.size(); ++j) {
    const auto& c = panel.columns[j];
    const int month = 3 - c.offset;
    if (!cells.count({c.series, month})) out.push_back(static_cast<Index>(j));
  }
  return out;
}

QuarterlyPanel mask_unpublished(QuarterlyPanel panel, const VintageCalendar& calendar, int vintage,
                                Index row) {
  if (row < 0 || row >= panel.rows()) throw DimensionError("mask_unpublished: row out of range");
  if (panel.columns.size() != static_cast<std::size_t>(panel.X.cols())) {
    throw DimensionError("mask_unpublished: panel is missing column metadata");
  }
  const auto masked = masked_columns(panel, calendar, vintage);
  for (Index j : masked) panel.X(row, j) = 0.0;
  for (Index j = 0; j < panel.X.cols(); ++j) {
    if (!std::isfinite(panel.X(row, j))) {
      throw DataError("vintage " + std::to_string(vintage) + ": " + panel.columns[j].series +
                      " month " + std::to_string(3 - panel.columns[j].offset) +
                      " is released by the calendar but missing in the data");
    }
  }
  return panel;
}

// --- CSV --------------------------------------------------------------------

Index parse_month(const std::string& date) {
  int y = 0, m = 0;
  char dash = 0;
  std::istringstream in(date);
  in >> y >> dash >> m;
  if (!in || dash != '-' || m < 1 || m > 12) throw DataError("bad date '" + date + "' (want YYYY-MM)");
  return static_cast<Index>(y) * 12 + (m - 1);
}

std::string format_month(Index month) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", static_cast<int>(month / 12),
                static_cast<int>(month % 12 + 1));
  return buf;
}

MonthlyData read_monthly_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const int c_date = t.column("date"), c_series = t.column("series"), c_value = t.column("value");
  std::vector<std::string> order;
  std::map<std::string, std::map<Index, double>> data;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const std::string where = t.source + ":" + std::to_string(t.line[i]);
    Index month = 0;
    try {
      month = parse_month(r[c_date]);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    const auto& name = r[c_series];
    if (name.empty()) throw DataError(where + ": empty series name");
    if (!data.count(name)) order.push_back(name);
    if (!data[name].emplace(month, csv::parse_value(r[c_value], where)).second) {
      throw DataError(where + ": duplicate observation for " + name + " " + r[c_date]);
    }
  }
  if (order.empty()) throw DataError(t.source + ": no observations");
  MonthlyData out;
  out.origin_month = std::numeric_limits<Index>::max();
  for (const auto& [name, obs] : data) out.origin_month = std::min(out.origin_month, obs.begin()->first);
  for (const auto& name : order) {
    const auto& obs = data[name];
    const Index first = obs.begin()->first;
    const Index last = obs.rbegin()->first;
    if (last - first + 1 != static_cast<Index>(obs.size())) {
      throw DataError(t.source + ": series '" + name + "' has gaps in its dates");
    }
    MonthlySeries s;
    s.name = name;
    s.first_month = first - out.origin_month;
    s.values.resize(static_cast<Index>(obs.size()));
    Index i = 0;
    for (const auto& [m, v] : obs) s.values(i++) = v;
    out.series.push_back(std::move(s));
  }
  return out;
}

QuarterlyData read_quarterly_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const int c_date = t.column("date"), c_value = t.column("value");
  QuarterlyData q;
  q.values.resize(static_cast<Index>(t.rows.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const std::string where = t.source + ":" + std::to_string(t.line[i]);
    Index month = 0;
    try {
      month = parse_month(t.rows[i][c_date]);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    const Index start = month - month % 3;
    if (i == 0) {
      q.first_month = start;
    } else if (start != q.first_month + 3 * static_cast<Index>(i)) {
      throw DataError(where + ": quarters must be consecutive");
    }
    q.values(static_cast<Index>(i)) = csv::parse_value(t.rows[i][c_value], where);
    q.labels.push_back(t.rows[i][c_date]);
  }
  if (q.values.size() == 0) throw DataError(t.source + ": no observations");
  bool seen_missing = false;
  for (Index i = 0; i < q.values.size(); ++i) {
    if (std::isnan(q.values(i))) {
      seen_missing = true;
    } else if (seen_missing) {
      throw DataError(t.source + ": only trailing quarters may be missing");
    }
  }
  return q;
}

void write_monthly_csv(const std::filesystem::path& path, const std::vector<MonthlySeries>& series,
                       Index origin_month) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "date,series,value\n";
  for (const auto& s : series) {
    for (Index i = 0; i < s.values.size(); ++i) {
      out << format_month(origin_month + s.first_month + i) << "," << s.name << ","
          << csv::num(s.values(i)) << "\n";
    }
  }
}

void write_quarterly_csv(const std::filesystem::path& path, const QuarterlyData& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "date,value\n";
  for (Index i = 0; i < data.values.size(); ++i) {
    out << format_month(data.first_month + 3 * i) << "," << csv::num(data.values(i)) << "\n";
  }
}

QuarterlyPanel build_panel(const MonthlyData& monthly, const QuarterlyData& quarterly,
                           const VintageCalendar& calendar) {
  std::vector<MonthlySeries> transformed;
  for (auto s : monthly.series) {
    const auto& spec = calendar.spec_for(s.name);
    s.transform = spec.transform;
    s.pub_lag = spec.pub_lag;
    // Rebase so month 0 is the first month of the first quarter.
    s.first_month += monthly.origin_month - quarterly.first_month;
    transformed.push_back(apply_transform(s));
  }
  QuarterlyPanel p;
  p.y = quarterly.values;
  p.X = skip_sample(transformed, quarterly.values.size(), 0);
  p.columns = skip_sample_columns(transformed);
  for (const auto& s : transformed) p.series.push_back(s.name);
  return p;
}

void write_panel_csv(const std::filesystem::path& path, const QuarterlyPanel& panel,
                     const std::vector<std::string>& labels) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "quarter,y";
  for (const auto& c : panel.columns) out << "," << c.series << "[" << c.offset << "]";
  out << "\n";
  for (Index q = 0; q < panel.rows(); ++q) {
    out << (q < static_cast<Index>(labels.size()) ? labels[q] : std::to_string(q));
    out << "," << csv::num(q < panel.y.size() ? panel.y(q) : kNaN);
    for (Index j = 0; j < panel.X.cols(); ++j) out << "," << csv::num(panel.X(q, j));
    out << "\n";
  }
}

}  // namespace bsts
