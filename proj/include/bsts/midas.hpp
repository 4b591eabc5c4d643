#pragma once

// Mixed-frequency inputs: monthly transforms, U-MIDAS skip-sampling into a
// quarterly design, standardisation and the vintage calendar that decides which
// cells of the nowcast row are observable.

#include "bsts/common.hpp"

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace bsts {

enum class Transform { MonthlyChange = 1, GrowthRate = 2, None = 3, Deseasonalised = 4 };

// Publication lag in months relative to the release month: m, m-1, m-2.
enum class PubLag { Current = 0, OneMonth = 1, TwoMonths = 2 };

Transform transform_from_code(int code);
PubLag parse_pub_lag(const std::string& text);
std::string to_string(PubLag lag);

struct MonthlySeries {
  std::string name;
  Vector values;  // time-ascending; NaN marks a missing observation
  Transform transform = Transform::None;
  PubLag pub_lag = PubLag::Current;
  // Month index (0 = first month of the first quarter) of values(0).
  Index first_month = 0;
};

// Codes 1 and 2 drop the first observation and advance first_month by one.
MonthlySeries apply_transform(const MonthlySeries& s);

struct ColumnMeta {
  std::string series;
  int offset = 0;  // 0 = last month of the quarter, 1 = middle, 2 = first
};

struct QuarterlyPanel {
  Vector y;  // may end in NaN for the quarter being nowcast
  Matrix X;  // T x 3K
  std::vector<ColumnMeta> columns;
  std::vector<std::string> series;  // one entry per K, in column-block order
  Vector col_means;                 // empty until standardised
  Vector col_sds;

  Index rows() const { return X.rows(); }
  bool standardised() const { return col_sds.size() == X.cols(); }
  Index column_of(const std::string& series_name, int offset) const;
};

// Row q holds (x[3q+2], x[3q+1], x[3q]) of every series, months counted from
// `first_month`. Offsets 0, 1, 2 of a series are contiguous.
Matrix skip_sample(const std::vector<MonthlySeries>& series, Index quarters, Index first_month = 0);
std::vector<ColumnMeta> skip_sample_columns(const std::vector<MonthlySeries>& series);

// Flattens a skip-sampled design back to monthly order (inverse of skip_sample).
std::vector<Vector> unskip(const Matrix& X, Index n_series);

// Centre and scale each column to unit sample SD (n - 1) over `fit_rows`
// (default: all rows). Throws DataError naming a zero-variance column.
QuarterlyPanel standardise(QuarterlyPanel panel, std::optional<Index> fit_rows = std::nullopt);
// Applies stored constants to a raw design row (for rows outside the fit).
Vector standardise_row(const QuarterlyPanel& panel, const Vector& raw_row);
QuarterlyPanel destandardise(QuarterlyPanel panel);

// --- vintage calendar -------------------------------------------------------

struct SeriesSpec {
  std::string name;  // exact name or a prefix pattern ending in '*', e.g. "gt_*"
  Transform transform = Transform::None;
  PubLag pub_lag = PubLag::Current;

  bool matches(const std::string& series_name) const;
};

struct Release {
  std::vector<std::string> series;
  std::optional<PubLag> pub_lag;  // overrides the series default
  std::vector<int> months;        // explicit months-in-quarter released, if given
};

struct VintageEntry {
  int vintage = 0;
  int month = 1;  // 1..5, months 4 and 5 fall after the quarter ends
  std::string timing;
  std::vector<Release> releases;
};

// A month-in-quarter (1..3) of a series that has been published.
using ReleasedCell = std::pair<std::string, int>;

struct VintageCalendar {
  std::vector<SeriesSpec> series;
  std::vector<VintageEntry> entries;

  int size() const { return static_cast<int>(entries.size()); }
  void validate() const;
  const SeriesSpec& spec_for(const std::string& series_name) const;
  // Cells released up to and including `vintage`, with patterns expanded
  // against `panel_series`.
  std::set<ReleasedCell> released(int vintage, const std::vector<std::string>& panel_series) const;
};

VintageCalendar builtin_calendar();
VintageCalendar parse_calendar(const std::string& json_text);
VintageCalendar read_calendar(const std::filesystem::path& path);
std::string calendar_to_json(const VintageCalendar& calendar);

// Zeroes the cells of `row` not yet released at `vintage`. Zero is the sample
// mean when the panel is standardised. Throws ConfigError for calendar series
// absent from the panel or panel series not covered by the calendar, and
// DataError when a released cell is missing.
QuarterlyPanel mask_unpublished(QuarterlyPanel panel, const VintageCalendar& calendar, int vintage,
                                Index row);
std::vector<Index> masked_columns(const QuarterlyPanel& panel, const VintageCalendar& calendar,
                                  int vintage);

// --- CSV --------------------------------------------------------------------

struct MonthlyData {
  std::vector<MonthlySeries> series;  // first_month relative to `origin_month`
  Index origin_month = 0;             // absolute month index, year * 12 + (month - 1)
};

struct QuarterlyData {
  Vector values;
  Index first_month = 0;  // absolute month index of the first month of the first quarter
  std::vector<std::string> labels;
};

// "YYYY-MM" or "YYYY-MM-DD" -> year * 12 + (month - 1).
Index parse_month(const std::string& date);
std::string format_month(Index month);

MonthlyData read_monthly_csv(const std::filesystem::path& path);
QuarterlyData read_quarterly_csv(const std::filesystem::path& path);
void write_monthly_csv(const std::filesystem::path& path, const std::vector<MonthlySeries>& series,
                       Index origin_month);
void write_quarterly_csv(const std::filesystem::path& path, const QuarterlyData& data);

// Applies the calendar's transforms and skip-samples onto the quarterly span.
QuarterlyPanel build_panel(const MonthlyData& monthly, const QuarterlyData& quarterly,
                           const VintageCalendar& calendar);

void write_panel_csv(const std::filesystem::path& path, const QuarterlyPanel& panel,
                     const std::vector<std::string>& labels = {});

}  // namespace bsts
