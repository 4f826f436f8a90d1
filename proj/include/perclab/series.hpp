#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "perclab/statistics.hpp"

namespace perc {

// How a row's estimate follows from its sums.
enum class RowKind {
  count_mean,     // mean of integer values
  second_moment,  // mean of value^2
  variance,       // unbiased variance, jackknife se
  real_mean,      // mean of real values (sum, sum of squares)
  exact,          // no sums; an exact value
};

RowKind row_kind(const std::string& observable);

struct SeriesRow {
  int n = 0;
  std::uint64_t samples = 0;
  double estimate = 0.0;
  double se = 0.0;
  std::string observable;
  int m = 0;
  std::uint64_t attempts = 0;
  MomentAccumulator sums;
  RealAccumulator real;
  bool has_sums = true;  // false for hand-written rows with empty sum columns

  // recompute samples, estimate and se from the sums
  void finalize();
};

inline constexpr int kSchemaVersion = 1;

struct Series {
  int schema = kSchemaVersion;
  std::string command;
  std::string config_hash;
  std::vector<SeriesRow> rows;

  bool empty_identity() const { return command.empty() && config_hash.empty() && rows.empty(); }
  void sort_rows();
  const SeriesRow* find(const std::string& observable, int n) const;
};

std::string format_double(double v);  // %.17g

std::string write_csv(const Series& s);
Series parse_csv(const std::string& text);

// Sums add up; exact rows must agree. Needs equal command and config hash.
Series merge(const Series& a, const Series& b);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace perc
